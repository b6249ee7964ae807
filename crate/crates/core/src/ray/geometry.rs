//! Discretized line space: a direction set on the sphere, each direction with
//! a Householder frame of its orthogonal complement and a tensor grid of
//! offsets in that frame.

use serde::{Deserialize, Serialize};

use super::Line;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub n: usize,
    pub directions: usize,
    pub offsets: usize,
    pub extent: f64,
}

/// Orthonormal basis of `xi^⊥`: columns `2..n` of the Householder reflection
/// sending `e_1` to `-sign(xi_1) xi`. The frames of `xi` and `-xi` coincide
/// exactly.
pub fn householder_frame(xi: &[f64]) -> Vec<Vec<f64>> {
    let n = xi.len();
    let s = xi[0].signum();
    let mut v = xi.to_vec();
    v[0] += s;
    let vv: f64 = v.iter().map(|a| a * a).sum();
    (1..n)
        .map(|c| {
            (0..n)
                .map(|r| {
                    let e = if r == c { 1.0 } else { 0.0 };
                    e - 2.0 * v[r] * v[c] / vv
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineGeometry {
    n: usize,
    extent: f64,
    directions: Vec<Vec<f64>>,
    frames: Vec<Vec<Vec<f64>>>,
    offsets: Vec<f64>,
    #[serde(skip)]
    antipodes: Vec<Option<usize>>,
}

impl LineGeometry {
    /// Antipodally closed direction set: uniform angles for `n = 2`, a
    /// hemisphere spherical-Fibonacci set plus its exact negation for
    /// `n = 3`. Offsets are uniform on `[-extent, extent]` in every frame axis.
    pub fn build(spec: &GeometrySpec) -> Result<Self> {
        if spec.directions < 2 || spec.directions % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "direction count must be even and at least 2, got {}",
                spec.directions
            )));
        }
        if spec.offsets < 4 {
            return Err(Error::InvalidParameter(format!(
                "offset grid needs at least 4 points, got {}",
                spec.offsets
            )));
        }
        if !(spec.extent > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "offset extent must be positive, got {}",
                spec.extent
            )));
        }
        let half = spec.directions / 2;
        let mut directions: Vec<Vec<f64>> = match spec.n {
            2 => (0..half)
                .map(|i| {
                    let t = 2.0 * std::f64::consts::PI * i as f64 / spec.directions as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect(),
            3 => {
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..half)
                    .map(|i| {
                        let z = 1.0 - (i as f64 + 0.5) / half as f64;
                        let r = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        vec![r * phi.cos(), r * phi.sin(), z]
                    })
                    .collect()
            }
            n => {
                return Err(Error::Unsupported(format!(
                    "line-space grids are implemented for n = 2 and n = 3, got n = {n}"
                )))
            }
        };
        let negated: Vec<Vec<f64>> = directions
            .iter()
            .map(|d| d.iter().map(|v| -v).collect())
            .collect();
        directions.extend(negated);
        let frames = directions.iter().map(|d| householder_frame(d)).collect();
        let step = 2.0 * spec.extent / (spec.offsets - 1) as f64;
        let offsets = (0..spec.offsets)
            .map(|i| -spec.extent + i as f64 * step)
            .collect();
        let mut geo = LineGeometry {
            n: spec.n,
            extent: spec.extent,
            directions,
            frames,
            offsets,
            antipodes: Vec::new(),
        };
        geo.link_antipodes();
        Ok(geo)
    }

    pub(crate) fn link_antipodes(&mut self) {
        self.antipodes = self
            .directions
            .iter()
            .map(|d| {
                self.directions
                    .iter()
                    .position(|e| d.iter().zip(e).all(|(a, b)| *a == -*b))
            })
            .collect();
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.directions.len() != self.frames.len() {
            return Err(Error::parse(
                "geometry.frames",
                "one frame per direction required",
            ));
        }
        for (i, (d, f)) in self.directions.iter().zip(&self.frames).enumerate() {
            if d.len() != self.n || f.len() + 1 != self.n || f.iter().any(|v| v.len() != self.n) {
                return Err(Error::parse(
                    format!("geometry.directions[{i}]"),
                    "vector lengths do not match n",
                ));
            }
            let norm: f64 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::parse(
                    format!("geometry.directions[{i}]"),
                    format!("direction is not a unit vector (|xi| = {norm})"),
                ));
            }
        }
        if self.offsets.len() < 4 {
            return Err(Error::parse(
                "geometry.offsets",
                "at least 4 offsets required",
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn frame(&self, d: usize) -> &[Vec<f64>] {
        &self.frames[d]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn antipode(&self, d: usize) -> Option<usize> {
        self.antipodes.get(d).copied().flatten()
    }

    pub fn antipodally_closed(&self) -> bool {
        self.antipodes.iter().all(Option::is_some)
    }

    pub fn lines_per_direction(&self) -> usize {
        self.offsets.len().pow(self.n as u32 - 1)
    }

    pub fn line_count(&self) -> usize {
        self.directions.len() * self.lines_per_direction()
    }

    /// Offset indices of line `j` within its direction (row-major).
    pub fn offset_indices(&self, mut j: usize) -> Vec<usize> {
        let k = self.offsets.len();
        let mut idx = vec![0; self.n - 1];
        for slot in (0..self.n - 1).rev() {
            idx[slot] = j % k;
            j /= k;
        }
        idx
    }

    pub fn line(&self, d: usize, j: usize) -> Line {
        let mut x = vec![0.0; self.n];
        for (axis, &i) in self.frames[d].iter().zip(&self.offset_indices(j)) {
            let s = self.offsets[i];
            for (xc, a) in x.iter_mut().zip(axis) {
                *xc += s * a;
            }
        }
        Line::raw(x, self.directions[d].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ray::dot;

    #[test]
    fn frames_are_orthonormal_and_antipodally_shared() {
        for xi in [
            vec![0.6, 0.8],
            vec![-0.0, 1.0],
            vec![0.36, 0.48, 0.8],
            vec![0.0, 0.0, -1.0],
        ] {
            let f = householder_frame(&xi);
            let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
            assert_eq!(f, householder_frame(&neg));
            for (i, a) in f.iter().enumerate() {
                assert!(dot(a, &xi).abs() < 1e-15);
                for (j, b) in f.iter().enumerate() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((dot(a, b) - e).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn grids_are_antipodally_closed() {
        for n in [2, 3] {
            let g = LineGeometry::build(&GeometrySpec {
                n,
                directions: 16,
                offsets: 9,
                extent: 4.0,
            })
            .unwrap();
            assert!(g.antipodally_closed());
            assert_eq!(g.line_count(), 16 * 9usize.pow(n as u32 - 1));
            let a = g.antipode(3).unwrap();
            for j in 0..g.lines_per_direction() {
                assert_eq!(g.line(3, j).x(), g.line(a, j).x());
                let l = g.line(3, j);
                assert!(Line::new(l.x().to_vec(), l.xi().to_vec()).is_ok());
            }
        }
        assert!(LineGeometry::build(&GeometrySpec {
            n: 4,
            directions: 8,
            offsets: 8,
            extent: 1.0
        })
        .is_err());
    }
}
