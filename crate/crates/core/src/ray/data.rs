use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::LineGeometry;
use super::quadrature::{QuadratureMoments, QuadratureRule, Scheme};
use super::{dot, Line, MomentSource, OracleMoments};
use crate::error::{Error, Result};
use crate::fields::{GaussPolyField, TensorField};
use crate::phase::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub scheme: Scheme,
    pub nodes: usize,
    pub radius: f64,
}

/// Sampled `(phi^0, ..., phi^k)` of a rank-`m` field on a line-space grid.
///
/// `moments[l]` is a flat array, row-major over (direction, offset line).
/// As a [`MomentSource`] the data interpolate: cubic in angle (`n = 2`) or
/// barycentric over the three nearest directions (`n = 3`), times cubic
/// Lagrange in each offset axis, zero beyond the offset grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentData {
    geometry: LineGeometry,
    m: usize,
    k: usize,
    moments: Vec<Vec<f64>>,
    quadrature: Option<QuadratureMeta>,
    truncated: bool,
}

fn collect<S: MomentSource + ?Sized>(
    source: &S,
    geometry: &LineGeometry,
    k: usize,
) -> Result<Vec<Vec<f64>>> {
    let per = geometry.lines_per_direction();
    let rows: Vec<Vec<f64>> = (0..geometry.line_count())
        .into_par_iter()
        .map(|flat| {
            let line = geometry.line(flat / per, flat % per);
            (0..=k).map(|l| source.moment(l, &line)).collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..=k)
        .map(|l| rows.iter().map(|r| r[l]).collect())
        .collect())
}

fn check_orders(m: usize, k: usize, geometry: &LineGeometry, n: usize) -> Result<()> {
    if k > m {
        return Err(Error::InvalidParameter(format!(
            "highest moment k = {k} exceeds the rank m = {m}"
        )));
    }
    if geometry.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: geometry.dim(),
            got: n,
        });
    }
    Ok(())
}

/// `phi^l = I^l f` on every grid line by quadrature.
pub fn batch_transform<F: TensorField + ?Sized>(
    field: &F,
    geometry: &LineGeometry,
    k: usize,
    rule: &QuadratureRule,
) -> Result<MomentData> {
    check_orders(field.rank(), k, geometry, field.dim())?;
    let source = QuadratureMoments::new(field, rule.clone());
    let moments = collect(&source, geometry, k)?;
    Ok(MomentData {
        geometry: geometry.clone(),
        m: field.rank(),
        k,
        moments,
        quadrature: Some(QuadratureMeta {
            scheme: rule.scheme(),
            nodes: rule.count(),
            radius: rule.radius(),
        }),
        truncated: source.truncated(),
    })
}

/// `phi^l = I^l f` on every grid line from the closed form.
pub fn batch_oracle(
    field: &GaussPolyField,
    geometry: &LineGeometry,
    k: usize,
) -> Result<MomentData> {
    check_orders(field.rank(), k, geometry, field.dim())?;
    let moments = collect(&OracleMoments::new(field), geometry, k)?;
    Ok(MomentData {
        geometry: geometry.clone(),
        m: field.rank(),
        k,
        moments,
        quadrature: None,
        truncated: false,
    })
}

fn cubic_weights(u: f64) -> [f64; 4] {
    [
        -u * (u - 1.0) * (u - 2.0) / 6.0,
        (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
        -(u + 1.0) * u * (u - 2.0) / 2.0,
        (u + 1.0) * u * (u - 1.0) / 6.0,
    ]
}

impl MomentData {
    /// Builds data from raw arrays, e.g. after editing values.
    pub fn from_parts(geometry: LineGeometry, m: usize, moments: Vec<Vec<f64>>) -> Result<Self> {
        if moments.is_empty() {
            return Err(Error::MissingMoment(0));
        }
        let k = moments.len() - 1;
        check_orders(m, k, &geometry, geometry.dim())?;
        let data = MomentData {
            geometry,
            m,
            k,
            moments,
            quadrature: None,
            truncated: false,
        };
        data.validate()?;
        Ok(data)
    }

    fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.moments.len() != self.k + 1 {
            return Err(Error::parse(
                "moments",
                format!(
                    "expected {} moment arrays, found {}",
                    self.k + 1,
                    self.moments.len()
                ),
            ));
        }
        let lines = self.geometry.line_count();
        for (l, arr) in self.moments.iter().enumerate() {
            if arr.len() != lines {
                return Err(Error::parse(
                    format!("moments[{l}]"),
                    format!("expected {lines} values, found {}", arr.len()),
                ));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> &LineGeometry {
        &self.geometry
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self, order: usize) -> &[f64] {
        &self.moments[order]
    }

    pub fn quadrature(&self) -> Option<&QuadratureMeta> {
        self.quadrature.as_ref()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn value(&self, order: usize, d: usize, j: usize) -> f64 {
        self.moments[order][d * self.geometry.lines_per_direction() + j]
    }

    /// `phi^l(x, -xi) - (-1)^{m-l} phi^l(x, xi)` over all antipodal pairs, as
    /// a max-abs residual relative to the largest `|phi^l|`. `None` when the
    /// direction set is not antipodally closed.
    pub fn parity_residual(&self, order: usize) -> Option<f64> {
        if !self.geometry.antipodally_closed() {
            return None;
        }
        let sign = if (self.m - order) % 2 == 0 { 1.0 } else { -1.0 };
        let per = self.geometry.lines_per_direction();
        let mut worst = 0.0f64;
        for d in 0..self.geometry.directions().len() {
            let a = self.geometry.antipode(d)?;
            for j in 0..per {
                let r = self.value(order, a, j) - sign * self.value(order, d, j);
                worst = worst.max(r.abs());
            }
        }
        let scale = self.moments[order]
            .iter()
            .fold(0.0f64, |s, v| s.max(v.abs()));
        Some(if scale > 0.0 { worst / scale } else { worst })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut data: MomentData = serde_json::from_str(s)?;
        data.geometry.link_antipodes();
        data.validate()?;
        if data.k > data.m {
            return Err(Error::parse("k", "highest moment exceeds rank"));
        }
        Ok(data)
    }

    /// Cubic interpolation over the offset grid of direction `d`.
    fn offset_interp(&self, order: usize, d: usize, s: &[f64]) -> f64 {
        let offs = self.geometry.offsets();
        let count = offs.len() as isize;
        let step = offs[1] - offs[0];
        let mut base = Vec::with_capacity(s.len());
        let mut weights = Vec::with_capacity(s.len());
        for &si in s {
            let u = (si - offs[0]) / step;
            let i0 = u.floor();
            base.push(i0 as isize - 1);
            weights.push(cubic_weights(u - i0));
        }
        let dims = s.len();
        let mut acc = 0.0;
        for corner in 0..4usize.pow(dims as u32) {
            let mut w = 1.0;
            let mut j = 0usize;
            let mut inside = true;
            let mut c = corner;
            for slot in 0..dims {
                let off = c % 4;
                c /= 4;
                let idx = base[slot] + off as isize;
                if idx < 0 || idx >= count {
                    inside = false;
                    break;
                }
                w *= weights[slot][off];
                j = j * count as usize + idx as usize;
            }
            if inside && w != 0.0 {
                acc += w * self.value(order, d, j);
            }
        }
        acc
    }

    fn at_direction(&self, order: usize, d: usize, x: &[f64]) -> f64 {
        let s: Vec<f64> = self.geometry.frame(d).iter().map(|a| dot(a, x)).collect();
        self.offset_interp(order, d, &s)
    }

    fn interpolate(&self, order: usize, line: &Line) -> f64 {
        let dirs = self.geometry.directions();
        let xi = line.xi();
        match self.geometry.dim() {
            2 => {
                let count = dirs.len();
                let step = 2.0 * std::f64::consts::PI / count as f64;
                let theta = xi[1].atan2(xi[0]).rem_euclid(2.0 * std::f64::consts::PI);
                let u = theta / step;
                let i0 = u.floor();
                let w = cubic_weights(u - i0);
                (0..4)
                    .map(|o| {
                        let d = (i0 as isize - 1 + o as isize).rem_euclid(count as isize) as usize;
                        w[o] * self.at_direction(order, d, line.x())
                    })
                    .sum()
            }
            _ => {
                let mut best: Vec<(f64, usize)> = dirs
                    .iter()
                    .enumerate()
                    .map(|(i, d)| (-dot(d, xi), i))
                    .collect();
                best.select_nth_unstable_by(2, |a, b| a.0.total_cmp(&b.0));
                let tri = [best[0].1, best[1].1, best[2].1];
                let mat = Matrix3::from_columns(&[
                    Vector3::from_row_slice(&dirs[tri[0]]),
                    Vector3::from_row_slice(&dirs[tri[1]]),
                    Vector3::from_row_slice(&dirs[tri[2]]),
                ]);
                let target = Vector3::from_row_slice(xi);
                match mat.lu().solve(&target) {
                    Some(lam) if lam.sum().abs() > 1e-12 => {
                        let lam = lam / lam.sum();
                        tri.iter()
                            .zip(lam.iter())
                            .map(|(&d, &w)| w * self.at_direction(order, d, line.x()))
                            .sum()
                    }
                    _ => {
                        let nearest = best
                            .iter()
                            .min_by(|a, b| a.0.total_cmp(&b.0))
                            .expect("directions");
                        self.at_direction(order, nearest.1, line.x())
                    }
                }
            }
        }
    }
}

impl MomentSource for MomentData {
    fn dim(&self) -> usize {
        self.geometry.dim()
    }
    fn rank(&self) -> usize {
        self.m
    }
    fn max_order(&self) -> usize {
        self.k
    }
    fn moment(&self, order: usize, line: &Line) -> Result<f64> {
        if order > self.k {
            return Err(Error::MissingMoment(order));
        }
        Ok(self.interpolate(order, line))
    }
    fn provenance(&self) -> Provenance {
        Provenance::Interpolated
    }
}
