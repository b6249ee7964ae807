//! Uniform periodic grids, their discrete Fourier images and grid versions of
//! `d` and `delta`.
//!
//! Nodes along axis `d` sit at `-L_d + i h_d`, `h_d = 2 L_d / N_d`, so the grid
//! is one period of the periodic extension. Component arrays are stored
//! component-major, each row-major over nodes (last axis fastest).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::analytic::GaussPolyField;
use super::TensorField;
use crate::error::{Error, Result};
use crate::symtensor::{colex_position_of_counts, multi_indices, sym_dim, SymTensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    shape: Vec<usize>,
    extent: Vec<f64>,
}

impl GridSpec {
    pub fn new(shape: Vec<usize>, extent: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.len() != extent.len() {
            return Err(Error::InvalidParameter(
                "grid shape and extent must be non-empty and of equal length".into(),
            ));
        }
        if let Some(&bad) = shape.iter().find(|&&s| s < 4) {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 4 nodes per axis, got {bad}"
            )));
        }
        if let Some(&bad) = extent.iter().find(|&&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid extent must be positive, got {bad}"
            )));
        }
        Ok(GridSpec { shape, extent })
    }

    /// `nodes^n` grid on `[-extent, extent)^n`.
    pub fn cube(n: usize, nodes: usize, extent: f64) -> Result<Self> {
        GridSpec::new(vec![nodes; n], vec![extent; n])
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.extent[axis] / self.shape[axis] as f64
    }

    pub fn origin(&self, axis: usize) -> f64 {
        -self.extent[axis]
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|d| self.spacing(d)).product()
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            idx[d] = flat % self.shape[d];
            flat /= self.shape[d];
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.origin(d) + i as f64 * self.spacing(d))
            .collect()
    }

    fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    /// Nodes on the seam `x_d = -L_d` (equivalently `+L_d`) of the periodic
    /// extension.
    fn on_boundary(&self, flat: usize) -> bool {
        self.unflatten(flat).contains(&0)
    }

    /// Angular wavenumber of FFT bin `i` along `axis`; the unpaired Nyquist
    /// bin of an even axis is mapped to 0 so that spectral derivatives of real
    /// data stay real.
    pub fn wavenumber(&self, axis: usize, i: usize) -> f64 {
        let n = self.shape[axis];
        let kappa = if 2 * i < n {
            i as f64
        } else if 2 * i == n {
            0.0
        } else {
            i as f64 - n as f64
        };
        2.0 * std::f64::consts::PI * kappa / (n as f64 * self.spacing(axis))
    }

    pub fn wavevector(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.wavenumber(d, i))
            .collect()
    }
}

/// In-place unnormalized n-dimensional FFT (the inverse divides by the node
/// count).
pub fn fft_nd(data: &mut [Complex64], spec: &GridSpec, inverse: bool) {
    let mut planner = FftPlanner::new();
    for axis in 0..spec.dim() {
        let len = spec.shape[axis];
        let stride = spec.stride(axis);
        let fft = if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        };
        let block = len * stride;
        let mut line = vec![Complex64::default(); len];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for base in (0..data.len()).step_by(block) {
            for off in 0..stride {
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + off + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + off + i * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Differentiation scheme for grid fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffScheme {
    Spectral,
    Central,
}

/// Symmetric-tensor samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    spec: GridSpec,
    m: usize,
    comps: Vec<Vec<f64>>,
    boundary_max: f64,
    truncated: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    n: usize,
    rank: usize,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    periodic: bool,
    layout: String,
}

impl GridField {
    pub fn zeros(spec: GridSpec, m: usize) -> Self {
        let n = spec.dim();
        let len = spec.len();
        GridField {
            spec,
            m,
            comps: vec![vec![0.0; len]; sym_dim(n, m)],
            boundary_max: 0.0,
            truncated: false,
        }
    }

    pub fn from_components(spec: GridSpec, m: usize, comps: Vec<Vec<f64>>) -> Result<Self> {
        let n = spec.dim();
        if comps.len() != sym_dim(n, m) {
            return Err(Error::DimensionMismatch {
                expected: sym_dim(n, m),
                got: comps.len(),
            });
        }
        if let Some(bad) = comps.iter().find(|c| c.len() != spec.len()) {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                got: bad.len(),
            });
        }
        let mut out = GridField {
            spec,
            m,
            comps,
            boundary_max: 0.0,
            truncated: false,
        };
        out.boundary_max = out.measure_boundary();
        Ok(out)
    }

    /// Nodewise evaluation of an analytic field. The result is flagged as
    /// truncated when the boundary magnitude reaches `cutoff`.
    pub fn sample(field: &GaussPolyField, spec: &GridSpec, cutoff: f64) -> Result<Self> {
        if field.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: field.dim(),
            });
        }
        let len = spec.len();
        let nc = sym_dim(field.dim(), field.rank());
        let nodes: Vec<Vec<f64>> = (0..len)
            .into_par_iter()
            .map(|flat| field.eval_coeffs(&spec.point(flat)))
            .collect();
        if let Some(flat) = nodes.iter().position(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::NonFinite(format!(
                "field value at grid node {:?}",
                spec.unflatten(flat)
            )));
        }
        let mut comps = vec![vec![0.0; len]; nc];
        for (flat, vals) in nodes.into_iter().enumerate() {
            for (c, v) in vals.into_iter().enumerate() {
                comps[c][flat] = v;
            }
        }
        let mut out = GridField::from_components(spec.clone(), field.rank(), comps)?;
        out.truncated = out.boundary_max >= cutoff;
        Ok(out)
    }

    fn measure_boundary(&self) -> f64 {
        (0..self.spec.len())
            .filter(|&f| self.spec.on_boundary(f))
            .flat_map(|f| self.comps.iter().map(move |c| c[f].abs()))
            .fold(0.0, f64::max)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn boundary_max(&self) -> f64 {
        self.boundary_max
    }

    /// Set when the sampled field did not decay below the cutoff at the
    /// boundary, so the periodic extension is not faithful.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn node(&self, flat: usize) -> SymTensor {
        let coeffs = self.comps.iter().map(|c| c[flat]).collect();
        SymTensor::from_coeffs(self.dim(), self.m, coeffs).expect("layout")
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |a, v| a.max(v.abs()))
    }

    fn check_congruent(&self, other: &GridField) -> Result<()> {
        if self.spec != other.spec || self.m != other.m {
            return Err(Error::RankMismatch(format!(
                "grid fields are not congruent (rank {} on {:?} vs rank {} on {:?})",
                self.m, self.spec.shape, other.m, other.spec.shape
            )));
        }
        Ok(())
    }

    /// Multiplicity-weighted L2 inner product, `h^n sum_nodes <u, w>_sym`.
    pub fn inner(&self, other: &GridField) -> Result<f64> {
        self.check_congruent(other)?;
        let mut acc = 0.0;
        for (alpha, (a, b)) in multi_indices(self.dim(), self.m)
            .iter()
            .zip(self.comps.iter().zip(&other.comps))
        {
            let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            acc += alpha.multiplicity() * s;
        }
        Ok(acc * self.spec.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).expect("self-congruent").max(0.0).sqrt()
    }

    pub fn axpy(&self, s: f64, other: &GridField) -> Result<GridField> {
        self.check_congruent(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            .collect();
        GridField::from_components(self.spec.clone(), self.m, comps)
    }

    pub fn sub(&self, other: &GridField) -> Result<GridField> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &GridField) -> Result<GridField> {
        self.axpy(1.0, other)
    }

    pub fn scale(&self, s: f64) -> GridField {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().map(|v| v * s).collect())
            .collect();
        GridField::from_components(self.spec.clone(), self.m, comps).expect("layout")
    }

    /// `partials[c][j]` = d/dx_j of component `c`.
    fn partials(&self, scheme: DiffScheme) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        let spec = &self.spec;
        self.comps
            .par_iter()
            .map(|u| match scheme {
                DiffScheme::Spectral => {
                    let mut hat: Vec<Complex64> = u.iter().map(|&v| Complex64::from(v)).collect();
                    fft_nd(&mut hat, spec, false);
                    (0..n)
                        .map(|j| {
                            let stride = spec.stride(j);
                            let len = spec.shape[j];
                            let mut d: Vec<Complex64> = hat
                                .iter()
                                .enumerate()
                                .map(|(f, v)| {
                                    let i = (f / stride) % len;
                                    v * Complex64::new(0.0, spec.wavenumber(j, i))
                                })
                                .collect();
                            fft_nd(&mut d, spec, true);
                            d.into_iter().map(|v| v.re).collect()
                        })
                        .collect()
                }
                DiffScheme::Central => (0..n)
                    .map(|j| {
                        let stride = spec.stride(j);
                        let len = spec.shape[j];
                        let h2 = 2.0 * spec.spacing(j);
                        (0..u.len())
                            .map(|f| {
                                let i = (f / stride) % len;
                                let base = f - i * stride;
                                let up = base + ((i + 1) % len) * stride;
                                let dn = base + ((i + len - 1) % len) * stride;
                                (u[up] - u[dn]) / h2
                            })
                            .collect()
                    })
                    .collect(),
            })
            .collect()
    }

    fn inner_derivative_once(&self, scheme: DiffScheme) -> GridField {
        let n = self.dim();
        let m = self.m + 1;
        let parts = self.partials(scheme);
        let len = self.spec.len();
        let comps = multi_indices(n, m)
            .iter()
            .map(|beta| {
                let mut counts = beta.counts(n);
                let mut acc = vec![0.0; len];
                for j in 0..n {
                    let c = counts[j];
                    if c == 0 {
                        continue;
                    }
                    counts[j] -= 1;
                    let src = &parts[colex_position_of_counts(&counts)][j];
                    counts[j] += 1;
                    let w = c as f64 / m as f64;
                    acc.iter_mut().zip(src).for_each(|(a, s)| *a += w * s);
                }
                acc
            })
            .collect();
        GridField::from_components(self.spec.clone(), m, comps).expect("layout")
    }

    pub fn inner_derivative(&self, order: usize, scheme: DiffScheme) -> GridField {
        let mut out = self.clone();
        for _ in 0..order {
            out = out.inner_derivative_once(scheme);
        }
        out
    }

    fn divergence_once(&self, scheme: DiffScheme) -> GridField {
        let n = self.dim();
        let m = self.m - 1;
        let parts = self.partials(scheme);
        let len = self.spec.len();
        let comps = multi_indices(n, m)
            .iter()
            .map(|alpha| {
                let mut counts = alpha.counts(n);
                let mut acc = vec![0.0; len];
                for j in 0..n {
                    counts[j] += 1;
                    let src = &parts[colex_position_of_counts(&counts)][j];
                    counts[j] -= 1;
                    acc.iter_mut().zip(src).for_each(|(a, s)| *a += s);
                }
                acc
            })
            .collect();
        GridField::from_components(self.spec.clone(), m, comps).expect("layout")
    }

    pub fn divergence(&self, order: usize, scheme: DiffScheme) -> Result<GridField> {
        if order > self.m {
            return Err(Error::ContractionTooDeep {
                order,
                rank: self.m,
            });
        }
        let mut out = self.clone();
        for _ in 0..order {
            out = out.divergence_once(scheme);
        }
        Ok(out)
    }

    /// Writes `path` (flat little-endian doubles, component-major) and a JSON
    /// sidecar at `path` + `.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for c in &self.comps {
            for v in c {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        let sidecar = Sidecar {
            n: self.dim(),
            rank: self.m,
            shape: self.spec.shape.clone(),
            spacing: (0..self.dim()).map(|d| self.spec.spacing(d)).collect(),
            origin: (0..self.dim()).map(|d| self.spec.origin(d)).collect(),
            periodic: true,
            layout: "component-major, row-major nodes, colex components, f64 little-endian".into(),
        };
        let file = File::create(sidecar_path(path))?;
        serde_json::to_writer_pretty(file, &sidecar)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<GridField> {
        let sidecar: Sidecar =
            serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
        if sidecar.shape.len() != sidecar.n {
            return Err(Error::parse("shape", "length differs from n"));
        }
        let extent: Vec<f64> = sidecar
            .shape
            .iter()
            .zip(&sidecar.spacing)
            .map(|(&s, &h)| s as f64 * h / 2.0)
            .collect();
        let spec = GridSpec::new(sidecar.shape.clone(), extent)?;
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        let len = spec.len();
        let nc = sym_dim(sidecar.n, sidecar.rank);
        if bytes.len() != 8 * len * nc {
            return Err(Error::parse(
                "data",
                format!("expected {} doubles, found {} bytes", len * nc, bytes.len()),
            ));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let comps = vals.chunks(len).map(<[f64]>::to_vec).collect();
        GridField::from_components(spec, sidecar.rank, comps)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl TensorField for GridField {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn rank(&self) -> usize {
        self.m
    }

    /// Multilinear interpolation; zero outside the sampled box.
    fn eval(&self, x: &[f64]) -> SymTensor {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for d in 0..n {
            let s = (x[d] - self.spec.origin(d)) / self.spec.spacing(d);
            if !(s >= 0.0) || s > (self.spec.shape[d] - 1) as f64 {
                return SymTensor::zeros(n, self.m);
            }
            let i = (s.floor() as usize).min(self.spec.shape[d] - 2);
            base[d] = i;
            frac[d] = s - i as f64;
        }
        let mut coeffs = vec![0.0; self.comps.len()];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut flat = 0;
            for d in 0..n {
                let bit = (corner >> d) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                flat += (base[d] + bit) * self.spec.stride(d);
            }
            if w == 0.0 {
                continue;
            }
            for (c, comp) in self.comps.iter().enumerate() {
                coeffs[c] += w * comp[flat];
            }
        }
        SymTensor::from_coeffs(n, self.m, coeffs).expect("layout")
    }

    fn effective_radius(&self) -> f64 {
        self.spec.extent.iter().map(|e| e * e).sum::<f64>().sqrt()
    }
}

/// Complex packed coefficients per FFT bin.
#[derive(Debug, Clone)]
pub struct FrequencyField {
    spec: GridSpec,
    m: usize,
    comps: Vec<Vec<Complex64>>,
}

impl FrequencyField {
    pub fn forward(field: &GridField) -> FrequencyField {
        let spec = field.spec.clone();
        let comps = field
            .comps
            .par_iter()
            .map(|c| {
                let mut hat: Vec<Complex64> = c.iter().map(|&v| Complex64::from(v)).collect();
                fft_nd(&mut hat, &spec, false);
                hat
            })
            .collect();
        FrequencyField {
            spec,
            m: field.m,
            comps,
        }
    }

    pub fn zeros(spec: GridSpec, m: usize) -> FrequencyField {
        let nc = sym_dim(spec.dim(), m);
        let len = spec.len();
        FrequencyField {
            spec,
            m,
            comps: vec![vec![Complex64::default(); len]; nc],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn bin(&self, flat: usize) -> Vec<Complex64> {
        self.comps.iter().map(|c| c[flat]).collect()
    }

    pub fn set_bin(&mut self, flat: usize, values: &[Complex64]) {
        for (c, v) in self.comps.iter_mut().zip(values) {
            c[flat] = *v;
        }
    }

    /// Inverse transform; returns the real part and the largest discarded
    /// imaginary magnitude.
    pub fn inverse(&self) -> (GridField, f64) {
        let parts: Vec<(Vec<f64>, f64)> = self
            .comps
            .par_iter()
            .map(|c| {
                let mut v = c.clone();
                fft_nd(&mut v, &self.spec, true);
                let im = v.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
                (v.into_iter().map(|z| z.re).collect(), im)
            })
            .collect();
        let im = parts.iter().fold(0.0f64, |a, p| a.max(p.1));
        let comps = parts.into_iter().map(|p| p.0).collect();
        (
            GridField::from_components(self.spec.clone(), self.m, comps).expect("layout"),
            im,
        )
    }
}
