//! Fourier-slice identities, the linear systems behind pointwise injectivity
//! of the moment transforms, and the kernel of the truncated transform.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{directional_power, GaussPolyField};
use crate::helmholtz::ComplexSymTensor;
use crate::random::{random_vector, seeded};
use crate::ray::{
    dot, householder_frame, moment_oracle, Line, PhasePoint, QuadratureMoments, QuadratureRule,
};
use crate::symtensor::{binomial, factorial, multi_indices, sym_dim, sym_mult, SymTensor};

/// Relative singular-value threshold for numerical rank.
pub const RANK_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RowKind {
    /// `<t, sigma(y^l ⊗ zeta^(m-l))>`, one of the moment conditions.
    Moment { order: usize },
    /// `<t, sigma(y^(k+p) ⊗ zeta^(m-k-p))>`, one of the divergence conditions.
    Divergence { power: usize },
}

/// Linear conditions on packed rank-`m` coefficients at one frequency.
#[derive(Debug, Clone)]
pub struct SliceSystem {
    n: usize,
    m: usize,
    k: usize,
    y: Vec<f64>,
    basis: Vec<Vec<f64>>,
    rows: DMatrix<f64>,
    kinds: Vec<RowKind>,
}

/// `sum_{l<=k} C(n+m-l-2, m-l) + sum_{r<m-k} C(n+r-2, r)`.
pub fn expected_rows(n: usize, m: usize, k: usize) -> usize {
    let moments: usize = (0..=k.min(m)).map(|l| binomial(n + m - l - 2, m - l)).sum();
    let divergence: usize = (0..m.saturating_sub(k))
        .map(|r| binomial(n + r - 2, r))
        .sum();
    moments + divergence
}

/// Row vector of `t -> <t, s>` in packed coordinates.
fn functional(s: &SymTensor) -> Vec<f64> {
    s.indices()
        .iter()
        .zip(s.coeffs())
        .map(|(a, c)| a.multiplicity() * c)
        .collect()
}

/// `sigma(y^l ⊗ zeta_1^(j_1) ⊗ ... ⊗ zeta_(n-1)^(j_(n-1)))` for every
/// exponent tuple `j` of total degree `d`, in colex order.
fn conditions(y: &[f64], basis: &[Vec<f64>], l: usize, d: usize) -> Vec<SymTensor> {
    let n = y.len();
    let base = sym_mult(&SymTensor::scalar(n, 1.0), y, l).expect("dimension");
    multi_indices(n - 1, d)
        .iter()
        .map(|mono| {
            let mut t = base.clone();
            for (zeta, &e) in basis.iter().zip(&mono.counts(n - 1)) {
                t = sym_mult(&t, zeta, e).expect("dimension");
            }
            t
        })
        .collect()
}

/// Builds the moment rows `l = 0..=k` and the divergence rows
/// `p = 1..=m-k` at frequency `y`.
pub fn assemble_slice_system(n: usize, m: usize, k: usize, y: &[f64]) -> Result<SliceSystem> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidParameter("slice systems need n >= 2".into()));
    }
    if k > m {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds m = {m}")));
    }
    let len = dot(y, y).sqrt();
    if len < 1e-14 {
        return Err(Error::SingularFrequency(len));
    }
    let unit: Vec<f64> = y.iter().map(|v| v / len).collect();
    let basis = householder_frame(&unit);
    let mut rows = Vec::new();
    let mut kinds = Vec::new();
    for l in 0..=k {
        for t in conditions(y, &basis, l, m - l) {
            rows.push(functional(&t));
            kinds.push(RowKind::Moment { order: l });
        }
    }
    for p in 1..=(m - k) {
        for t in conditions(y, &basis, k + p, m - k - p) {
            rows.push(functional(&t));
            kinds.push(RowKind::Divergence { power: p });
        }
    }
    let cols = sym_dim(n, m);
    let rows = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
    Ok(SliceSystem {
        n,
        m,
        k,
        y: y.to_vec(),
        basis,
        rows,
        kinds,
    })
}

impl SliceSystem {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn frequency(&self) -> &[f64] {
        &self.y
    }

    /// Orthonormal basis of `y^⊥`.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    pub fn row_count(&self) -> usize {
        self.rows.nrows()
    }

    /// Row values `<t, s_r>` for a packed tensor.
    pub fn apply(&self, t: &SymTensor) -> Result<Vec<f64>> {
        if t.dim() != self.n || t.rank() != self.m {
            return Err(Error::RankMismatch(format!(
                "expected (n, m) = ({}, {}), got ({}, {})",
                self.n,
                self.m,
                t.dim(),
                t.rank()
            )));
        }
        Ok((&self.rows * DVector::from_column_slice(t.coeffs()))
            .as_slice()
            .to_vec())
    }

    /// Least-squares solution of `rows · t = rhs`, separately for real and
    /// imaginary parts.
    pub fn solve(&self, rhs: &[Complex64]) -> Result<ComplexSymTensor> {
        if rhs.len() != self.row_count() {
            return Err(Error::DimensionMismatch {
                expected: self.row_count(),
                got: rhs.len(),
            });
        }
        let svd = self.rows.clone().svd(true, true);
        let part = |f: fn(&Complex64) -> f64| -> Result<Vec<f64>> {
            let b = DVector::from_iterator(rhs.len(), rhs.iter().map(f));
            let x = svd
                .solve(&b, RANK_THRESHOLD * svd.singular_values.max())
                .map_err(|e| Error::Solver(e.to_string()))?;
            Ok(x.as_slice().to_vec())
        };
        ComplexSymTensor::new(
            SymTensor::from_coeffs(self.n, self.m, part(|z| z.re)?)?,
            SymTensor::from_coeffs(self.n, self.m, part(|z| z.im)?)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankProbe {
    pub rank: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub full: bool,
}

/// Numerical rank at relative threshold [`RANK_THRESHOLD`].
pub fn rank_probe(system: &SliceSystem) -> RankProbe {
    let sv = system.rows.clone().singular_values();
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    let rank = sv
        .iter()
        .filter(|&&s| s > RANK_THRESHOLD * sigma_max)
        .count();
    RankProbe {
        rank,
        sigma_min,
        sigma_max,
        full: rank == sym_dim(system.n, system.m),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeTrial {
    pub trial: usize,
    pub y: Vec<f64>,
    pub rows: usize,
    pub rank: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

/// Rank probes at `trials` standard-normal frequencies drawn from `seed`.
pub fn probe_generic(
    n: usize,
    m: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<ProbeTrial>> {
    let mut rng = seeded(seed);
    let ys: Vec<Vec<f64>> = (0..trials).map(|_| random_vector(&mut rng, n)).collect();
    ys.into_par_iter()
        .enumerate()
        .map(|(trial, y)| {
            let system = assemble_slice_system(n, m, k, &y)?;
            let probe = rank_probe(&system);
            Ok(ProbeTrial {
                trial,
                rows: system.row_count(),
                y,
                rank: probe.rank,
                sigma_min: probe.sigma_min,
                sigma_max: probe.sigma_max,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceCheck {
    /// Discrete transform of `I^q f(., xi)` over `xi^⊥` at `y`.
    pub lhs: Complex64,
    /// `(2 pi)^(1/2) i^q <xi, d_y>^q <f̂(y), xi^m>`.
    pub rhs: Complex64,
    /// Sum of `|terms|` of the discrete transform.
    pub scale: f64,
    /// `|lhs - rhs| / scale`.
    pub deviation: f64,
}

/// Compares both sides of the slice identity for `I^q`.
///
/// The left side is a trapezoidal sum over `samples^(n-1)` nodes of the
/// periodic grid `[-extent, extent)^(n-1)` in the Householder frame of
/// `xi`, evaluated directly at `y`.
pub fn slice_check(
    field: &GaussPolyField,
    xi: &[f64],
    y: &[f64],
    q: usize,
    samples: usize,
    extent: f64,
) -> Result<SliceCheck> {
    let n = field.dim();
    for v in [xi, y] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
    }
    if (dot(xi, xi).sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::NotALine("direction must be a unit vector".into()));
    }
    if dot(xi, y).abs() > 1e-12 * dot(y, y).sqrt().max(1.0) {
        return Err(Error::InvalidParameter(
            "frequency must be orthogonal to the direction".into(),
        ));
    }
    if samples < 4 || !(extent > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need samples >= 4 and extent > 0, got {samples} and {extent}"
        )));
    }
    let frame = householder_frame(xi);
    let eta: Vec<f64> = frame.iter().map(|z| dot(z, y)).collect();
    let step = 2.0 * extent / samples as f64;
    let dims = n - 1;
    let total = samples.pow(dims as u32);
    let weight = step.powi(dims as i32) / (2.0 * std::f64::consts::PI).powf(dims as f64 / 2.0);
    // Terms are computed in parallel and summed in a fixed order so that
    // results do not depend on the thread count.
    let terms: Vec<(Complex64, f64)> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut u = vec![0.0; dims];
            for c in u.iter_mut() {
                *c = -extent + (rem % samples) as f64 * step;
                rem /= samples;
            }
            let mut x = vec![0.0; n];
            for (c, z) in u.iter().zip(&frame) {
                for (xi_, zi) in x.iter_mut().zip(z) {
                    *xi_ += c * zi;
                }
            }
            let p = PhasePoint::new(x, xi.to_vec()).expect("unit direction");
            let val = moment_oracle(field, &p, q) * weight;
            let phase = -dot(&u, &eta);
            (Complex64::from_polar(val, phase), val.abs())
        })
        .collect();
    let (lhs, scale) = terms
        .iter()
        .fold((Complex64::default(), 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let spectral = field.fourier().contract_power(xi);
    let derived = directional_power(&spectral, xi, q);
    let value = derived.eval_coeffs(y)[0];
    let rhs = (2.0 * std::f64::consts::PI).sqrt() * Complex64::new(0.0, 1.0).powu(q as u32) * value;
    let scale = scale.max(f64::MIN_POSITIVE);
    Ok(SliceCheck {
        lhs,
        rhs,
        scale,
        deviation: (lhs - rhs).norm() / scale,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    pub k: usize,
    pub lines: usize,
    /// Largest `∫ |t|^l |<f, xi^m>| dt` over the sampled lines and `l <= k+1`.
    pub scale: f64,
    /// `max_{l <= k} |I^l f|`, relative to `scale`.
    pub residual: f64,
    /// `max |I^(k+1) f|`, relative to `scale`; generically nonzero.
    pub control: f64,
    /// Largest deviation of `I^(k+1) f` from `(-1)^(k+1) (k+1)! I^0 v`,
    /// relative to `scale`.
    pub control_identity: f64,
}

/// Moments of `f = d^(k+1) v` on the given lines.
pub fn kernel_check(v: &GaussPolyField, k: usize, lines: &[Line]) -> Result<KernelReport> {
    if let Some(bad) = lines.iter().find(|l| l.dim() != v.dim()) {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            got: bad.dim(),
        });
    }
    let f = v.inner_derivative(k + 1);
    let rule = QuadratureRule::default_for(f.effective_radius().max(1.0))?;
    let quad = QuadratureMoments::new(&f, rule);
    let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
    let ident = sign * factorial(k + 1);
    let per_line: Vec<(f64, f64, f64, f64)> = lines
        .par_iter()
        .map(|line| {
            let p: PhasePoint = line.clone().into();
            let residual = (0..=k)
                .map(|l| moment_oracle(&f, &p, l).abs())
                .fold(0.0, f64::max);
            let top = moment_oracle(&f, &p, k + 1);
            let identity = (top - ident * moment_oracle(v, &p, 0)).abs();
            let scale = (0..=k + 1)
                .map(|l| quad.numeric(l, line).abs_integral)
                .fold(0.0, f64::max);
            (residual, top.abs(), identity, scale)
        })
        .collect();
    let fold = |sel: fn(&(f64, f64, f64, f64)) -> f64| per_line.iter().map(sel).fold(0.0, f64::max);
    let scale = fold(|t| t.3).max(f64::MIN_POSITIVE);
    Ok(KernelReport {
        k,
        lines: lines.len(),
        scale,
        residual: fold(|t| t.0) / scale,
        control: fold(|t| t.1) / scale,
        control_identity: fold(|t| t.2) / scale,
    })
}
