//! Splitting `f = g + d^k v` with `delta^k g = 0`.
//!
//! Pointwise in frequency the splitting is algebraic: `f̂(y) = ĝ + i_{y⊗k} ŵ`
//! with `j_{y⊗k} ĝ = 0`. Since the symbol of `d` is `i · i_y`, the potential
//! is `v̂ = ŵ / i^k`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{DiffScheme, FrequencyField, GridField};
use crate::symtensor::{
    colex_position_of_counts, multi_indices, sym_dim, symmetrize, FullTensor, SymTensor,
};

const SINGULAR_FREQUENCY: f64 = 1e-14;

/// Symmetric tensor with complex coefficients, held as real and imaginary
/// parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexSymTensor {
    pub re: SymTensor,
    pub im: SymTensor,
}

impl ComplexSymTensor {
    pub fn new(re: SymTensor, im: SymTensor) -> Result<Self> {
        if (re.dim(), re.rank()) != (im.dim(), im.rank()) {
            return Err(Error::RankMismatch(
                "real and imaginary parts differ in shape".into(),
            ));
        }
        Ok(ComplexSymTensor { re, im })
    }

    pub fn real(re: SymTensor) -> Self {
        let im = SymTensor::zeros(re.dim(), re.rank());
        ComplexSymTensor { re, im }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        ComplexSymTensor {
            re: SymTensor::zeros(n, m),
            im: SymTensor::zeros(n, m),
        }
    }

    pub fn from_coeffs(n: usize, m: usize, c: &[Complex64]) -> Result<Self> {
        let re = SymTensor::from_coeffs(n, m, c.iter().map(|z| z.re).collect())?;
        let im = SymTensor::from_coeffs(n, m, c.iter().map(|z| z.im).collect())?;
        Ok(ComplexSymTensor { re, im })
    }

    pub fn coeffs(&self) -> Vec<Complex64> {
        self.re
            .coeffs()
            .iter()
            .zip(self.im.coeffs())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.re.dim()
    }

    pub fn rank(&self) -> usize {
        self.re.rank()
    }

    /// Multiplicity-weighted Hermitian norm.
    pub fn norm(&self) -> f64 {
        (self.re.inner(&self.re) + self.im.inner(&self.im)).sqrt()
    }

    pub fn sub(&self, other: &ComplexSymTensor) -> ComplexSymTensor {
        ComplexSymTensor {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }
}

/// Index tables for `i_y` and `j_y` between consecutive ranks.
struct SplitPlan {
    n: usize,
    m: usize,
    k: usize,
    /// `up[r]`: `(out, axis, in, weight)` for `i_y` from rank `m-k+r`.
    up: Vec<Vec<(usize, usize, usize, f64)>>,
    /// `down[r]`: `(out, axis, in)` for `j_y` from rank `m-r` to `m-r-1`.
    down: Vec<Vec<(usize, usize, usize)>>,
    weights: Vec<f64>,
}

impl SplitPlan {
    fn new(n: usize, m: usize, k: usize) -> Self {
        let up = (0..k)
            .map(|r| {
                let rank = m - k + r + 1;
                let mut t = Vec::new();
                for (out, beta) in multi_indices(n, rank).iter().enumerate() {
                    let mut counts = beta.counts(n);
                    for j in 0..n {
                        let c = counts[j];
                        if c == 0 {
                            continue;
                        }
                        counts[j] -= 1;
                        t.push((
                            out,
                            j,
                            colex_position_of_counts(&counts),
                            c as f64 / rank as f64,
                        ));
                        counts[j] += 1;
                    }
                }
                t
            })
            .collect();
        let down = (0..k)
            .map(|r| {
                let rank = m - r - 1;
                let mut t = Vec::new();
                for (out, alpha) in multi_indices(n, rank).iter().enumerate() {
                    let mut counts = alpha.counts(n);
                    for j in 0..n {
                        counts[j] += 1;
                        t.push((out, j, colex_position_of_counts(&counts)));
                        counts[j] -= 1;
                    }
                }
                t
            })
            .collect();
        let weights = multi_indices(n, m - k)
            .iter()
            .map(|a| a.multiplicity())
            .collect();
        SplitPlan {
            n,
            m,
            k,
            up,
            down,
            weights,
        }
    }

    /// `i_{y⊗k}` from rank `m-k` to `m`.
    fn lift(&self, v: &[f64], y: &[f64]) -> Vec<f64> {
        let mut cur = v.to_vec();
        for (r, table) in self.up.iter().enumerate() {
            let mut next = vec![0.0; sym_dim(self.n, self.m - self.k + r + 1)];
            for &(out, j, inp, w) in table {
                next[out] += w * y[j] * cur[inp];
            }
            cur = next;
        }
        cur
    }

    /// `j_{y⊗k}` from rank `m` to `m-k`.
    fn lower(&self, w: &[f64], y: &[f64]) -> Vec<f64> {
        let mut cur = w.to_vec();
        for (r, table) in self.down.iter().enumerate() {
            let mut next = vec![0.0; sym_dim(self.n, self.m - r - 1)];
            for &(out, j, inp) in table {
                next[out] += y[j] * cur[inp];
            }
            cur = next;
        }
        cur
    }

    /// Returns `(ĝ, ŵ)` with `f = ĝ + i_{y⊗k} ŵ` and `j_{y⊗k} ĝ = 0`.
    fn split(&self, f: &[Complex64], y: &[f64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let len = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len < SINGULAR_FREQUENCY {
            return Err(Error::SingularFrequency(len));
        }
        let d = self.weights.len();
        // Weighted normal matrix W (j∘i), symmetric positive definite for y != 0.
        let mut a = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        for b in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[b] = 1.0;
            let col = self.lower(&self.lift(&e, y), y);
            for (r, v) in col.iter().enumerate() {
                a[(r, b)] = self.weights[r] * v;
            }
        }
        let chol = a.cholesky().ok_or_else(|| {
            Error::Solver(format!(
                "normal matrix not positive definite at |y| = {len:e}"
            ))
        })?;
        let re: Vec<f64> = f.iter().map(|z| z.re).collect();
        let im: Vec<f64> = f.iter().map(|z| z.im).collect();
        let rhs = |part: &[f64]| {
            let jf = self.lower(part, y);
            DVector::from_iterator(d, jf.iter().zip(&self.weights).map(|(a, w)| a * w))
        };
        let v_re = chol.solve(&rhs(&re));
        let v_im = chol.solve(&rhs(&im));
        let lift_re = self.lift(v_re.as_slice(), y);
        let lift_im = self.lift(v_im.as_slice(), y);
        let g = f
            .iter()
            .zip(lift_re.iter().zip(&lift_im))
            .map(|(z, (a, b))| z - Complex64::new(*a, *b))
            .collect();
        let v = v_re
            .iter()
            .zip(v_im.iter())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Ok((g, v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FreqProjection {
    pub y: Vec<f64>,
    pub g_hat: ComplexSymTensor,
    pub v_hat: ComplexSymTensor,
}

fn check_split(f: &ComplexSymTensor, y: &[f64], k: usize) -> Result<()> {
    if y.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: y.len(),
        });
    }
    if k > f.rank() {
        return Err(Error::ContractionTooDeep {
            order: k,
            rank: f.rank(),
        });
    }
    Ok(())
}

/// Algebraic splitting `f̂ = ĝ + i_{y⊗k} v̂`, `j_{y⊗k} ĝ = 0`, by the weighted
/// normal equations `(j∘i) v̂ = j f̂`.
pub fn freq_project(f_hat: &ComplexSymTensor, y: &[f64], k: usize) -> Result<FreqProjection> {
    check_split(f_hat, y, k)?;
    let (n, m) = (f_hat.dim(), f_hat.rank());
    let plan = SplitPlan::new(n, m, k);
    let (g, v) = plan.split(&f_hat.coeffs(), y)?;
    Ok(FreqProjection {
        y: y.to_vec(),
        g_hat: ComplexSymTensor::from_coeffs(n, m, &g)?,
        v_hat: ComplexSymTensor::from_coeffs(n, m - k, &v)?,
    })
}

/// Applies the `n x n` matrix `a` to slot `slot` of a full tensor.
fn apply_slot(t: &FullTensor, slot: usize, a: &[Vec<f64>]) -> FullTensor {
    let mut out = FullTensor::zeros(t.n, t.m);
    for (tuple, _) in t.tuples() {
        let mut src = tuple.clone();
        let mut acc = 0.0;
        for (j, row_val) in a[tuple[slot]].iter().enumerate() {
            if *row_val == 0.0 {
                continue;
            }
            src[slot] = j;
            acc += row_val * t.get(&src);
        }
        out.set(&tuple, acc);
    }
    out
}

/// The explicit product formula for `ĝ`: the first `k` slots go through
/// `I - ŷ^{⊗k} ŷ^{⊗k}`, the remaining `m-k` slots through the tangential
/// projector `I - ŷ ŷ`, and the result is symmetrized.
pub fn projector_formula(
    f_hat: &ComplexSymTensor,
    y: &[f64],
    k: usize,
) -> Result<ComplexSymTensor> {
    check_split(f_hat, y, k)?;
    let len = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len < SINGULAR_FREQUENCY {
        return Err(Error::SingularFrequency(len));
    }
    let n = y.len();
    let m = f_hat.rank();
    let yh: Vec<f64> = y.iter().map(|v| v / len).collect();
    let tangential: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 1.0 } else { 0.0 } - yh[i] * yh[j])
                .collect()
        })
        .collect();
    let apply = |part: &SymTensor| -> SymTensor {
        let mut t = part.unpack();
        for slot in k..m {
            t = apply_slot(&t, slot, &tangential);
        }
        // (I - ŷ^k ŷ^k) on the leading k slots.
        let mut out = t.clone();
        for (tuple, _) in t.tuples() {
            let lead: f64 = tuple[..k].iter().map(|&i| yh[i]).product();
            if lead == 0.0 {
                continue;
            }
            let mut contracted = 0.0;
            let mut src = tuple.clone();
            for flat in 0..n.pow(k as u32) {
                let mut rem = flat;
                let mut w = 1.0;
                for slot in (0..k).rev() {
                    src[slot] = rem % n;
                    rem /= n;
                    w *= yh[src[slot]];
                }
                contracted += w * t.get(&src);
            }
            out.set(&tuple, t.get(&tuple) - lead * contracted);
        }
        symmetrize(&out)
    };
    ComplexSymTensor::new(apply(&f_hat.re), apply(&f_hat.im))
}

/// Output of [`decompose_k`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub g: GridField,
    pub v: GridField,
    /// Largest imaginary magnitude discarded by the inverse transforms,
    /// relative to the largest `|f|`.
    pub imag_residue: f64,
    /// Set when `f` does not decay below `1e-10` (relative) at the grid seam.
    pub boundary_warning: bool,
}

/// Spectral `k`-solenoidal / `k`-potential decomposition of a grid field.
///
/// Every nonzero bin is split by [`freq_project`]'s normal equations; the
/// `y = 0` bin (and any bin whose wavevector vanishes after the Nyquist
/// convention) goes wholly to `g`.
pub fn decompose_k(f: &GridField, k: usize) -> Result<Decomposition> {
    let n = f.dim();
    let m = f.rank();
    if k < 1 || k > m.min(n - 1) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..=min(n-1, m) = 1..={}",
            m.min(n - 1)
        )));
    }
    let scale = f.max_abs();
    let boundary_warning = f.boundary_max() > 1e-10 * scale.max(f64::MIN_POSITIVE);
    let spec = f.spec().clone();
    let fhat = FrequencyField::forward(f);
    let plan = SplitPlan::new(n, m, k);
    // v̂ = ŵ / i^k
    let phase = Complex64::new(0.0, -1.0).powu(k as u32);
    let bins: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..spec.len())
        .into_par_iter()
        .map(|flat| {
            let y = spec.wavevector(flat);
            let fb = fhat.bin(flat);
            match plan.split(&fb, &y) {
                Ok((g, w)) => Ok((g, w.into_iter().map(|z| z * phase).collect())),
                Err(Error::SingularFrequency(_)) => {
                    Ok((fb, vec![Complex64::default(); sym_dim(n, m - k)]))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut ghat = FrequencyField::zeros(spec.clone(), m);
    let mut vhat = FrequencyField::zeros(spec.clone(), m - k);
    for (flat, (g, v)) in bins.iter().enumerate() {
        ghat.set_bin(flat, g);
        vhat.set_bin(flat, v);
    }
    let (g, im_g) = ghat.inverse();
    let (v, im_v) = vhat.inverse();
    Ok(Decomposition {
        g,
        v,
        imag_residue: im_g.max(im_v) / scale.max(f64::MIN_POSITIVE),
        boundary_warning,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub k: usize,
    /// `||f - g - d^k v|| / ||f||`.
    pub reconstruction: f64,
    /// `||delta^k g|| / ||d^k f||`.
    pub solenoidality: f64,
    /// Seam magnitude of `g` and `v`, relative to the largest `|f|`.
    pub g_boundary: f64,
    pub v_boundary: f64,
}

pub fn verify_decomposition(
    f: &GridField,
    g: &GridField,
    v: &GridField,
    k: usize,
    scheme: DiffScheme,
) -> Result<DecompositionReport> {
    if g.spec() != f.spec() || v.spec() != f.spec() {
        return Err(Error::InvalidParameter("grids are not congruent".into()));
    }
    if g.rank() != f.rank() || v.rank() + k != f.rank() {
        return Err(Error::RankMismatch(format!(
            "expected ranks (m, m, m-k) = ({0}, {0}, {1}), got ({2}, {3}, {4})",
            f.rank(),
            f.rank() as isize - k as isize,
            f.rank(),
            g.rank(),
            v.rank()
        )));
    }
    let residual = f.sub(g)?.sub(&v.inner_derivative(k, scheme))?;
    let fnorm = f.l2_norm().max(f64::MIN_POSITIVE);
    let dk_f = f
        .inner_derivative(k, scheme)
        .l2_norm()
        .max(f64::MIN_POSITIVE);
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    Ok(DecompositionReport {
        k,
        reconstruction: residual.l2_norm() / fnorm,
        solenoidality: g.divergence(k, scheme)?.l2_norm() / dk_f,
        g_boundary: g.boundary_max() / scale,
        v_boundary: v.boundary_max() / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{GaussPoly, GridSpec, Poly};
    use crate::random::{random_sym, random_unit, seeded};
    use crate::symtensor::{contract, sym_mult};

    fn rel(a: &ComplexSymTensor, b: &ComplexSymTensor) -> f64 {
        a.sub(b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn orthogonal_split_of_a_vector() {
        let f = ComplexSymTensor::real(SymTensor::vector(&[2.0, 3.0]));
        let p = freq_project(&f, &[1.0, 0.0], 1).unwrap();
        assert_eq!(p.g_hat.re.coeffs(), &[0.0, 3.0]);
        assert_eq!(p.v_hat.re.coeffs(), &[2.0]);
        let g = projector_formula(&f, &[1.0, 0.0], 1).unwrap();
        assert_eq!(g.re.coeffs(), &[0.0, 3.0]);
    }

    #[test]
    fn pure_potential_and_pure_solenoidal_inputs() {
        let mut rng = seeded(11);
        for (n, m, k) in [(2, 2, 1), (3, 3, 2), (3, 2, 2)] {
            let y = random_unit(&mut rng, n);
            let u = ComplexSymTensor::new(
                random_sym(&mut rng, n, m - k),
                random_sym(&mut rng, n, m - k),
            )
            .unwrap();
            let f = ComplexSymTensor::new(
                sym_mult(&u.re, &y, k).unwrap(),
                sym_mult(&u.im, &y, k).unwrap(),
            )
            .unwrap();
            let p = freq_project(&f, &y, k).unwrap();
            assert!(p.g_hat.norm() < 1e-10 * f.norm());
            assert!(rel(&p.v_hat, &u) < 1e-10);

            let sol = p.g_hat.clone();
            let raw = ComplexSymTensor::new(random_sym(&mut rng, n, m), random_sym(&mut rng, n, m))
                .unwrap();
            let g = freq_project(&raw, &y, k).unwrap().g_hat;
            assert!(contract(&g.re, &y, k).unwrap().max_abs() < 1e-12);
            let again = freq_project(&g, &y, k).unwrap();
            assert!(rel(&again.g_hat, &g) < 1e-10);
            assert!(again.v_hat.norm() < 1e-10 * g.norm());
            drop(sol);
        }
        let f = ComplexSymTensor::real(SymTensor::vector(&[1.0, 0.0]));
        assert!(matches!(
            freq_project(&f, &[0.0, 0.0], 1),
            Err(Error::SingularFrequency(_))
        ));
    }

    #[test]
    fn projector_formula_agrees_where_it_factorizes() {
        let mut rng = seeded(3);
        for (m, k) in [(2, 1), (2, 2), (3, 1), (3, 3)] {
            for _ in 0..20 {
                let y: Vec<f64> = (0..3).map(|_| crate::random::normal(&mut rng)).collect();
                let f =
                    ComplexSymTensor::new(random_sym(&mut rng, 3, m), random_sym(&mut rng, 3, m))
                        .unwrap();
                let a = freq_project(&f, &y, k).unwrap().g_hat;
                let b = projector_formula(&f, &y, k).unwrap();
                assert!(rel(&b, &a) < 1e-10, "(m,k)=({m},{k}): {}", rel(&b, &a));
            }
        }
    }

    /// For 2 <= k < m the product formula annihilates j_{y⊗k} but leaves a
    /// remainder outside the range of i_{y⊗k}, so it differs from the unique
    /// splitting.
    #[test]
    fn projector_formula_is_not_the_splitting_for_intermediate_k() {
        let mut rng = seeded(4);
        let y = random_unit(&mut rng, 3);
        let f =
            ComplexSymTensor::new(random_sym(&mut rng, 3, 3), random_sym(&mut rng, 3, 3)).unwrap();
        let a = freq_project(&f, &y, 2).unwrap().g_hat;
        let b = projector_formula(&f, &y, 2).unwrap();
        assert!(contract(&b.re, &y, 2).unwrap().max_abs() < 1e-12);
        assert!(rel(&b, &a) > 1e-3);
    }

    #[test]
    fn decomposition_of_a_gradient() {
        let mut p = Poly::zero(2);
        p.add_term(vec![1, 0], 1.0);
        p.add_term(vec![0, 0], 0.5);
        let w = GaussPoly::scalar(1.0, p).unwrap();
        let spec = GridSpec::cube(2, 64, 7.0).unwrap();
        let f = GridField::sample(&w.inner_derivative(1), &spec, 1e-12).unwrap();
        let d = decompose_k(&f, 1).unwrap();
        assert!(d.g.l2_norm() / f.l2_norm() < 1e-6);
        assert!(d.imag_residue < 1e-10);
        let report = verify_decomposition(&f, &d.g, &d.v, 1, DiffScheme::Spectral).unwrap();
        assert!(report.reconstruction < 1e-10);
        assert!(report.solenoidality < 1e-10);
        let exact = GridField::sample(&w, &spec, 1e-12).unwrap();
        // The potential is fixed up to the constant carried by the zero bin.
        let diff = d.v.sub(&exact).unwrap();
        let c = diff.components()[0].clone();
        let spread =
            c.iter().cloned().fold(f64::MIN, f64::max) - c.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-8, "{spread}");
        assert!(decompose_k(&f, 2).is_err());
    }

    #[test]
    fn negative_controls() {
        let mut p = Poly::zero(2);
        p.add_term(vec![1, 1], 1.0);
        p.add_term(vec![2, 0], 1.0);
        let u = GaussPoly::new(2, 1, 1.0, vec![p.clone(), p.scale(-0.3)]).unwrap();
        let spec = GridSpec::cube(2, 48, 7.0).unwrap();
        let f = GridField::sample(&u, &spec, 1e-12).unwrap();
        let zero_v = GridField::zeros(spec.clone(), 0);
        let r = verify_decomposition(&f, &f, &zero_v, 1, DiffScheme::Spectral).unwrap();
        assert!(r.solenoidality > 1e-3);
        let zero_g = GridField::zeros(spec.clone(), 1);
        let r = verify_decomposition(&f, &zero_g, &zero_v, 1, DiffScheme::Spectral).unwrap();
        assert!(r.reconstruction > 0.5);
    }
}
