//! Scalar functions on `R^n x (R^n \ {0})` and the finite-difference stencils
//! used to differentiate them in `x` and `xi`.

use serde::{Deserialize, Serialize};

/// Where the values of a phase function come from. Tolerances and step floors
/// are scaled by this tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    OracleExact,
    Interpolated,
}

impl Provenance {
    /// Relative size of evaluation noise.
    pub fn noise(self) -> f64 {
        match self {
            Provenance::OracleExact => 1e-14,
            Provenance::Interpolated => 1e-7,
        }
    }

    /// Smallest finite-difference step that is meaningful for one second-order
    /// mixed difference at this noise level.
    pub fn min_step(self) -> f64 {
        match self {
            Provenance::OracleExact => 1e-6,
            Provenance::Interpolated => 1e-3,
        }
    }

    /// Tolerance scale relative to exact evaluation.
    pub fn tolerance_factor(self) -> f64 {
        match self {
            Provenance::OracleExact => 1.0,
            Provenance::Interpolated => 1e4,
        }
    }
}

pub trait PhaseFunction: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64;

    /// Positive-homogeneity degree in `xi`, when known.
    fn degree(&self) -> Option<f64> {
        None
    }

    fn provenance(&self) -> Provenance {
        Provenance::OracleExact
    }
}

impl<P: PhaseFunction + ?Sized> PhaseFunction for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        (**self).eval(x, xi)
    }
    fn degree(&self) -> Option<f64> {
        (**self).degree()
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
}

impl<P: PhaseFunction + ?Sized> PhaseFunction for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        (**self).eval(x, xi)
    }
    fn degree(&self) -> Option<f64> {
        (**self).degree()
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
}

/// A closure as a phase function.
pub struct FnPhase<F> {
    n: usize,
    f: F,
    degree: Option<f64>,
    provenance: Provenance,
}

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> FnPhase<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnPhase {
            n,
            f,
            degree: None,
            provenance: Provenance::OracleExact,
        }
    }

    pub fn with_degree(mut self, degree: f64) -> Self {
        self.degree = Some(degree);
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }
}

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> PhaseFunction for FnPhase<F> {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        (self.f)(x, xi)
    }
    fn degree(&self) -> Option<f64> {
        self.degree
    }
    fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// One differentiation slot of a mixed partial derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    X(usize),
    Xi(usize),
}

/// Tensor-product central difference for `d^r f / d slot_1 ... d slot_r`:
/// `sum_{s in {±1}^r} (prod s) f(p + h sum s_i e_i) / (2h)^r`.
pub fn mixed_partial<P: PhaseFunction + ?Sized>(
    f: &P,
    x: &[f64],
    xi: &[f64],
    slots: &[Slot],
    h: f64,
) -> f64 {
    let r = slots.len();
    if r == 0 {
        return f.eval(x, xi);
    }
    let mut acc = 0.0;
    let mut xs = x.to_vec();
    let mut xis = xi.to_vec();
    for signs in 0..(1usize << r) {
        xs.copy_from_slice(x);
        xis.copy_from_slice(xi);
        let mut sign = 1.0;
        for (b, slot) in slots.iter().enumerate() {
            let s = if (signs >> b) & 1 == 1 { -1.0 } else { 1.0 };
            sign *= s;
            match *slot {
                Slot::X(i) => xs[i] += s * h,
                Slot::Xi(i) => xis[i] += s * h,
            }
        }
        acc += sign * f.eval(&xs, &xis);
    }
    acc / (2.0 * h).powi(r as i32)
}

/// Central difference along the transport direction:
/// `(g(x + h xi, xi) - g(x - h xi, xi)) / (2h)`.
pub struct Transport<P> {
    inner: P,
    h: f64,
}

impl<P: PhaseFunction> Transport<P> {
    pub fn new(inner: P, h: f64) -> Self {
        Transport { inner, h }
    }
}

impl<P: PhaseFunction> PhaseFunction for Transport<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let up: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a + self.h * b).collect();
        let dn: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a - self.h * b).collect();
        (self.inner.eval(&up, xi) - self.inner.eval(&dn, xi)) / (2.0 * self.h)
    }
    fn degree(&self) -> Option<f64> {
        self.inner.degree().map(|d| d + 1.0)
    }
    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

/// `|f(x, c xi) - c^lambda f(x, xi)|` relative to `|f(x, xi)|`, for `c > 0`.
pub fn homogeneity_defect<P: PhaseFunction + ?Sized>(
    f: &P,
    x: &[f64],
    xi: &[f64],
    c: f64,
) -> Option<f64> {
    let lambda = f.degree()?;
    let base = f.eval(x, xi);
    let scaled: Vec<f64> = xi.iter().map(|v| c * v).collect();
    let lhs = f.eval(x, &scaled);
    Some((lhs - c.powf(lambda) * base).abs() / base.abs().max(f64::MIN_POSITIVE))
}
