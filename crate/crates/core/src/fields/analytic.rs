//! Closed-form fields `p_alpha(x) exp(-w |x|^2)`.
//!
//! The family is closed under symmetrized differentiation, divergence and the
//! Fourier transform, so every operator here is exact up to rounding.

use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::poly::{Poly, Scalar};
use crate::error::{Error, Result};
use crate::symtensor::{
    colex_position_of_counts, factorial, multi_indices, sym_dim, MultiIndex, SymTensor,
};

/// Boundary magnitude below which a Gaussian-polynomial field is treated as
/// numerically supported.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// Symmetric-tensor field with components `p_alpha(x) exp(-width |x|^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussPoly<T> {
    n: usize,
    m: usize,
    width: f64,
    components: Vec<Poly<T>>,
}

/// Real field in space; `width` is the Gaussian parameter `a`.
pub type GaussPolyField = GaussPoly<f64>;

/// Fourier image of a [`GaussPolyField`]; `width` is `1/(4a)`.
pub type SpectralField = GaussPoly<Complex64>;

impl<T: Scalar> GaussPoly<T> {
    pub fn new(n: usize, m: usize, width: f64, components: Vec<Poly<T>>) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Gaussian width must be positive, got {width}"
            )));
        }
        if components.len() != sym_dim(n, m) {
            return Err(Error::DimensionMismatch {
                expected: sym_dim(n, m),
                got: components.len(),
            });
        }
        if let Some(bad) = components.iter().find(|p| p.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.dim(),
            });
        }
        Ok(GaussPoly {
            n,
            m,
            width,
            components,
        })
    }

    pub fn zero(n: usize, m: usize, width: f64) -> Self {
        GaussPoly {
            n,
            m,
            width,
            components: vec![Poly::zero(n); sym_dim(n, m)],
        }
    }

    pub fn scalar(width: f64, p: Poly<T>) -> Result<Self> {
        let n = p.dim();
        GaussPoly::new(n, 0, width, vec![p])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.m
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn components(&self) -> &[Poly<T>] {
        &self.components
    }

    pub fn component(&self, tuple: &[usize]) -> &Poly<T> {
        let idx = MultiIndex::from_unsorted(tuple.to_vec(), self.n).expect("index in range");
        &self.components[idx.position()]
    }

    pub fn degree(&self) -> u32 {
        self.components.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Poly::is_zero)
    }

    fn gaussian(&self, x: &[f64]) -> f64 {
        (-self.width * x.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    /// Packed component values at `x`.
    pub fn eval_coeffs(&self, x: &[f64]) -> Vec<T> {
        let g = T::from(self.gaussian(x));
        self.components.iter().map(|p| p.eval(x) * g).collect()
    }

    /// `<f(x), xi^m>`.
    pub fn eval_power(&self, x: &[f64], xi: &[f64]) -> T {
        let mut acc = T::zero();
        for (alpha, p) in multi_indices(self.n, self.m).iter().zip(&self.components) {
            if p.is_zero() {
                continue;
            }
            let mono: f64 = alpha.entries().iter().map(|&i| xi[i]).product();
            acc = acc + p.eval(x) * T::from(alpha.multiplicity() * mono);
        }
        acc * T::from(self.gaussian(x))
    }

    /// Polynomial factor of `d/dx_j (p exp(-w|x|^2))`.
    fn diff_poly(&self, p: &Poly<T>, j: usize) -> Poly<T> {
        p.diff(j)
            .add(&p.mul_var(j).scale(T::from(-2.0 * self.width)))
    }

    pub fn add(&self, other: &GaussPoly<T>) -> Result<GaussPoly<T>> {
        if (self.n, self.m) != (other.n, other.m) {
            return Err(Error::RankMismatch(format!(
                "cannot add (n={}, m={}) and (n={}, m={})",
                self.n, self.m, other.n, other.m
            )));
        }
        if self.width != other.width {
            return Err(Error::InvalidParameter(
                "fields with different Gaussian widths cannot be added".into(),
            ));
        }
        Ok(GaussPoly {
            n: self.n,
            m: self.m,
            width: self.width,
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn scale(&self, s: T) -> GaussPoly<T> {
        GaussPoly {
            n: self.n,
            m: self.m,
            width: self.width,
            components: self.components.iter().map(|p| p.scale(s)).collect(),
        }
    }

    fn inner_derivative_once(&self) -> GaussPoly<T> {
        let n = self.n;
        let m = self.m + 1;
        let norm = T::from(1.0 / m as f64);
        let components = multi_indices(n, m)
            .iter()
            .map(|beta| {
                let mut counts = beta.counts(n);
                let mut acc = Poly::zero(n);
                for j in 0..n {
                    let c = counts[j];
                    if c == 0 {
                        continue;
                    }
                    counts[j] -= 1;
                    let u = &self.components[colex_position_of_counts(&counts)];
                    counts[j] += 1;
                    acc = acc.add(&self.diff_poly(u, j).scale(T::from(c as f64)));
                }
                acc.scale(norm)
            })
            .collect();
        GaussPoly {
            n,
            m,
            width: self.width,
            components,
        }
    }

    /// `d^order`: symmetrized derivative applied `order` times.
    pub fn inner_derivative(&self, order: usize) -> GaussPoly<T> {
        let mut out = self.clone();
        for _ in 0..order {
            out = out.inner_derivative_once();
        }
        out
    }

    fn divergence_once(&self) -> GaussPoly<T> {
        let n = self.n;
        let m = self.m - 1;
        let components = multi_indices(n, m)
            .iter()
            .map(|alpha| {
                let mut counts = alpha.counts(n);
                let mut acc = Poly::zero(n);
                for j in 0..n {
                    counts[j] += 1;
                    let u = &self.components[colex_position_of_counts(&counts)];
                    counts[j] -= 1;
                    acc = acc.add(&self.diff_poly(u, j));
                }
                acc
            })
            .collect();
        GaussPoly {
            n,
            m,
            width: self.width,
            components,
        }
    }

    /// `delta^order`: divergence applied `order` times.
    pub fn divergence(&self, order: usize) -> Result<GaussPoly<T>> {
        if order > self.m {
            return Err(Error::ContractionTooDeep {
                order,
                rank: self.m,
            });
        }
        let mut out = self.clone();
        for _ in 0..order {
            out = out.divergence_once();
        }
        Ok(out)
    }

    /// Derivative along a fixed vector: `sum_j dir_j d/dx_j`, componentwise.
    pub fn directional_derivative(&self, dir: &[f64]) -> GaussPoly<T> {
        let components = self
            .components
            .iter()
            .map(|p| {
                let mut acc = Poly::zero(self.n);
                for (j, &d) in dir.iter().enumerate() {
                    if d != 0.0 {
                        acc = acc.add(&self.diff_poly(p, j).scale(T::from(d)));
                    }
                }
                acc
            })
            .collect();
        GaussPoly {
            n: self.n,
            m: self.m,
            width: self.width,
            components,
        }
    }

    /// Scalar field `<f, xi^m>` for a fixed `xi`.
    pub fn contract_power(&self, xi: &[f64]) -> GaussPoly<T> {
        let mut acc = Poly::zero(self.n);
        for (alpha, p) in multi_indices(self.n, self.m).iter().zip(&self.components) {
            let mono: f64 = alpha.entries().iter().map(|&i| xi[i]).product();
            acc = acc.add(&p.scale(T::from(alpha.multiplicity() * mono)));
        }
        GaussPoly {
            n: self.n,
            m: 0,
            width: self.width,
            components: vec![acc],
        }
    }

    /// Field of rank `m - r` obtained by fixing the leading `r` indices.
    pub fn restrict(&self, fixed: &[usize]) -> Result<GaussPoly<T>> {
        if fixed.len() > self.m {
            return Err(Error::ContractionTooDeep {
                order: fixed.len(),
                rank: self.m,
            });
        }
        if let Some(&bad) = fixed.iter().find(|&&i| i >= self.n) {
            return Err(Error::InvalidIndex(format!(
                "axis {} out of range",
                bad + 1
            )));
        }
        let rest = self.m - fixed.len();
        let components = multi_indices(self.n, rest)
            .iter()
            .map(|beta| {
                let mut t = fixed.to_vec();
                t.extend_from_slice(beta.entries());
                self.component(&t).clone()
            })
            .collect();
        Ok(GaussPoly {
            n: self.n,
            m: rest,
            width: self.width,
            components,
        })
    }
}

impl GaussPolyField {
    pub fn eval(&self, x: &[f64]) -> SymTensor {
        SymTensor::from_coeffs(self.n, self.m, self.eval_coeffs(x)).expect("layout")
    }

    /// Smallest radius `R` with `exp(-a R^2) * max_{|x|=R} |p| < cutoff`,
    /// located beyond the peak of the bound.
    pub fn radius_for_cutoff(&self, cutoff: f64) -> f64 {
        let a = self.width;
        let deg = self.degree() as f64;
        let bound = |r: f64| {
            let b: f64 = self
                .components
                .iter()
                .map(|p| p.magnitude_bound(r))
                .fold(0.0, f64::max);
            b * (-a * r * r).exp()
        };
        let mut r = (deg / (2.0 * a)).sqrt();
        while bound(r) >= cutoff {
            r += 0.05;
        }
        r
    }

    pub fn effective_radius(&self) -> f64 {
        self.radius_for_cutoff(SUPPORT_CUTOFF)
    }

    /// Unitary Fourier transform `(2 pi)^{-n/2} int exp(-i<x,y>) f(x) dx`,
    /// computed monomial by monomial via `x_j -> i d/dy_j`.
    pub fn fourier(&self) -> SpectralField {
        let a = self.width;
        let b = 1.0 / (4.0 * a);
        let pref = (2.0 * a).powf(-(self.n as f64) / 2.0);
        let n = self.n;
        let i = Complex64::new(0.0, 1.0);
        let hermite = |pow: &[u32]| -> Poly<Complex64> {
            let mut q = Poly::constant(n, Complex64::new(1.0, 0.0));
            for (j, &e) in pow.iter().enumerate() {
                for _ in 0..e {
                    let d = q
                        .diff(j)
                        .add(&q.mul_var(j).scale(Complex64::from(-2.0 * b)));
                    q = d.scale(i);
                }
            }
            q
        };
        let components = self
            .components
            .iter()
            .map(|p| {
                let mut acc = Poly::zero(n);
                for (pow, c) in p.terms() {
                    acc = acc.add(&hermite(pow).scale(Complex64::from(c * pref)));
                }
                acc
            })
            .collect();
        GaussPoly {
            n,
            m: self.m,
            width: b,
            components,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut comps = Map::new();
        for (alpha, p) in multi_indices(self.n, self.m).iter().zip(&self.components) {
            let terms: Vec<Value> = p
                .terms()
                .map(|(pow, c)| json!({"c": c, "pow": pow}))
                .collect();
            comps.insert(alpha.key(), Value::Array(terms));
        }
        json!({"n": self.n, "m": self.m, "a": self.width, "components": comps})
    }

    /// Parses the JSON field description; diagnostics name the offending key.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value =
            serde_json::from_str(s).map_err(|e| Error::parse("<root>", e.to_string()))?;
        Self::from_json(&v)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::parse("<root>", "expected a JSON object"))?;
        let get_uint = |key: &str| -> Result<usize> {
            obj.get(key)
                .ok_or_else(|| Error::parse(key, "missing key"))?
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::parse(key, "expected a non-negative integer"))
        };
        let n = get_uint("n")?;
        if n == 0 || n > 9 {
            return Err(Error::parse("n", format!("dimension {n} outside 1..=9")));
        }
        let m = get_uint("m")?;
        if m > 8 {
            return Err(Error::parse("m", format!("rank {m} is too large")));
        }
        let a = obj
            .get("a")
            .ok_or_else(|| Error::parse("a", "missing key"))?
            .as_f64()
            .ok_or_else(|| Error::parse("a", "expected a number"))?;
        if !(a > 0.0) {
            return Err(Error::parse(
                "a",
                format!("Gaussian width must be positive, got {a}"),
            ));
        }
        let comps = obj
            .get("components")
            .ok_or_else(|| Error::parse("components", "missing key"))?
            .as_object()
            .ok_or_else(|| Error::parse("components", "expected an object"))?;
        let mut components = vec![Poly::zero(n); sym_dim(n, m)];
        for (key, terms) in comps {
            let path = format!("components.{key}");
            let alpha = MultiIndex::parse_key(key, n, m)
                .map_err(|e| Error::parse(path.clone(), e.to_string()))?;
            let terms = terms
                .as_array()
                .ok_or_else(|| Error::parse(path.clone(), "expected an array of terms"))?;
            let mut p = Poly::zero(n);
            for (t, term) in terms.iter().enumerate() {
                let tpath = format!("{path}[{t}]");
                let c = term
                    .get("c")
                    .and_then(Value::as_f64)
                    .ok_or_else(|| Error::parse(format!("{tpath}.c"), "expected a number"))?;
                let pow = term
                    .get("pow")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::parse(format!("{tpath}.pow"), "expected an array"))?;
                if pow.len() != n {
                    return Err(Error::parse(
                        format!("{tpath}.pow"),
                        format!("expected {n} exponents, got {}", pow.len()),
                    ));
                }
                let pow = pow
                    .iter()
                    .map(|e| e.as_u64().map(|e| e as u32))
                    .collect::<Option<Vec<u32>>>()
                    .ok_or_else(|| {
                        Error::parse(
                            format!("{tpath}.pow"),
                            "exponents must be non-negative integers",
                        )
                    })?;
                p.add_term(pow, c);
            }
            components[alpha.position()] = components[alpha.position()].add(&p);
        }
        GaussPoly::new(n, m, a, components)
    }
}

impl SpectralField {
    /// Real and imaginary packed parts at frequency `y`.
    pub fn eval_split(&self, y: &[f64]) -> (SymTensor, SymTensor) {
        let vals = self.eval_coeffs(y);
        let re = vals.iter().map(|c| c.re).collect();
        let im = vals.iter().map(|c| c.im).collect();
        (
            SymTensor::from_coeffs(self.n, self.m, re).expect("layout"),
            SymTensor::from_coeffs(self.n, self.m, im).expect("layout"),
        )
    }
}

/// Exact `<xi, d_y>^q` of a scalar spectral field.
pub fn directional_power(field: &SpectralField, dir: &[f64], q: usize) -> SpectralField {
    let mut out = field.clone();
    for _ in 0..q {
        out = out.directional_derivative(dir);
    }
    out
}

/// `m!` as used by the restricted-transform normalization.
pub fn rank_factor(m: usize, r: usize) -> f64 {
    factorial(m - r) / factorial(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_scalar(n: usize, a: f64) -> GaussPolyField {
        GaussPoly::scalar(a, Poly::constant(n, 1.0)).unwrap()
    }

    #[test]
    fn eval_examples() {
        let f = gaussian_scalar(2, 1.0);
        assert_eq!(f.eval(&[0.0, 0.0]).coeffs(), &[1.0]);
        let v = f.eval(&[0.6, 0.8]).coeffs()[0];
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        let tail = f.eval(&[10.0, 0.0]).coeffs()[0];
        assert!(tail.abs() < 1e-40);
    }

    #[test]
    fn gradient_of_gaussian() {
        let f = gaussian_scalar(2, 1.0);
        let d = f.inner_derivative(1);
        assert_eq!(d.rank(), 1);
        let x = [0.3, -0.7];
        let g = (-(0.09 + 0.49f64)).exp();
        let v = d.eval(&x);
        assert!((v.get(&[0]) + 2.0 * 0.3 * g).abs() < 1e-15);
        assert!((v.get(&[1]) - 2.0 * 0.7 * g).abs() < 1e-15);
        assert_eq!(f.inner_derivative(0), f);
    }

    #[test]
    fn hessian_against_finite_differences() {
        let mut p = Poly::zero(2);
        p.add_term(vec![1, 1], 1.0);
        let u = GaussPoly::scalar(1.0, p).unwrap();
        let d2 = u.inner_derivative(2);
        let x = [0.3, -0.2];
        let h = 1e-4;
        let uval = |x: &[f64]| u.eval(x).coeffs()[0];
        for i in 0..2 {
            for j in 0..2 {
                let mut e = [[0.0; 2]; 2];
                e[0][i] += h;
                e[1][j] += h;
                let at = |si: f64, sj: f64| {
                    uval(&[
                        x[0] + si * e[0][0] + sj * e[1][0],
                        x[1] + si * e[0][1] + sj * e[1][1],
                    ])
                };
                let fd =
                    (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
                let exact = d2.eval(&x).get(&[i, j]);
                assert!((fd - exact).abs() < 1e-6, "({i},{j}) fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn divergence_of_gradient_is_laplacian() {
        let w = gaussian_scalar(2, 1.0);
        let lap = w.inner_derivative(1).divergence(1).unwrap();
        let x = [0.4, 1.1];
        let r2: f64 = 0.16 + 1.21;
        let expected = (4.0 * r2 - 4.0) * (-r2).exp();
        assert!((lap.eval(&x).coeffs()[0] - expected).abs() < 1e-14);
        assert!(w.divergence(1).is_err());
        assert_eq!(w.divergence(0).unwrap(), w);
    }

    #[test]
    fn fourier_of_self_dual_gaussian() {
        let f = gaussian_scalar(1, 0.5);
        let ft = f.fourier();
        assert!((ft.width() - 0.5).abs() < 1e-15);
        for y in [0.0, 0.7, -2.0] {
            let v = ft.eval_coeffs(&[y])[0];
            assert!((v.re - (-y * y / 2.0).exp()).abs() < 1e-15);
            assert!(v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn fourier_of_linear_factor() {
        let a = 0.8;
        let f = GaussPoly::scalar(a, Poly::monomial(1.0, vec![1])).unwrap();
        let base = gaussian_scalar(1, a).fourier();
        let ft = f.fourier();
        for y in [0.3, -1.2] {
            let v = ft.eval_coeffs(&[y])[0];
            let expected = Complex64::new(0.0, -y / (2.0 * a)) * base.eval_coeffs(&[y])[0];
            assert!((v - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn radius_for_cutoff_bounds_boundary() {
        let mut p = Poly::zero(2);
        p.add_term(vec![2, 1], 3.0);
        p.add_term(vec![0, 0], -1.0);
        let f = GaussPoly::scalar(1.0, p).unwrap();
        let r = f.effective_radius();
        for k in 0..16 {
            let t = k as f64 * std::f64::consts::PI / 8.0;
            let v = f.eval(&[r * t.cos(), r * t.sin()]).coeffs()[0];
            assert!(v.abs() < SUPPORT_CUTOFF);
        }
    }

    #[test]
    fn json_round_trip_and_diagnostics() {
        let src = r#"{"n":2,"m":1,"a":1.0,"components":{"1":[{"c":1.0,"pow":[0,1]}],"2":[]}}"#;
        let f = GaussPolyField::from_json_str(src).unwrap();
        assert_eq!(f.rank(), 1);
        let back = GaussPolyField::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);

        let err = GaussPolyField::from_json_str(r#"{"n":2,"m":1,"components":{}}"#).unwrap_err();
        assert!(err.to_string().contains("`a`"), "{err}");
        let err = GaussPolyField::from_json_str(r#"{"n":2,"m":1,"a":1,"components":{"3":[]}}"#)
            .unwrap_err();
        assert!(err.to_string().contains("components.3"), "{err}");
        let err = GaussPolyField::from_json_str(
            r#"{"n":2,"m":1,"a":1,"components":{"1":[{"c":1,"pow":[1]}]}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("components.1[0].pow"), "{err}");
    }
}
