//! Closed-form moments of Gaussian-polynomial fields.
//!
//! With `t0 = -<x, xi>/|xi|^2` and `x0 = x + t0 xi` the integrand of
//! `J^q f(x, xi)` becomes `(s + t0)^q P(s) exp(-a|x0|^2) exp(-a|xi|^2 s^2)`
//! for a polynomial `P`, and every monomial integrates to a Gamma value.

use rayon::prelude::*;
use serde::Serialize;

use super::{dot, moment_numeric, Line, MomentSource, PhasePoint, QuadratureRule};
use crate::error::{Error, Result};
use crate::fields::GaussPolyField;
use crate::phase::PhaseFunction;
use crate::symtensor::{binomial, multi_indices};

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `(c + d s)^e` in `s`.
fn binomial_power(c: f64, d: f64, e: usize) -> Vec<f64> {
    (0..=e)
        .map(|j| binomial(e, j) as f64 * c.powi((e - j) as i32) * d.powi(j as i32))
        .collect()
}

/// `int s^j exp(-A s^2) ds` for `j = 0..len`.
fn gaussian_moments(a: f64, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let mut gamma = std::f64::consts::PI.sqrt();
    let mut pow = a.sqrt();
    for j in (0..len).step_by(2) {
        out[j] = gamma / pow;
        let half = j as f64 / 2.0 + 0.5;
        gamma *= half;
        pow *= a;
    }
    out
}

/// `J^q f(x, xi) = int t^q <f(x + t xi), xi^m> dt`, exactly.
pub fn moment_oracle(field: &GaussPolyField, p: &PhasePoint, q: usize) -> f64 {
    let x = p.x();
    let xi = p.xi();
    let n = x.len();
    let xi2 = dot(xi, xi);
    let t0 = -dot(x, xi) / xi2;
    let x0: Vec<f64> = x.iter().zip(xi).map(|(a, b)| a + t0 * b).collect();
    let deg = field.degree() as usize;

    let powers: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|j| (0..=deg).map(|e| binomial_power(x0[j], xi[j], e)).collect())
        .collect();

    let mut poly = vec![0.0; deg + 1];
    for (alpha, comp) in multi_indices(n, field.rank())
        .iter()
        .zip(field.components())
    {
        if comp.is_zero() {
            continue;
        }
        let weight = alpha.multiplicity() * alpha.entries().iter().map(|&i| xi[i]).product::<f64>();
        if weight == 0.0 {
            continue;
        }
        for (pow, c) in comp.terms() {
            let mut term = vec![c * weight];
            for (j, &e) in pow.iter().enumerate() {
                if e > 0 {
                    term = poly_mul(&term, &powers[j][e as usize]);
                }
            }
            for (acc, v) in poly.iter_mut().zip(term) {
                *acc += v;
            }
        }
    }
    let integrand = poly_mul(&poly, &binomial_power(t0, 1.0, q));
    let a = field.width();
    let moments = gaussian_moments(a * xi2, integrand.len());
    let sum: f64 = integrand.iter().zip(&moments).map(|(c, m)| c * m).sum();
    sum * (-a * dot(&x0, &x0)).exp()
}

/// Exact moments on lines.
pub struct OracleMoments<'a> {
    field: &'a GaussPolyField,
}

impl<'a> OracleMoments<'a> {
    pub fn new(field: &'a GaussPolyField) -> Self {
        OracleMoments { field }
    }
}

impl MomentSource for OracleMoments<'_> {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn rank(&self) -> usize {
        self.field.rank()
    }
    fn max_order(&self) -> usize {
        usize::MAX
    }
    fn moment(&self, order: usize, line: &Line) -> Result<f64> {
        if line.dim() != self.field.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.field.dim(),
                got: line.dim(),
            });
        }
        Ok(moment_oracle(self.field, &line.clone().into(), order))
    }
}

/// `J^q f` as an exact phase function of degree `m - q - 1`.
#[derive(Debug, Clone)]
pub struct OracleJ {
    field: GaussPolyField,
    q: usize,
}

impl OracleJ {
    pub fn new(field: GaussPolyField, q: usize) -> Self {
        OracleJ { field, q }
    }

    pub fn field(&self) -> &GaussPolyField {
        &self.field
    }

    pub fn order(&self) -> usize {
        self.q
    }
}

impl PhaseFunction for OracleJ {
    fn dim(&self) -> usize {
        self.field.dim()
    }
    fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        let p = PhasePoint::new(x.to_vec(), xi.to_vec()).expect("nonzero direction");
        moment_oracle(&self.field, &p, self.q)
    }
    fn degree(&self) -> Option<f64> {
        Some(self.field.rank() as f64 - self.q as f64 - 1.0)
    }
}

/// Quadrature against closed form for one moment order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderDiff {
    pub order: usize,
    /// `max |numeric - oracle| / int |t^q <f, xi^m>| dt` over the lines.
    pub max_rel: f64,
    pub mean_rel: f64,
    pub truncated_lines: usize,
}

/// Compares [`moment_numeric`] with [`moment_oracle`] for orders `0..=k`.
pub fn oracle_diff(
    field: &GaussPolyField,
    lines: &[Line],
    k: usize,
    rule: &QuadratureRule,
) -> Result<Vec<OrderDiff>> {
    if let Some(bad) = lines.iter().find(|l| l.dim() != field.dim()) {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: bad.dim(),
        });
    }
    Ok((0..=k)
        .map(|q| {
            let per_line: Vec<(f64, bool)> = lines
                .par_iter()
                .map(|line| {
                    let num = moment_numeric(field, line, q, rule);
                    let exact = moment_oracle(field, &line.clone().into(), q);
                    let err = (num.value - exact).abs();
                    let rel = if num.abs_integral > 0.0 {
                        err / num.abs_integral
                    } else {
                        err
                    };
                    (rel, num.truncated)
                })
                .collect();
            let max_rel = per_line.iter().map(|r| r.0).fold(0.0, f64::max);
            let mean_rel = per_line.iter().map(|r| r.0).sum::<f64>() / per_line.len().max(1) as f64;
            OrderDiff {
                order: q,
                max_rel,
                mean_rel,
                truncated_lines: per_line.iter().filter(|r| r.1).count(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{GaussPoly, Poly};
    use crate::ray::{moment_numeric, QuadratureRule};

    #[test]
    fn scalar_gaussian_matches_closed_form() {
        let f = GaussPoly::scalar(1.0, Poly::constant(2, 1.0)).unwrap();
        let p = PhasePoint::new(vec![0.3, -0.4], vec![0.8, 0.6]).unwrap();
        let sp = std::f64::consts::PI.sqrt();
        assert!((moment_oracle(&f, &p, 0) - sp * (-0.25f64).exp()).abs() < 1e-15);
        assert!(moment_oracle(&f, &p, 1).abs() < 1e-15);
        assert!((moment_oracle(&f, &p, 2) - sp / 2.0 * (-0.25f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn off_bundle_point_matches_quadrature() {
        let mut p1 = Poly::zero(2);
        p1.add_term(vec![1, 2], 0.7);
        p1.add_term(vec![0, 0], -1.1);
        let mut p2 = Poly::zero(2);
        p2.add_term(vec![0, 1], 2.0);
        let f = GaussPoly::new(2, 1, 0.9, vec![p1, p2]).unwrap();
        let x = vec![0.4, 0.5];
        let xi = vec![1.3, -0.4];
        let pp = PhasePoint::new(x.clone(), xi.clone()).unwrap();
        let rule = QuadratureRule::default_for(12.0).unwrap();
        // Quadrature over the unnormalized parametrization x + t xi.
        for q in 0..3 {
            let mut acc = 0.0;
            for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
                let pt: Vec<f64> = x.iter().zip(&xi).map(|(a, b)| a + t * b).collect();
                acc += w * t.powi(q) * f.eval_power(&pt, &xi);
            }
            let exact = moment_oracle(&f, &pp, q as usize);
            assert!((acc - exact).abs() < 1e-12, "q={q}: {acc} vs {exact}");
        }
        let line = Line::through(&x, &xi).unwrap();
        let num = moment_numeric(&f, &line, 1, &rule).value;
        let orc = moment_oracle(&f, &line.into(), 1);
        assert!((num - orc).abs() < 1e-12);
    }

    #[test]
    fn gradient_fields_have_zero_longitudinal_transform() {
        let mut p = Poly::zero(3);
        p.add_term(vec![1, 1, 0], 1.0);
        p.add_term(vec![0, 0, 2], -0.5);
        let u = GaussPoly::scalar(1.1, p).unwrap();
        let f = u.inner_derivative(1);
        let pp = PhasePoint::new(vec![0.2, 0.1, -0.3], vec![0.0, 0.6, 0.8]).unwrap();
        assert!(moment_oracle(&f, &pp, 0).abs() < 1e-15);
    }
}
