use serde::{Deserialize, Serialize};

use super::{dot, Line, MomentSource};
use crate::error::{Error, Result};
use crate::fields::TensorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussLegendre,
    Trapezoid,
}

/// Quadrature for the line parameter `t` on `[-R, R]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    scheme: Scheme,
    radius: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(scheme: Scheme, count: usize, radius: f64) -> Result<Self> {
        if count < 8 {
            return Err(Error::InvalidParameter(format!(
                "quadrature needs at least 8 nodes, got {count}"
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "quadrature radius must be positive, got {radius}"
            )));
        }
        let (nodes, weights) = match scheme {
            Scheme::GaussLegendre => gauss_legendre(count),
            Scheme::Trapezoid => {
                let h = 2.0 / (count - 1) as f64;
                let nodes = (0..count).map(|i| -1.0 + i as f64 * h).collect();
                let mut w = vec![h; count];
                w[0] = h / 2.0;
                w[count - 1] = h / 2.0;
                (nodes, w)
            }
        };
        Ok(QuadratureRule {
            scheme,
            radius,
            nodes: nodes.iter().map(|t| t * radius).collect(),
            weights: weights.iter().map(|w| w * radius).collect(),
        })
    }

    /// 200-node Gauss-Legendre on `[-R, R]`.
    pub fn default_for(radius: f64) -> Result<Self> {
        QuadratureRule::new(Scheme::GaussLegendre, 200, radius)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, symmetric by construction.
fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=count {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[count - 1 - i] = z;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    if count % 2 == 1 {
        nodes[count / 2] = 0.0;
    }
    (nodes, weights)
}

/// A quadrature value together with the quadrature of the absolute
/// integrand, which is the natural scale for relative errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericMoment {
    pub value: f64,
    pub abs_integral: f64,
    pub truncated: bool,
}

fn truncated_for(support: f64, line: &Line, radius: f64) -> bool {
    let needed = (support * support - dot(line.x(), line.x()))
        .max(0.0)
        .sqrt();
    radius < needed
}

/// `int_{-R}^{R} t^q <f(x + t xi), xi^m> dt` by the given rule.
pub fn moment_numeric<F: TensorField + ?Sized>(
    field: &F,
    line: &Line,
    q: usize,
    rule: &QuadratureRule,
) -> NumericMoment {
    let support = field.effective_radius();
    moment_with_support(field, line, q, rule, support)
}

fn moment_with_support<F: TensorField + ?Sized>(
    field: &F,
    line: &Line,
    q: usize,
    rule: &QuadratureRule,
    support: f64,
) -> NumericMoment {
    let mut value = 0.0;
    let mut abs_integral = 0.0;
    let mut p = vec![0.0; line.dim()];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        for (pi, (x, xi)) in p.iter_mut().zip(line.x().iter().zip(line.xi())) {
            *pi = x + t * xi;
        }
        let v = t.powi(q as i32) * field.eval_power(&p, line.xi()) * w;
        value += v;
        abs_integral += v.abs();
    }
    NumericMoment {
        value,
        abs_integral,
        truncated: truncated_for(support, line, rule.radius),
    }
}

/// Moments of a field computed by quadrature.
pub struct QuadratureMoments<'a, F: ?Sized> {
    field: &'a F,
    rule: QuadratureRule,
    support: f64,
}

impl<'a, F: TensorField + ?Sized> QuadratureMoments<'a, F> {
    pub fn new(field: &'a F, rule: QuadratureRule) -> Self {
        let support = field.effective_radius();
        QuadratureMoments {
            field,
            rule,
            support,
        }
    }

    /// Rule radius set to the field's effective support.
    pub fn with_default_rule(field: &'a F) -> Result<Self> {
        let rule = QuadratureRule::default_for(field.effective_radius())?;
        Ok(QuadratureMoments::new(field, rule))
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn truncated(&self) -> bool {
        self.rule.radius < self.support
    }

    pub fn numeric(&self, order: usize, line: &Line) -> NumericMoment {
        moment_with_support(self.field, line, order, &self.rule, self.support)
    }
}

impl<F: TensorField + ?Sized> MomentSource for QuadratureMoments<'_, F> {
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
        Ok(self.numeric(order, line).value)
    }
}
