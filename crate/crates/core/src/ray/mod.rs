//! Momentum ray transforms `I^q f(x, xi) = int t^q <f(x + t xi), xi^m> dt`,
//! their extensions `J^q` to all `(x, xi != 0)`, line-space sampling and the
//! restricted-transform identity.

mod data;
mod extend;
mod geometry;
mod oracle;
mod quadrature;
mod restricted;

pub use data::{batch_oracle, batch_transform, MomentData, QuadratureMeta};
pub use extend::{extend_j, ExtendedMoment};
pub use geometry::{householder_frame, GeometrySpec, LineGeometry};
pub use oracle::{moment_oracle, oracle_diff, OracleJ, OracleMoments, OrderDiff};
pub use quadrature::{moment_numeric, NumericMoment, QuadratureMoments, QuadratureRule, Scheme};
pub use restricted::{restricted_transform, restricted_transform_richardson};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::Provenance;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const LINE_TOL: f64 = 1e-12;

/// An oriented line `{x + t xi}` with `|xi| = 1` and `x ⊥ xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    x: Vec<f64>,
    xi: Vec<f64>,
}

impl Line {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: xi.len(),
            });
        }
        let len = norm(&xi);
        if (len - 1.0).abs() > LINE_TOL {
            return Err(Error::NotALine(format!("|xi| = {len}")));
        }
        let ip = dot(&x, &xi);
        if ip.abs() > LINE_TOL {
            return Err(Error::NotALine(format!("<x, xi> = {ip:e}")));
        }
        Ok(Line { x, xi })
    }

    /// The line through `x` with direction `xi / |xi|`, represented by its
    /// point closest to the origin.
    pub fn through(x: &[f64], xi: &[f64]) -> Result<Self> {
        let len = norm(xi);
        if !(len > 0.0) {
            return Err(Error::ZeroDirection);
        }
        let w: Vec<f64> = xi.iter().map(|v| v / len).collect();
        let t = dot(x, &w);
        let base = x.iter().zip(&w).map(|(a, b)| a - t * b).collect();
        Ok(Line { x: base, xi: w })
    }

    pub(crate) fn raw(x: Vec<f64>, xi: Vec<f64>) -> Self {
        Line { x, xi }
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn reversed(&self) -> Line {
        Line {
            x: self.x.clone(),
            xi: self.xi.iter().map(|v| -v).collect(),
        }
    }
}

/// A point `(x, xi)` of `R^n x (R^n \ {0})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    x: Vec<f64>,
    xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: xi.len(),
            });
        }
        if !(norm(&xi) > 0.0) {
            return Err(Error::ZeroDirection);
        }
        Ok(PhasePoint { x, xi })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
}

impl From<Line> for PhasePoint {
    fn from(l: Line) -> Self {
        PhasePoint { x: l.x, xi: l.xi }
    }
}

/// Anything that supplies `I^0 .. I^k` of a fixed rank-`m` field on lines.
pub trait MomentSource: Sync {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    fn max_order(&self) -> usize;
    fn moment(&self, order: usize, line: &Line) -> Result<f64>;

    fn provenance(&self) -> Provenance {
        Provenance::OracleExact
    }
}

impl<S: MomentSource + ?Sized> MomentSource for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn rank(&self) -> usize {
        (**self).rank()
    }
    fn max_order(&self) -> usize {
        (**self).max_order()
    }
    fn moment(&self, order: usize, line: &Line) -> Result<f64> {
        (**self).moment(order, line)
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
}
