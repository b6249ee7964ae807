//! Symmetric-tensor fields on `R^n` and the operators `d` (inner derivative)
//! and `delta` (divergence).

mod analytic;
mod grid;
mod poly;

pub use analytic::{
    directional_power, rank_factor, GaussPoly, GaussPolyField, SpectralField, SUPPORT_CUTOFF,
};
pub use grid::{fft_nd, DiffScheme, FrequencyField, GridField, GridSpec};
pub use poly::{Poly, Scalar};

use crate::symtensor::{eval_power_unchecked, SymTensor};

/// A symmetric-tensor-valued field that can be evaluated pointwise.
pub trait TensorField: Sync {
    fn dim(&self) -> usize;
    fn rank(&self) -> usize;
    fn eval(&self, x: &[f64]) -> SymTensor;

    /// `<f(x), xi^m>`.
    fn eval_power(&self, x: &[f64], xi: &[f64]) -> f64 {
        eval_power_unchecked(&self.eval(x), xi)
    }

    /// Radius outside which the field is below the support cutoff.
    fn effective_radius(&self) -> f64;
}

impl TensorField for GaussPolyField {
    fn dim(&self) -> usize {
        GaussPoly::dim(self)
    }

    fn rank(&self) -> usize {
        GaussPoly::rank(self)
    }

    fn eval(&self, x: &[f64]) -> SymTensor {
        GaussPolyField::eval(self, x)
    }

    fn eval_power(&self, x: &[f64], xi: &[f64]) -> f64 {
        GaussPoly::eval_power(self, x, xi)
    }

    fn effective_radius(&self) -> f64 {
        GaussPolyField::effective_radius(self)
    }
}
