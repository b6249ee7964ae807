//! Numerical laboratory for momentum ray transforms of symmetric tensor fields.

pub mod cli;
pub mod error;
pub mod fields;
pub mod helmholtz;
pub mod john;
pub mod phase;
pub mod random;
pub mod ray;
pub mod slice;
pub mod symtensor;

pub use error::{Error, Result};
