//! Finite Harper operator h(a, b, ε) = a·cos(p̂ − b) + ε·cos φ̂ on an
//! n-dimensional space with ħ = 2π/n.

pub mod charpoly;
pub mod diagnostics;
pub mod drift;
pub mod error;
pub mod jacobi;
pub mod mathieu;
pub mod matrix;
pub mod operators;
pub mod params;
pub mod scalar;
pub mod spectrum;
pub mod symmetry;

pub use error::{Error, Result};
pub use matrix::{CMat, Cx, OperatorMatrix, C64};
pub use params::{Basis, HarperParams, PrecisionContext};
pub use scalar::{MpReal, Real};
