//! Dimensionally adaptive sparse-grid interpolation with a trigonometric basis.
//!
//! Periodic functions on `[0,1]^d` are interpolated by a combination of
//! anisotropic full-tensor trigonometric rules on nested `3^l`-point grids.
//! The anisotropy of the target is estimated on the fly from the decay of the
//! interpolant's discrete Fourier coefficients, and the grid is refined along
//! a hyperbolic-cross (or total-degree) ladder until a node budget is hit.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the common `f64` instantiation.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod anisotropy;
mod error;
pub mod fft;
pub mod index_sets;
pub mod metrics;
pub mod models;
pub mod scalar;
pub mod sparse_grid;
pub mod study;
pub mod tensor_rule;
pub mod trig_basis;

pub use adaptive::{RefineMode, RefinementState, StepOutcome};
pub use anisotropy::{AnisotropyVector, FitSystem};
pub use error::{Error, Result};
pub use index_sets::{LowerSet, MultiIndex, Space};
pub use models::{Oracle, OracleError};
pub use scalar::Scalar;
pub use sparse_grid::SparseGrid;
pub use tensor_rule::TensorCoefficients;

pub use num_complex::Complex;

pub type SparseGridF64 = SparseGrid<f64>;
pub type SparseGridF32 = SparseGrid<f32>;
pub type RefinementStateF64 = RefinementState<f64>;
pub type AnisotropyVectorF64 = AnisotropyVector<f64>;
pub type TensorCoefficientsF64 = TensorCoefficients<f64>;
