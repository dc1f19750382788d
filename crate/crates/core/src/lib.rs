//! Bus strength indicators from step current injections.
//!
//! For every bus the library computes how the voltage phasor and its first
//! and second order complex frequencies jump when a step current is injected
//! there, using an exact finite-jump calculus rather than a linearization.
//! A DAE time-domain simulator is included to measure the same jumps
//! independently.
//!
//! Module overview:
//! - [`algebra`]: 2x2 real matrix representation of complex quantities.
//! - [`deltacalc`]: jump operator rules.
//! - [`network`]: case files, admittance matrix, power flow.
//! - [`devices`]: synchronous machine, grid-following converter, impedance load.
//! - [`strength`]: equivalent impedance chain, strength matrices, predictions.
//! - [`simulator`]: trapezoidal DAE integration, complex frequency, validation.
//! - [`cli`]: batch commands.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod cli;
pub mod deltacalc;
pub mod devices;
pub mod network;
pub mod simulator;
pub mod strength;

mod error;

pub use error::Error;

pub use algebra::{BlockMatrix, ClarkeVec, ComplexFrequency, ComplexFrequency2, Mat2, Scalar};
pub use deltacalc::{Jump, JumpForm};

pub type ClarkeVecd = ClarkeVec<f64>;
pub type ClarkeVecf = ClarkeVec<f32>;
pub type Mat2d = Mat2<f64>;
pub type Mat2f = Mat2<f32>;
pub type BlockMatrixd = BlockMatrix<f64>;
pub type BlockMatrixf = BlockMatrix<f32>;
pub type ComplexFrequencyd = ComplexFrequency<f64>;
pub type ComplexFrequencyf = ComplexFrequency<f32>;
pub type ComplexFrequency2d = ComplexFrequency2<f64>;
pub type ComplexFrequency2f = ComplexFrequency2<f32>;
pub type Jumpd = Jump<f64>;
pub type Jumpf = Jump<f32>;
