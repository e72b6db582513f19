//! Simulation and post-processing for a balanced-homodyne vacuum-noise
//! random number generator: detector noise model, quadrature sampling and
//! quantisation, entropy budgeting, Toeplitz extraction and randomness tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod entropy;
pub mod error;
pub mod optics;
pub mod pipeline;
pub mod sampler;
pub mod stats;
pub mod toeplitz;

pub use error::{Error, Result};
