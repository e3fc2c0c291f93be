//! Sampling-based singular value transformation.
//!
//! Given sample and query access to a matrix `A` and a vector `b`, estimate
//! coordinates of `Φ_f(A*) b` and draw indices from its squared-magnitude
//! distribution, with cost independent of the matrix dimensions up to
//! logarithmic factors.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod instance;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod sample_access;
pub mod sketch;
pub mod spectral_fn;
pub mod svt_core;
pub mod validation;

pub use error::{Error, Result};
