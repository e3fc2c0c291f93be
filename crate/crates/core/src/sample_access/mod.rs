//! Sample, query and update access to matrices and vectors.

pub mod io;
mod matrix;
pub mod tree;

pub use matrix::SampledMatrix;
