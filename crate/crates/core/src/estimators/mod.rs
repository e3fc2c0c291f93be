//! Monte-Carlo bilinear-form estimation and rejection sampling from a linear
//! combination of sketch rows.

mod bilinear;
mod combination;

pub use bilinear::{
    budget, estimate_bilinear, BilinearEstimate, ConjSketchRow, DenseVector, Evaluable, MatrixView, MAX_SAMPLES,
};
pub use combination::{Draw, LinearCombinationSampler, DEFAULT_ITERATION_CAP};
