//! Transform functions and the extrema of `f` over the interval that brackets
//! the sketch singular values.

mod bounds;
mod function;

pub use bounds::{
    bounds_over_l, grid_bounds, intervals, BoundsMethod, Interval, SpectralBounds, SpectrumSummary, GRID_CONVERGENCE,
    GRID_POINTS, GRID_SAFETY,
};
pub use function::{h_of, FunctionKind, FunctionSpec, SpectralFunction, Table};
