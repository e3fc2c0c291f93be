//! Parameter planning and the end-to-end drivers for coordinate estimation
//! and output sampling.

mod plan;
mod run;

pub use plan::{
    eps_limit, implied_accuracy, plan_coordinate, plan_sampler, sketch_divisor, sketch_size, theta_limit,
    PlanMode, PlanParameters, Target,
};
pub use run::{
    check_plan_size, estimate_z, exact_z, run_coordinate, run_sampler, sketch_stage, Preprocessed, Sketched,
    MAX_SKETCH_DIM,
};
