use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}) out of range for a {m}x{n} matrix")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        m: usize,
        n: usize,
    },

    #[error("duplicate entry at ({i}, {j})")]
    DuplicateEntry { i: usize, j: usize },

    #[error("non-finite value at ({i}, {j})")]
    NonFiniteEntry { i: usize, j: usize },

    #[error("empty distribution: total weight is zero")]
    EmptyDistribution,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The transform is not differentiable somewhere inside the interval it is
    /// evaluated on.
    #[error("function {name} is not differentiable on [{lo}, {hi}]")]
    NonDifferentiable { name: String, lo: f64, hi: f64 },

    #[error("grid extrema did not converge: {0}")]
    NotConverged(String),

    #[error("function table does not cover [{lo}, {hi}] (table spans [{table_lo}, {table_hi}])")]
    TableRange {
        lo: f64,
        hi: f64,
        table_lo: f64,
        table_hi: f64,
    },

    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,

    #[error("svd failed to converge")]
    SvdFailed,

    #[error(
        "degenerate combination: no acceptance after {iterations} iterations \
         (empirical acceptance rate {acceptance_rate:.3e})"
    )]
    DegenerateCombination {
        iterations: u64,
        acceptance_rate: f64,
    },

    /// Accuracy target outside the range where the sketch analysis applies.
    #[error("target {value} out of range: must be below {bound} ({what})")]
    TargetOutOfRange {
        value: f64,
        bound: f64,
        what: &'static str,
    },

    #[error("plan too large to execute: r = {r}, c = {c}")]
    PlanTooLarge { r: u64, c: u64 },

    #[error("zero matrix")]
    ZeroMatrix,

    #[error("bad snapshot: {0}")]
    Snapshot(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
