//! The property suite behind `validate`: one function per acceptance
//! criterion, each returning a serializable result with the measured margins.
//!
//! All randomness descends from the master seed. Criterion `k` draws its
//! instances from `stream(seed, INSTANCE, k << 24 | t)` and its trials from
//! `stream(seed, TRIAL, k << 24 | t)`, so every criterion is reproducible on
//! its own.

mod algebra;
mod behavior;
mod checkers;
mod data_structure;
mod estimators;
mod sketching;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::rng::{self, Rng};

pub use algebra::mid_matrix_algebra;
pub use behavior::{coordinate_behavior, sampler_behavior};
pub use checkers::inequality_checkers;
pub use data_structure::data_structure_fidelity;
pub use estimators::{bilinear_estimator, rejection_sampler};
pub use sketching::{fkv_and_sandwich, mid_matrix_and_vector_bounds};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    /// One line of measured values.
    pub summary: String,
    pub details: Value,
}

impl CriterionResult {
    fn new(id: u32, name: &str, pass: bool, summary: String, details: impl Serialize) -> Result<Self> {
        Ok(Self { id, name: name.to_string(), pass, summary, details: serde_json::to_value(details)? })
    }

    /// `criterion <id> <name>: PASS|FAIL (<summary>)`
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {}: {} ({})",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.summary
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
}

pub(crate) fn instance_rng(seed: u64, criterion: u64, t: u64) -> Rng {
    rng::stream(seed, rng::tag::INSTANCE, (criterion << 24) | t)
}

pub(crate) fn trial_rng(seed: u64, criterion: u64, t: u64) -> Rng {
    rng::stream(seed, rng::tag::TRIAL, (criterion << 24) | t)
}

/// The criteria in order. Criterion 12 (byte-identical reports across runs)
/// is a property of this whole function and is checked by running it twice.
pub fn run_all(seed: u64, mut progress: impl FnMut(&CriterionResult)) -> Result<ValidationReport> {
    type Criterion = fn(u64) -> Result<Vec<CriterionResult>>;
    let suites: [Criterion; 9] = [
        |s| Ok(vec![data_structure_fidelity(s)?]),
        fkv_and_sandwich,
        |s| Ok(vec![mid_matrix_algebra(s)?]),
        mid_matrix_and_vector_bounds,
        |s| Ok(vec![coordinate_behavior(s)?]),
        |s| Ok(vec![sampler_behavior(s)?]),
        |s| Ok(vec![bilinear_estimator(s)?]),
        |s| Ok(vec![rejection_sampler(s)?]),
        |s| Ok(vec![inequality_checkers(s)?]),
    ];
    let mut criteria = Vec::new();
    for suite in suites {
        for c in suite(seed)? {
            progress(&c);
            criteria.push(c);
        }
    }
    let pass = criteria.iter().all(|c| c.pass);
    Ok(ValidationReport { seed, pass, criteria })
}
