use rand::Rng;
use serde::Serialize;

use super::{instance_rng, trial_rng, CriterionResult};
use crate::error::Result;
use crate::instance::random_dense;
use crate::linalg::{C64, ZERO};
use crate::oracle::tv_distance;
use crate::sample_access::SampledMatrix;

const DIM: usize = 64;
const DRAWS: usize = 1_000_000;
const UPDATES: usize = 100_000;
const TV_LIMIT: f64 = 0.01;
const REL_LIMIT: f64 = 1e-9;

#[derive(Serialize)]
struct Details {
    draws: usize,
    tv: f64,
    updates: usize,
    frobenius_rel_error: f64,
    invariants_ok: bool,
    max_visits_per_op: u64,
    visit_bound: u64,
}

/// Row sampling against the exact row distribution, a long run of updates
/// against a dense mirror, and per-operation node visits.
pub fn data_structure_fidelity(seed: u64) -> Result<CriterionResult> {
    let dense = random_dense(DIM, DIM, true, &mut instance_rng(seed, 1, 0));
    let mut a = SampledMatrix::from_dense(&dense)?;
    let bound = a.visit_bound();
    let mut max_visits = 0;
    let mut visits = |a: &SampledMatrix, before: u64| max_visits = u64::max(max_visits, a.node_visits() - before);

    // Exact row distribution by direct double-loop summation.
    let row_sq: Vec<f64> = (0..DIM).map(|i| (0..DIM).map(|j| dense[(i, j)].norm_sqr()).sum()).collect();
    let total: f64 = row_sq.iter().sum();
    let exact: Vec<f64> = row_sq.iter().map(|x| x / total).collect();

    let mut rng = trial_rng(seed, 1, 0);
    let mut counts = vec![0u64; DIM];
    for _ in 0..DRAWS {
        let before = a.node_visits();
        counts[a.sample_row(&mut rng)?] += 1;
        visits(&a, before);
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / DRAWS as f64).collect();
    let tv = tv_distance(&empirical, &exact)?;

    let mut mirror = dense.clone();
    for _ in 0..UPDATES {
        let (i, j) = (rng.random_range(0..DIM), rng.random_range(0..DIM));
        let v = if rng.random::<f64>() < 0.1 {
            ZERO
        } else {
            C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
        };
        let before = a.node_visits();
        a.update(i, j, v)?;
        visits(&a, before);
        mirror[(i, j)] = v;
        let before = a.node_visits();
        a.query(i, j)?;
        visits(&a, before);
        let before = a.node_visits();
        let row = a.sample_row(&mut rng)?;
        visits(&a, before);
        let before = a.node_visits();
        a.sample_in_row(row, &mut rng)?;
        visits(&a, before);
    }
    let recomputed: f64 = (0..DIM).flat_map(|i| (0..DIM).map(move |j| (i, j))).map(|(i, j)| mirror[(i, j)].norm_sqr()).sum();
    let rel = (a.frobenius_sq() - recomputed).abs() / recomputed;
    let invariants_ok = a.check_invariants().is_ok();

    let pass = tv <= TV_LIMIT && rel <= REL_LIMIT && invariants_ok && max_visits <= bound;
    let summary = format!(
        "TV {tv:.5} <= {TV_LIMIT}; frobenius rel err {rel:.2e} <= {REL_LIMIT:.0e}; max visits/op {max_visits} <= {bound}"
    );
    CriterionResult::new(
        1,
        "data-structure fidelity",
        pass,
        summary,
        Details {
            draws: DRAWS,
            tv,
            updates: UPDATES,
            frobenius_rel_error: rel,
            invariants_ok,
            max_visits_per_op: max_visits,
            visit_bound: bound,
        },
    )
}
