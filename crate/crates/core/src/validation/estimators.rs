use serde::Serialize;

use super::{instance_rng, trial_rng, CriterionResult};
use crate::error::Result;
use crate::estimators::{budget, estimate_bilinear, DenseVector, Evaluable, LinearCombinationSampler, MatrixView};
use crate::instance::{random_dense, random_vector};
use crate::linalg;
use crate::oracle::{empirical_distribution, exact_distribution, tv_distance};
use crate::sample_access::SampledMatrix;
use crate::sketch::sample_rows;

const REPS: u64 = 200;
const REQUIRED: usize = 190;
const EPS_FRACTION: f64 = 0.05;
const DELTA: f64 = 0.05;

#[derive(Serialize)]
struct BilinearDetails {
    successes: usize,
    budget_respected: bool,
    /// Largest `⌈6V/ε'²⌉ · ⌈8 ln(2/δ)⌉` over the repetitions.
    max_budget: u64,
    /// `|error| / ε'` per repetition.
    scaled_errors: Vec<f64>,
}

/// `v* M w` on random 64x48 instances at `ε' = 0.05 ‖v‖ ‖w‖ ‖M‖_F`.
pub fn bilinear_estimator(seed: u64) -> Result<CriterionResult> {
    let mut scaled_errors = Vec::new();
    let mut budget_respected = true;
    let mut max_budget = 0;
    for t in 0..REPS {
        let mut rng = instance_rng(seed, 9, t);
        let m = random_dense(64, 48, true, &mut rng);
        let v = DenseVector::new(random_vector(64, true, &mut rng));
        let w = DenseVector::new(random_vector(48, true, &mut rng));
        let sm = SampledMatrix::from_dense(&m)?;
        let eps = EPS_FRACTION * v.norm() * w.norm() * sm.frobenius();
        let variance = v.norm().powi(2) * w.norm().powi(2) * sm.frobenius_sq();
        let (per_group, groups) = budget(variance, eps, DELTA);
        let allowed = per_group * groups;
        max_budget = max_budget.max(allowed);
        let est = estimate_bilinear(&v, MatrixView::Direct(&sm), &w, eps, DELTA, &mut trial_rng(seed, 9, t))?;
        let exact = linalg::dot_conj(v.as_slice(), &linalg::mat_vec(m.as_ref(), w.as_slice()));
        scaled_errors.push((est.value - exact).norm() / eps);
        budget_respected &= est.samples_used <= allowed;
    }
    let successes = scaled_errors.iter().filter(|&&e| e <= 1.0).count();
    let worst = scaled_errors.iter().copied().fold(0.0, f64::max);
    let summary = format!(
        "within eps' in {successes}/{REPS} (need >= {REQUIRED}); worst |err|/eps' {worst:.3}; samples within budget (<= {max_budget}) on every run: {budget_respected}"
    );
    CriterionResult::new(
        9,
        "bilinear estimator",
        successes >= REQUIRED && budget_respected,
        summary,
        BilinearDetails { successes, budget_respected, max_budget, scaled_errors },
    )
}

const SAMPLER_N: usize = 12;
const SAMPLER_M: usize = 8;
const SAMPLER_R: usize = 4;
const SAMPLER_DRAWS: usize = 1_000_000;
const SAMPLER_TV: f64 = 0.02;
const ITERATION_TOLERANCE: f64 = 0.1;

#[derive(Serialize)]
struct SamplerDetails {
    tv: f64,
    mean_iterations: f64,
    expected_iterations: f64,
    relative_gap: f64,
}

/// Rejection sampling from `S* y` with `n = 12`, `r = 4`.
pub fn rejection_sampler(seed: u64) -> Result<CriterionResult> {
    let mut rng = instance_rng(seed, 10, 0);
    let a = SampledMatrix::from_dense(&random_dense(SAMPLER_M, SAMPLER_N, true, &mut rng))?;
    let rows = sample_rows(&a, SAMPLER_R, &mut rng)?;
    let y = random_vector(SAMPLER_R, true, &mut rng);
    let s = rows.materialize();
    let sy = linalg::adjoint_mat_vec(s.as_ref(), &y);
    let exact = exact_distribution(&sy)?;
    // r C(S*, y) = r Σ_t |y_t|² ‖S_t‖² / ‖S* y‖²
    let spread: f64 = (0..SAMPLER_R)
        .map(|t| y[t].norm_sqr() * (0..SAMPLER_N).map(|i| s[(t, i)].norm_sqr()).sum::<f64>())
        .sum();
    let expected = SAMPLER_R as f64 * spread / linalg::norm_sq(&sy);

    let sampler = LinearCombinationSampler::new(&rows, y)?;
    let mut rng = trial_rng(seed, 10, 0);
    let mut counts = vec![0u64; SAMPLER_N];
    let mut iterations = 0u64;
    for _ in 0..SAMPLER_DRAWS {
        let d = sampler.draw(&mut rng)?;
        counts[d.index] += 1;
        iterations += d.iterations;
    }
    let tv = tv_distance(&empirical_distribution(&counts)?, &exact)?;
    let mean = iterations as f64 / SAMPLER_DRAWS as f64;
    let gap = (mean - expected).abs() / expected;
    let summary = format!(
        "TV {tv:.5} <= {SAMPLER_TV}; mean iterations {mean:.4} vs r*C {expected:.4} (gap {:.2}% <= 10%)",
        100.0 * gap
    );
    CriterionResult::new(
        10,
        "rejection sampler",
        tv <= SAMPLER_TV && gap <= ITERATION_TOLERANCE,
        summary,
        SamplerDetails { tv, mean_iterations: mean, expected_iterations: expected, relative_gap: gap },
    )
}
