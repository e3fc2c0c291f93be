use serde::Serialize;

use super::{instance_rng, trial_rng, CriterionResult};
use crate::error::Result;
use crate::instance::{generate, random_vector, Instance, InstanceSpec};
use crate::linalg::{self, DenseMatrix, C64};
use crate::oracle::{check_fkv, exact_svt_apply, mid_matrix_bound, sketch_statements, vector_bound_epsilon, SketchStatements};
use crate::pipeline::{exact_z, sketch_size, theta_limit};
use crate::sketch::{sample_columns, sample_rows, RowSketch, WSketch};
use crate::spectral_fn::{bounds_over_l, intervals, SpectralFunction, SpectrumSummary};
use crate::svt_core::{mid_matrix, p_reference, svd, RankCutoff};

const FKV_TRIALS: u64 = 100;
const FKV_REQUIRED: usize = 70;
const FKV_BETA: f64 = 0.15;
const FKV_ETA: f64 = 0.3;

/// Instances of the well-conditioned family needed by the bound checks.
const QUALIFYING: usize = 50;
const MAX_ATTEMPTS: u64 = 1000;
const WC_SKETCH: usize = 200;

fn fkv_spec() -> InstanceSpec {
    InstanceSpec::linspace(200, 150, 8, 1.0, 0.3, true)
}

fn well_conditioned_spec() -> InstanceSpec {
    InstanceSpec { m: 40, n: 30, singular_values: vec![1.0, 0.8], complex: true }
}

/// A sketch of one instance whose Gram hypotheses hold at the admissible
/// supremum `θ = γ = ‖A‖²/(4κ²‖A‖_F²)`.
struct Qualified<'a> {
    index: u64,
    inst: &'a Instance,
    summary: SpectrumSummary,
    rows: &'a RowSketch<'a>,
    cols: &'a WSketch,
    s: &'a DenseMatrix,
    b: &'a [C64],
    statements: SketchStatements,
}

impl Qualified<'_> {
    fn theta(&self) -> f64 {
        self.statements.row_gram.lhs / self.summary.frob.powi(2)
    }

    fn gamma(&self) -> f64 {
        self.statements.col_gram.lhs / linalg::frobenius_sq(self.s.as_ref())
    }
}

#[derive(Debug, Default, Serialize)]
struct FamilyStats {
    attempts: u64,
    qualifying: usize,
    violations: usize,
    /// Largest `σ / L.hi` and smallest `σ / L.lo` seen on qualifying sketches.
    max_hi_ratio: f64,
    min_lo_ratio: f64,
}

impl FamilyStats {
    fn record(&mut self, st: &SketchStatements, summary: &SpectrumSummary) {
        let (l, _) = intervals(summary);
        self.qualifying += 1;
        if !st.sandwich_holds() {
            self.violations += 1;
        }
        let lo = st.s_extremes.0.min(st.w_extremes.0);
        let hi = st.s_extremes.1.max(st.w_extremes.1);
        self.max_hi_ratio = self.max_hi_ratio.max(hi / l.hi);
        self.min_lo_ratio = if self.qualifying == 1 { lo / l.lo } else { self.min_lo_ratio.min(lo / l.lo) };
    }
}

/// Runs the well-conditioned family until `QUALIFYING` sketches satisfy the
/// hypotheses, calling `visit` on each of them.
fn well_conditioned(seed: u64, mut visit: impl FnMut(&Qualified<'_>) -> Result<()>) -> Result<FamilyStats> {
    let mut stats = FamilyStats::default();
    for t in 0..MAX_ATTEMPTS {
        if stats.qualifying == QUALIFYING {
            break;
        }
        stats.attempts += 1;
        let mut rng = instance_rng(seed, 3, t);
        let inst = generate(&well_conditioned_spec(), &mut rng)?;
        let mut b = random_vector(inst.a.nrows(), true, &mut rng);
        let nb = linalg::norm(&b);
        b.iter_mut().for_each(|x| *x /= nb);
        let summary = inst.summary()?;
        let limit = theta_limit(&summary);
        let a = inst.sampled()?;
        let mut rng = trial_rng(seed, 3, t);
        let rows = sample_rows(&a, WC_SKETCH, &mut rng)?;
        let cols = sample_columns(&rows, WC_SKETCH, &mut rng)?;
        let s = rows.materialize();
        let statements = sketch_statements(inst.a.as_ref(), s.as_ref(), cols.w.as_ref(), &summary, limit, limit)?;
        if !statements.hypotheses_hold() {
            continue;
        }
        stats.record(&statements, &summary);
        visit(&Qualified { index: t, inst: &inst, summary, rows: &rows, cols: &cols, s: &s, b: &b, statements })?;
    }
    Ok(stats)
}

#[derive(Serialize)]
struct FkvDetails {
    q: u64,
    beta: f64,
    eta: f64,
    trials: u64,
    held: usize,
    worst_ratio: f64,
    theta_limit: f64,
}

#[derive(Serialize)]
struct SandwichDetails {
    fkv_family: FamilyStats,
    /// Smallest `‖A*A − S*S‖_F / ‖A‖_F²` seen on the criterion 2 trials.
    fkv_family_best_theta: f64,
    fkv_family_theta_limit: f64,
    well_conditioned_family: FamilyStats,
}

/// Gram concentration of the row sketch, then the singular-value sandwich
/// wherever its hypotheses hold.
pub fn fkv_and_sandwich(seed: u64) -> Result<Vec<CriterionResult>> {
    let inst = generate(&fkv_spec(), &mut instance_rng(seed, 2, 0))?;
    let a = inst.sampled()?;
    let summary = inst.summary()?;
    let limit = theta_limit(&summary);
    let q = sketch_size(FKV_ETA, FKV_BETA);
    let fro2 = summary.frob.powi(2);

    let mut held = 0;
    let mut worst = 0.0f64;
    let mut best_theta = f64::INFINITY;
    let mut family_a = FamilyStats::default();
    for t in 0..FKV_TRIALS {
        let mut rng = trial_rng(seed, 2, t);
        let rows = sample_rows(&a, q as usize, &mut rng)?;
        let s = rows.materialize();
        let fkv = check_fkv(inst.a.as_ref(), s.as_ref(), FKV_BETA)?;
        held += usize::from(fkv.pass);
        worst = worst.max(fkv.lhs / fkv.rhs);
        best_theta = best_theta.min(fkv.lhs / fro2);
        family_a.attempts += 1;
        if fkv.lhs / fro2 >= limit {
            continue;
        }
        let cols = sample_columns(&rows, q as usize, &mut rng)?;
        let st = sketch_statements(inst.a.as_ref(), s.as_ref(), cols.w.as_ref(), &summary, limit, limit)?;
        if st.hypotheses_hold() {
            family_a.record(&st, &summary);
        }
    }
    let c2 = CriterionResult::new(
        2,
        "FKV concentration",
        held >= FKV_REQUIRED,
        format!("q = {q}; bound held in {held}/{FKV_TRIALS} trials (need >= {FKV_REQUIRED}); worst lhs/rhs {worst:.3}"),
        FkvDetails { q, beta: FKV_BETA, eta: FKV_ETA, trials: FKV_TRIALS, held, worst_ratio: worst, theta_limit: limit },
    )?;

    let family_b = well_conditioned(seed, |_| Ok(()))?;
    let violations = family_a.violations + family_b.violations;
    let summary_line = format!(
        "violations {violations}; rank-8 family: {}/{} trials meet the hypotheses (best theta {best_theta:.4} vs limit {limit:.4}); \
         well-conditioned family: {} qualifying of {} attempts",
        family_a.qualifying, family_a.attempts, family_b.qualifying, family_b.attempts
    );
    let c3 = CriterionResult::new(
        3,
        "singular-value sandwich",
        violations == 0,
        summary_line,
        SandwichDetails {
            fkv_family: family_a,
            fkv_family_best_theta: best_theta,
            fkv_family_theta_limit: limit,
            well_conditioned_family: family_b,
        },
    )?;
    Ok(vec![c2, c3])
}

#[derive(Serialize)]
struct BoundRecord {
    instance: u64,
    function: String,
    lhs: f64,
    rhs: f64,
}

fn functions() -> Result<[SpectralFunction; 3]> {
    Ok([SpectralFunction::identity(), SpectralFunction::inverse(), SpectralFunction::power(2.0)?])
}

fn worst_ratio(records: &[BoundRecord]) -> f64 {
    records.iter().map(|r| r.lhs / r.rhs).fold(0.0, f64::max)
}

/// `‖P' − P‖_F` and `‖S*P'SA*b − Φ_f(A*)b‖` against their bounds on the
/// qualifying well-conditioned sketches, with `θ` and `γ` set to the
/// observed Gram errors.
pub fn mid_matrix_and_vector_bounds(seed: u64) -> Result<Vec<CriterionResult>> {
    let fs = functions()?;
    let mut mid = Vec::new();
    let mut vec_bound = Vec::new();
    let stats = well_conditioned(seed, |q| {
        let cutoff = RankCutoff::from_summary(&q.summary);
        let (l, _) = intervals(&q.summary);
        let w_svd = svd(q.cols.w.as_ref(), cutoff)?;
        let sab = exact_z(q.rows, q.b);
        for f in &fs {
            let bounds = bounds_over_l(f, l)?;
            let p_prime = mid_matrix(&w_svd, f).p;
            let p = p_reference(q.s.as_ref(), f, cutoff)?;
            mid.push(BoundRecord {
                instance: q.index,
                function: f.name(),
                lhs: linalg::frobenius(linalg::sub(p_prime.as_ref(), p.as_ref()).as_ref()),
                rhs: mid_matrix_bound(&q.summary, &bounds, q.gamma()),
            });
            let x = linalg::adjoint_mat_vec(q.s.as_ref(), &linalg::mat_vec(p_prime.as_ref(), &sab));
            let exact = exact_svt_apply(q.inst.a.as_ref(), f, q.b)?;
            vec_bound.push(BoundRecord {
                instance: q.index,
                function: f.name(),
                lhs: linalg::norm(&linalg::vec_sub(&x, &exact)),
                rhs: vector_bound_epsilon(&q.summary, &bounds, linalg::norm(q.b), q.theta(), q.gamma()),
            });
        }
        Ok(())
    })?;
    let enough = stats.qualifying == QUALIFYING;
    let count = |r: &[BoundRecord]| r.iter().filter(|x| x.lhs > x.rhs).count();
    let (v5, v6) = (count(&mid), count(&vec_bound));
    let c5 = CriterionResult::new(
        5,
        "mid-matrix perturbation bound",
        enough && v5 == 0,
        format!(
            "{} instances x 3 functions; violations {v5}; worst lhs/rhs {:.3e}",
            stats.qualifying,
            worst_ratio(&mid)
        ),
        mid,
    )?;
    let c6 = CriterionResult::new(
        6,
        "end-to-end vector bound",
        enough && v6 == 0,
        format!(
            "{} instances x 3 functions, exact z; violations {v6}; worst lhs/rhs {:.3e}",
            stats.qualifying,
            worst_ratio(&vec_bound)
        ),
        vec_bound,
    )?;
    Ok(vec![c5, c6])
}
