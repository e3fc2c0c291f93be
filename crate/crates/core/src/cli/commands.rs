use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::{estimate_bilinear, DenseVector, Evaluable, MatrixView};
use crate::instance::{generate, random_dense, random_vector};
use crate::linalg::{self, DenseMatrix, C64};
use crate::oracle::{empirical_distribution, exact_distribution, exact_svt_apply, tv_distance};
use crate::pipeline::{exact_z, plan_coordinate, plan_sampler, sketch_stage, PlanParameters, Preprocessed};
use crate::rng::{stream, tag};
use crate::sample_access::{io, SampledMatrix};
use crate::spectral_fn::{bounds_over_l, intervals, SpectralFunction, SpectrumSummary};
use crate::validation::run_all;

/// Largest realized-spectrum error `gen` accepts.
const SPECTRUM_TOLERANCE: f64 = 1e-9;
/// Singular values below this fraction of the largest count as zero when
/// summarizing an ingested matrix.
const RANK_TOLERANCE: f64 = 1e-10;

/// Outcome of a command: the JSON report and whether it passed.
pub struct Outcome {
    pub json: String,
    pub pass: bool,
}

fn outcome(value: &impl Serialize, pass: bool) -> Result<Outcome> {
    Ok(Outcome { json: serde_json::to_string_pretty(value)? + "\n", pass })
}

/// `A`, `b` and the spectral facts the planner needs.
struct Problem {
    dense: DenseMatrix,
    a: SampledMatrix,
    b: Vec<C64>,
    summary: SpectrumSummary,
}

fn read_matrix(path: &Path) -> Result<SampledMatrix> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("dqsm") => io::read_snapshot(path),
        _ => io::read_csv(path, &io::sidecar_path(path)),
    }
}

fn read_vector(path: &Path, m: usize) -> Result<Vec<C64>> {
    let v = read_matrix(path)?;
    let dense = v.to_dense();
    let flat: Vec<C64> = match (v.nrows(), v.ncols()) {
        (1, k) if k == m => (0..m).map(|j| dense[(0, j)]).collect(),
        (k, 1) if k == m => (0..m).map(|i| dense[(i, 0)]).collect(),
        (r, c) => return Err(Error::DimensionMismatch(format!("vector file is {r}x{c}, A has {m} rows"))),
    };
    Ok(flat)
}

fn load_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let mut rng = stream(cfg.seed, tag::INSTANCE, 0);
    let (dense, a) = match &cfg.matrix {
        Some(path) => {
            let a = read_matrix(path)?;
            (a.to_dense(), a)
        }
        None => {
            let inst = generate(&cfg.instance_spec(), &mut rng)?;
            let a = inst.sampled()?;
            (inst.a, a)
        }
    };
    let b = match &cfg.vector {
        Some(path) => read_vector(path, a.nrows())?,
        None => {
            // A unit vector in col(A).
            let g = random_vector(a.ncols(), !cfg.real, &mut rng);
            let mut b = linalg::mat_vec(dense.as_ref(), &g);
            let nb = linalg::norm(&b);
            if nb == 0.0 {
                return Err(Error::ZeroMatrix);
            }
            b.iter_mut().for_each(|x| *x /= nb);
            b
        }
    };
    let summary = SpectrumSummary::from_singular_values(&linalg::singular_values(dense.as_ref())?, RANK_TOLERANCE)?;
    Ok(Problem { dense, a, b, summary })
}

fn make_plan(cfg: &ExperimentConfig, p: &Problem, f: &SpectralFunction) -> Result<PlanParameters> {
    let bounds = bounds_over_l(f, intervals(&p.summary).0)?;
    let norm_b = linalg::norm(&p.b);
    let plan = match (cfg.eps1, cfg.eps2) {
        (_, Some(eps2)) => plan_sampler(&p.summary, &bounds, norm_b, eps2, cfg.eta, cfg.alpha)?,
        (Some(eps1), None) => plan_coordinate(&p.summary, &bounds, norm_b, eps1, cfg.eta)?,
        (None, None) => return Err(Error::InvalidParameter("set --eps1 (coordinates) or --eps2 (sampling)".into())),
    };
    match (cfg.r, cfg.c) {
        (None, None) => {
            if let Some(e) = cfg.eps_inner {
                let (r, c) = (plan.r, plan.c);
                return plan.with_overrides(r, c, Some(e));
            }
            Ok(plan)
        }
        (r, c) => {
            let (r, c) = (r.unwrap_or(plan.r), c.unwrap_or(plan.c));
            plan.with_overrides(r, c, cfg.eps_inner)
        }
    }
}

fn preprocess<'a>(
    cfg: &ExperimentConfig,
    p: &'a Problem,
    f: &SpectralFunction,
    plan: &PlanParameters,
    rng: &mut crate::rng::Rng,
) -> Result<Preprocessed<'a>> {
    let b = DenseVector::new(p.b.clone());
    if cfg.exact_z {
        let sk = sketch_stage(&p.a, f, plan, rng)?;
        let z = exact_z(&sk.rows, &p.b);
        Ok(Preprocessed::from_parts(sk, z, 0))
    } else {
        Preprocessed::new(&p.a, &b, f, plan, rng)
    }
}

#[derive(Serialize)]
struct GenReport<'a> {
    config: &'a ExperimentConfig,
    matrix: PathBuf,
    vector: PathBuf,
    m: usize,
    n: usize,
    nnz: usize,
    requested_spectrum: Vec<f64>,
    max_spectrum_error: f64,
}

pub fn gen(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.instance_spec();
    let mut rng = stream(cfg.seed, tag::INSTANCE, 0);
    let inst = generate(&spec, &mut rng)?;
    let a = inst.sampled()?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("matrix.csv"));
    io::write_csv(&a, &out, &io::sidecar_path(&out))?;
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("matrix");
    let vector = out.with_file_name(format!("{stem}_b.csv"));
    let b = SampledMatrix::from_vector(&inst.column_space_vector(!cfg.real, &mut rng))?;
    io::write_csv(&b, &vector, &io::sidecar_path(&vector))?;

    // Check the realized spectrum through the file that was written.
    let back = read_matrix(&out)?.to_dense();
    let s = linalg::singular_values(back.as_ref())?;
    let err = s
        .iter()
        .enumerate()
        .map(|(t, &x)| (x - spec.singular_values.get(t).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    let report = GenReport {
        config: cfg,
        matrix: out,
        vector,
        m: spec.m,
        n: spec.n,
        nnz: a.nnz(),
        requested_spectrum: spec.singular_values,
        max_spectrum_error: err,
    };
    outcome(&report, err <= SPECTRUM_TOLERANCE)
}

pub fn plan(cfg: &ExperimentConfig) -> Result<Outcome> {
    let p = load_problem(cfg)?;
    let f = SpectralFunction::from_spec(&cfg.function)?;
    outcome(&make_plan(cfg, &p, &f)?, true)
}

#[derive(Serialize)]
struct QueryReport<'a> {
    config: &'a ExperimentConfig,
    plan: PlanParameters,
    index: usize,
    oracle: [f64; 2],
    eps1: f64,
    estimates: Vec<[f64; 2]>,
    errors: Vec<f64>,
    success_rate: f64,
}

pub fn query(cfg: &ExperimentConfig) -> Result<Outcome> {
    let cfg = &ExperimentConfig { eps2: None, ..cfg.clone() };
    let p = load_problem(cfg)?;
    if cfg.index >= p.a.ncols() {
        return Err(Error::InvalidParameter(format!("index {} out of range for n = {}", cfg.index, p.a.ncols())));
    }
    let f = SpectralFunction::from_spec(&cfg.function)?;
    let plan = make_plan(cfg, &p, &f)?;
    let oracle = exact_svt_apply(p.dense.as_ref(), &f, &p.b)?[cfg.index];
    let estimates: Vec<C64> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(cfg.seed, tag::TRIAL, t);
            preprocess(cfg, &p, &f, &plan, &mut rng)?.coordinate(cfg.index)
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = estimates.iter().map(|e| (e - oracle).norm()).collect();
    let eps1 = plan.target_value();
    let successes = errors.iter().filter(|&&e| e <= eps1).count();
    let report = QueryReport {
        config: cfg,
        index: cfg.index,
        oracle: [oracle.re, oracle.im],
        eps1,
        estimates: estimates.iter().map(|e| [e.re, e.im]).collect(),
        success_rate: if errors.is_empty() { 0.0 } else { successes as f64 / errors.len() as f64 },
        errors,
        plan,
    };
    outcome(&report, true)
}

#[derive(Serialize)]
struct SampleReport<'a> {
    config: &'a ExperimentConfig,
    plan: PlanParameters,
    draws: u64,
    eps2: f64,
    tv: f64,
    mean_iterations: f64,
}

pub fn sample(cfg: &ExperimentConfig) -> Result<Outcome> {
    if cfg.eps2.is_none() {
        return Err(Error::InvalidParameter("sample needs --eps2".into()));
    }
    let p = load_problem(cfg)?;
    let f = SpectralFunction::from_spec(&cfg.function)?;
    let plan = make_plan(cfg, &p, &f)?;
    let exact = exact_svt_apply(p.dense.as_ref(), &f, &p.b)?;
    let pre = preprocess(cfg, &p, &f, &plan, &mut stream(cfg.seed, tag::SKETCH, 0))?;
    let sampler = pre.sampler()?;
    let mut rng = stream(cfg.seed, tag::SAMPLE, 0);
    let mut counts = vec![0u64; p.a.ncols()];
    let mut iterations = 0;
    for _ in 0..cfg.draws {
        let d = sampler.draw(&mut rng)?;
        counts[d.index] += 1;
        iterations += d.iterations;
    }
    let tv = tv_distance(&empirical_distribution(&counts)?, &exact_distribution(&exact)?)?;
    let report = SampleReport {
        config: cfg,
        eps2: plan.target_value(),
        plan,
        draws: cfg.draws,
        tv,
        mean_iterations: iterations as f64 / cfg.draws.max(1) as f64,
    };
    outcome(&report, true)
}

pub fn validate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let report = run_all(cfg.seed, |c| {
        let mut err = std::io::stderr().lock();
        let _ = writeln!(err, "{}", c.line());
    })?;
    outcome(&report, report.pass)
}

#[derive(Serialize)]
struct OpStats {
    op: &'static str,
    count: u64,
    nanos_per_op: f64,
    mean_visits: f64,
    max_visits: u64,
}

#[derive(Serialize)]
struct BenchReport<'a> {
    config: &'a ExperimentConfig,
    m: usize,
    n: usize,
    nnz: usize,
    visit_bound: u64,
    build_seconds: f64,
    ops: Vec<OpStats>,
    bilinear_draws: u64,
    bilinear_seconds: f64,
}

fn time_op(a: &SampledMatrix, op: &'static str, count: u64, mut f: impl FnMut() -> Result<()>) -> Result<OpStats> {
    let mut max = 0;
    let start_visits = a.node_visits();
    let start = Instant::now();
    for _ in 0..count {
        let before = a.node_visits();
        f()?;
        max = max.max(a.node_visits() - before);
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(OpStats {
        op,
        count,
        nanos_per_op: secs * 1e9 / count.max(1) as f64,
        mean_visits: (a.node_visits() - start_visits) as f64 / count.max(1) as f64,
        max_visits: max,
    })
}

/// Wall time and node visits of the data-structure operations on a random
/// dense `m x n` matrix, plus the bilinear estimator's throughput.
pub fn bench(cfg: &ExperimentConfig) -> Result<Outcome> {
    let mut rng = stream(cfg.seed, tag::BENCH, 0);
    let (m, n) = (cfg.m, cfg.n);
    let dense = random_dense(m, n, !cfg.real, &mut rng);
    let start = Instant::now();
    let mut a = SampledMatrix::from_dense(&dense)?;
    let build_seconds = start.elapsed().as_secs_f64();
    let count = cfg.draws.max(1);
    let mut ops = Vec::new();

    let idx: Vec<(usize, usize, C64)> = (0..count)
        .map(|_| (rng.random_range(0..m), rng.random_range(0..n), C64::new(rng.random(), rng.random())))
        .collect();
    let mut k = 0;
    let mut update_max = 0;
    let before_all = a.node_visits();
    let start = Instant::now();
    for &(i, j, v) in &idx {
        let before = a.node_visits();
        a.update(i, j, v)?;
        update_max = update_max.max(a.node_visits() - before);
    }
    let secs = start.elapsed().as_secs_f64();
    ops.push(OpStats {
        op: "update",
        count,
        nanos_per_op: secs * 1e9 / count as f64,
        mean_visits: (a.node_visits() - before_all) as f64 / count as f64,
        max_visits: update_max,
    });
    let a = a;
    ops.push(time_op(&a, "query", count, || {
        let (i, j, _) = idx[k % idx.len()];
        k += 1;
        a.query(i, j).map(|_| ())
    })?);
    ops.push(time_op(&a, "row_norm", count, || a.row_norm(rng.random_range(0..m)).map(|_| ()))?);
    ops.push(time_op(&a, "sample_row", count, || a.sample_row(&mut rng).map(|_| ()))?);
    ops.push(time_op(&a, "sample_in_row", count, || a.sample_in_row(rng.random_range(0..m), &mut rng).map(|_| ()))?);

    let v = DenseVector::new(random_vector(m, true, &mut rng));
    let w = DenseVector::new(random_vector(n, true, &mut rng));
    let eps = 0.05 * v.norm() * w.norm() * a.frobenius();
    let start = Instant::now();
    let est = estimate_bilinear(&v, MatrixView::Direct(&a), &w, eps, 0.05, &mut rng)?;
    let bilinear_seconds = start.elapsed().as_secs_f64();

    let report = BenchReport {
        config: cfg,
        m,
        n,
        nnz: a.nnz(),
        visit_bound: a.visit_bound(),
        build_seconds,
        ops,
        bilinear_draws: est.samples_used,
        bilinear_seconds,
    };
    outcome(&report, true)
}
