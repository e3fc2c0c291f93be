use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use super::plan::PlanParameters;
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_bilinear, ConjSketchRow, DenseVector, Draw, Evaluable, LinearCombinationSampler, MatrixView,
};
use crate::linalg::{self, C64, ZERO};
use crate::rng::{child_seeds, Rng as StreamRng};
use crate::sample_access::SampledMatrix;
use crate::sketch::{sample_columns, sample_rows, RowSketch, WSketch};
use crate::spectral_fn::SpectralFunction;
use crate::svt_core::{mid_matrix, svd, MidMatrix, RankCutoff, SmallSvd};

/// Largest sketch dimension the drivers will build.
pub const MAX_SKETCH_DIM: u64 = 8192;

/// The sketch stage: `S`, `W`, the SVD of `W` and `P'`.
#[derive(Debug, Clone)]
pub struct Sketched<'a> {
    pub rows: RowSketch<'a>,
    pub cols: WSketch,
    pub svd: SmallSvd,
    pub mid: MidMatrix,
}

/// Everything computed once per `(A, b, plan)` and reused by every query and
/// draw.
#[derive(Debug)]
pub struct Preprocessed<'a> {
    pub sketched: Sketched<'a>,
    /// Estimate of `S A* b`.
    pub z: Vec<C64>,
    /// `P' z`
    pub y: Vec<C64>,
    pub samples_used: u64,
}

pub fn check_plan_size(plan: &PlanParameters) -> Result<()> {
    if plan.r > MAX_SKETCH_DIM || plan.c > MAX_SKETCH_DIM {
        return Err(Error::PlanTooLarge { r: plan.r, c: plan.c });
    }
    Ok(())
}

pub fn sketch_stage<'a, R: Rng + ?Sized>(
    a: &'a SampledMatrix,
    f: &SpectralFunction,
    plan: &PlanParameters,
    rng: &mut R,
) -> Result<Sketched<'a>> {
    check_plan_size(plan)?;
    let rows = sample_rows(a, plan.r as usize, rng)?;
    let cols = sample_columns(&rows, plan.c as usize, rng)?;
    let svd = svd(cols.w.as_ref(), RankCutoff::from_summary(&plan.summary))?;
    let mid = mid_matrix(&svd, f);
    Ok(Sketched { rows, cols, svd, mid })
}

/// Estimates every entry of `z = S A* b`. Entry `j` uses a child generator
/// seeded from `rng` in order, so the result does not depend on scheduling.
pub fn estimate_z<R: Rng + ?Sized>(
    rows: &RowSketch<'_>,
    b: &DenseVector,
    eps_inner: f64,
    delta_inner: f64,
    rng: &mut R,
) -> Result<(Vec<C64>, u64)> {
    let a = rows.source();
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!("b has length {}, A has {} rows", b.len(), a.nrows())));
    }
    let mut parent = StreamRng::seed_from_u64(rng.next_u64());
    let seeds = child_seeds(&mut parent, rows.r());
    let est: Vec<_> = seeds
        .par_iter()
        .enumerate()
        .map(|(s, seed)| {
            let v = ConjSketchRow { sketch: rows, s };
            let mut g = StreamRng::seed_from_u64(*seed);
            estimate_bilinear(&v, MatrixView::Adjoint(a), b, eps_inner, delta_inner, &mut g)
        })
        .collect::<Result<_>>()?;
    let used = est.iter().map(|e| e.samples_used).sum();
    Ok((est.into_iter().map(|e| e.value).collect(), used))
}

impl<'a> Preprocessed<'a> {
    /// Sketch, then estimate `z`.
    pub fn new<R: Rng + ?Sized>(
        a: &'a SampledMatrix,
        b: &DenseVector,
        f: &SpectralFunction,
        plan: &PlanParameters,
        rng: &mut R,
    ) -> Result<Self> {
        if a.frobenius_sq() == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let sketched = sketch_stage(a, f, plan, rng)?;
        let (z, used) = estimate_z(&sketched.rows, b, plan.eps_inner, plan.delta_inner, rng)?;
        Ok(Self::from_parts(sketched, z, used))
    }

    /// Assembles the state from a sketch and any `z`, for example the exact
    /// `S A* b`.
    pub fn from_parts(sketched: Sketched<'a>, z: Vec<C64>, samples_used: u64) -> Self {
        let y = linalg::mat_vec(sketched.mid.p.as_ref(), &z);
        Self { sketched, z, y, samples_used }
    }

    pub fn rows(&self) -> &RowSketch<'a> {
        &self.sketched.rows
    }

    /// `(S* P' z)_i = Σ_s conj(S_si) (P' z)_s`
    pub fn coordinate(&self, i: usize) -> Result<C64> {
        let col = self.sketched.rows.s_column(i)?;
        Ok(col.iter().zip(&self.y).fold(ZERO, |acc, (s, y)| acc + s.conj() * y))
    }

    pub fn sampler(&self) -> Result<LinearCombinationSampler<'_, 'a>> {
        LinearCombinationSampler::new(&self.sketched.rows, self.y.clone())
    }
}

/// One run of coordinate estimation: preprocess, then read coordinate `i`.
pub fn run_coordinate<R: Rng + ?Sized>(
    a: &SampledMatrix,
    b: &DenseVector,
    f: &SpectralFunction,
    plan: &PlanParameters,
    i: usize,
    rng: &mut R,
) -> Result<C64> {
    if i >= a.ncols() {
        return Err(Error::IndexOutOfRange { i: 0, j: i, m: 1, n: a.ncols() });
    }
    Preprocessed::new(a, b, f, plan, rng)?.coordinate(i)
}

/// One draw from a freshly preprocessed state. Use [`Preprocessed::sampler`]
/// to amortize preprocessing over many draws.
pub fn run_sampler<R: Rng + ?Sized>(
    a: &SampledMatrix,
    b: &DenseVector,
    f: &SpectralFunction,
    plan: &PlanParameters,
    rng: &mut R,
) -> Result<Draw> {
    let pre = Preprocessed::new(a, b, f, plan, rng)?;
    let sampler = pre.sampler()?;
    sampler.draw(rng)
}

/// `S A* b` computed exactly from the stored entries.
pub fn exact_z(rows: &RowSketch<'_>, b: &[C64]) -> Vec<C64> {
    let a = rows.source();
    let mut atb = vec![ZERO; a.ncols()];
    for (i, j, v) in a.entries() {
        atb[j] += v.conj() * b[i];
    }
    (0..rows.r()).map(|s| (0..a.ncols()).map(|j| rows.entry(s, j) * atb[j]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;
    use crate::pipeline::{plan_coordinate, plan_sampler};
    use crate::spectral_fn::{bounds_over_l, intervals, SpectrumSummary};
    use rand_chacha::ChaCha8Rng;

    fn identity_setup(n: usize) -> (SampledMatrix, SpectrumSummary) {
        let a = SampledMatrix::build(n, n, (0..n).map(|i| (i, i, real(1.0)))).unwrap();
        (a, SpectrumSummary::new(1.0, 1.0, (n as f64).sqrt()).unwrap())
    }

    #[test]
    fn identity_recovers_b() {
        let (a, s) = identity_setup(4);
        let f = SpectralFunction::identity();
        let b = DenseVector::new(vec![real(0.5), real(-1.0), C64::new(0.0, 0.3), real(0.2)]);
        let (l, _) = intervals(&s);
        let bounds = bounds_over_l(&f, l).unwrap();
        let plan = plan_coordinate(&s, &bounds, b.norm(), 0.5, 0.2).unwrap().with_overrides(400, 400, Some(0.05)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pre = Preprocessed::new(&a, &b, &f, &plan, &mut rng).unwrap();
        for i in 0..4 {
            assert!((pre.coordinate(i).unwrap() - b.at(i)).norm() < 0.15, "coordinate {i}");
        }
    }

    #[test]
    fn exact_z_gives_exact_answer_on_identity() {
        let (a, s) = identity_setup(3);
        let f = SpectralFunction::identity();
        let b = vec![real(1.0), real(2.0), real(-1.0)];
        let (l, _) = intervals(&s);
        let bounds = bounds_over_l(&f, l).unwrap();
        let plan = plan_coordinate(&s, &bounds, 6f64.sqrt(), 0.5, 0.2).unwrap().with_overrides(50, 50, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sk = sketch_stage(&a, &f, &plan, &mut rng).unwrap();
        let z = exact_z(&sk.rows, &b);
        let pre = Preprocessed::from_parts(sk, z, 0);
        // With all rows sampled the sketch spans the row space, so the answer
        // is exact whenever each row was drawn at least once.
        let seen: std::collections::BTreeSet<_> = pre.rows().row_indices().iter().copied().collect();
        if seen.len() == 3 {
            for i in 0..3 {
                assert!((pre.coordinate(i).unwrap() - b[i]).norm() < 0.5);
            }
        }
    }

    #[test]
    fn sampler_on_identity_follows_b() {
        let (a, s) = identity_setup(3);
        let f = SpectralFunction::identity();
        let b = DenseVector::new(vec![real(3.0), real(4.0), ZERO]);
        let (l, _) = intervals(&s);
        let bounds = bounds_over_l(&f, l).unwrap();
        let plan = plan_sampler(&s, &bounds, 5.0, 0.1, 0.2, 1.0).unwrap().with_overrides(300, 300, Some(0.05)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pre = Preprocessed::new(&a, &b, &f, &plan, &mut rng).unwrap();
        let sampler = pre.sampler().unwrap();
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            counts[sampler.draw(&mut rng).unwrap().index] += 1;
        }
        assert!(counts[2] < 400);
        assert!((counts[0] as f64 / 20_000.0 - 0.36).abs() < 0.08);
    }

    #[test]
    fn oversized_plan_refused() {
        let (a, s) = identity_setup(2);
        let f = SpectralFunction::identity();
        let (l, _) = intervals(&s);
        let bounds = bounds_over_l(&f, l).unwrap();
        let plan = plan_coordinate(&s, &bounds, 1.0, 1e-4, 0.1).unwrap();
        let b = DenseVector::new(vec![real(1.0), ZERO]);
        let r = run_coordinate(&a, &b, &f, &plan, 0, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::PlanTooLarge { .. })));
    }
}
