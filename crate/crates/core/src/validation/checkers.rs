use rand::Rng;
use serde::Serialize;

use super::{instance_rng, trial_rng, CriterionResult};
use crate::error::Result;
use crate::instance::{random_dense, random_vector};
use crate::linalg::{self, DenseMatrix, C64};
use crate::oracle::{check_fkv, check_fpsd, check_norm_inequalities, check_tv_vector_bound, check_weyl, BoundCheck};
use crate::sample_access::SampledMatrix;
use crate::sketch::sample_rows;
use crate::spectral_fn::SpectralFunction;

const INSTANCES: u64 = 100;
const FKV_BETA: f64 = 0.3;
const FKV_ETA: f64 = 0.01;

#[derive(Debug, Default, Serialize)]
struct Tally {
    checks: usize,
    violations: usize,
    /// Smallest `rhs − lhs`.
    min_margin: f64,
}

impl Tally {
    fn add(&mut self, c: &BoundCheck) {
        self.min_margin = if self.checks == 0 { c.margin() } else { self.min_margin.min(c.margin()) };
        self.checks += 1;
        self.violations += usize::from(!c.pass);
    }
}

#[derive(Debug, Default, Serialize)]
struct Details {
    weyl: Tally,
    fkv: Tally,
    fpsd: Tally,
    tv_vector: Tally,
    norm_inequalities: Tally,
}

fn psd<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> DenseMatrix {
    let g = random_dense(n, rank, true, rng);
    linalg::outer_gram(g.as_ref())
}

fn perturb<R: Rng + ?Sized>(m: &DenseMatrix, scale: f64, rng: &mut R) -> DenseMatrix {
    let e = random_dense(m.nrows(), m.ncols(), true, rng);
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] + e[(i, j)] * scale)
}

/// Every dense checker on random inputs, with nearby and unrelated pairs.
pub fn inequality_checkers(seed: u64) -> Result<CriterionResult> {
    let mut d = Details::default();
    let fpsd_functions = [SpectralFunction::power(2.0)?, SpectralFunction::identity(), SpectralFunction::power(3.0)?];
    // q ≥ 1/(ηβ²) rows make the bound hold with probability at least 1 − η.
    let q = (1.0 / (FKV_ETA * FKV_BETA * FKV_BETA)).ceil() as usize;
    for t in 0..INSTANCES {
        let mut rng = instance_rng(seed, 11, t);
        let scale = if t % 2 == 0 { 1e-2 } else { 1.0 };

        let m = random_dense(rng.random_range(2..=12), rng.random_range(2..=12), true, &mut rng);
        d.weyl.add(&check_weyl(m.as_ref(), perturb(&m, scale, &mut rng).as_ref())?);

        let a = random_dense(30, 20, true, &mut rng);
        let sa = SampledMatrix::from_dense(&a)?;
        let s = sample_rows(&sa, q, &mut trial_rng(seed, 11, t))?.materialize();
        d.fkv.add(&check_fkv(a.as_ref(), s.as_ref(), FKV_BETA)?);

        let n = rng.random_range(2..=10);
        let x = psd(n, rng.random_range(1..=n), &mut rng);
        let y = if t % 2 == 0 {
            let e = psd(n, 1, &mut rng);
            DenseMatrix::from_fn(n, n, |i, j| x[(i, j)] + e[(i, j)] * 1e-2)
        } else {
            psd(n, rng.random_range(1..=n), &mut rng)
        };
        d.fpsd.add(&check_fpsd(x.as_ref(), y.as_ref(), &fpsd_functions[t as usize % 3])?);

        let len = rng.random_range(2..=16);
        let v = random_vector(len, true, &mut rng);
        let w: Vec<C64> = if t % 2 == 0 {
            let e = random_vector(len, true, &mut rng);
            v.iter().zip(&e).map(|(a, b)| a + b * 0.05).collect()
        } else {
            random_vector(len, true, &mut rng)
        };
        d.tv_vector.add(&check_tv_vector_bound(&v, &w)?);

        let (r, k, c) = (rng.random_range(1..=10), rng.random_range(1..=10), rng.random_range(1..=10));
        let m = random_dense(r, k, true, &mut rng);
        let n = random_dense(k, c, true, &mut rng);
        let v = random_vector(k, true, &mut rng);
        for c in check_norm_inequalities(m.as_ref(), n.as_ref(), &v)? {
            d.norm_inequalities.add(&c);
        }
    }
    let all = [&d.weyl, &d.fkv, &d.fpsd, &d.tv_vector, &d.norm_inequalities];
    let violations: usize = all.iter().map(|t| t.violations).sum();
    let summary = format!(
        "{INSTANCES} instances each; violations weyl {}, fkv {} (q = {q}), fpsd {}, tv {}, norms {}",
        d.weyl.violations, d.fkv.violations, d.fpsd.violations, d.tv_vector.violations, d.norm_inequalities.violations
    );
    CriterionResult::new(11, "inequality checkers", violations == 0, summary, d)
}
