use rand::Rng;
use serde::Serialize;

use super::{instance_rng, CriterionResult};
use crate::error::Result;
use crate::instance::random_dense;
use crate::linalg::{self, DenseMatrix};
use crate::spectral_fn::SpectralFunction;
use crate::svt_core::{four_factor_product, mid_matrix, svd, RankCutoff};

const PAIRS: u64 = 50;
const REL_LIMIT: f64 = 1e-9;
const HERMITIAN_LIMIT: f64 = 1e-10;

#[derive(Serialize)]
struct Pair {
    r: usize,
    c: usize,
    function: String,
    rel_error: f64,
    hermitian_error: f64,
}

fn hermitian_error(p: &DenseMatrix) -> f64 {
    let n = p.nrows();
    (0..n)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| (p[(i, j)] - p[(j, i)].conj()).norm())
        .fold(0.0, f64::max)
}

fn pick_function<R: Rng + ?Sized>(rng: &mut R) -> Result<SpectralFunction> {
    Ok(match rng.random_range(0..5) {
        0 => SpectralFunction::identity(),
        1 => SpectralFunction::inverse(),
        2 => SpectralFunction::power(2.0)?,
        3 => SpectralFunction::power(rng.random_range(0.5..3.0))?,
        _ => SpectralFunction::threshold(rng.random_range(0.1..1.0))?,
    })
}

/// Closed-form `P'` against the literal product of four transforms.
pub fn mid_matrix_algebra(seed: u64) -> Result<CriterionResult> {
    let mut pairs = Vec::new();
    for t in 0..PAIRS {
        let mut rng = instance_rng(seed, 4, t);
        let r = rng.random_range(2..=24);
        let c = rng.random_range(2..=32);
        let w = random_dense(r, c, rng.random::<bool>(), &mut rng);
        let f = pick_function(&mut rng)?;
        let d = svd(w.as_ref(), RankCutoff::Machine)?;
        let closed = mid_matrix(&d, &f).p;
        let literal = four_factor_product(&d, &f);
        let diff = linalg::frobenius(linalg::sub(closed.as_ref(), literal.as_ref()).as_ref());
        let scale = linalg::frobenius(literal.as_ref());
        let rel_error = if scale > 0.0 { diff / scale } else { diff };
        pairs.push(Pair { r, c, function: f.name(), rel_error, hermitian_error: hermitian_error(&closed) });
    }
    let worst_rel = pairs.iter().map(|p| p.rel_error).fold(0.0, f64::max);
    let worst_herm = pairs.iter().map(|p| p.hermitian_error).fold(0.0, f64::max);
    let pass = worst_rel <= REL_LIMIT && worst_herm <= HERMITIAN_LIMIT;
    let summary = format!(
        "{PAIRS} pairs; max rel err {worst_rel:.2e} <= {REL_LIMIT:.0e}; max hermitian err {worst_herm:.2e} <= {HERMITIAN_LIMIT:.0e}"
    );
    CriterionResult::new(4, "mid-matrix algebra", pass, summary, pairs)
}
