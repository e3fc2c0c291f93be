use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::rng::{child_seeds, Rng as StreamRng};
use crate::sample_access::SampledMatrix;
use crate::sketch::RowSketch;

/// Refuse estimates that would need more draws than this.
pub const MAX_SAMPLES: u64 = 10_000_000_000;

/// Groups below this many draws in total run on the calling thread.
const PARALLEL_THRESHOLD: u64 = 1 << 14;

/// A vector that can be read at any index in O(1) and whose norm is known.
pub trait Evaluable: Sync {
    fn len(&self) -> usize;
    fn at(&self, i: usize) -> C64;
    fn norm(&self) -> f64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A dense vector with its norm computed once.
#[derive(Debug, Clone)]
pub struct DenseVector {
    data: Vec<C64>,
    norm: f64,
}

impl DenseVector {
    pub fn new(data: Vec<C64>) -> Self {
        let norm = crate::linalg::norm(&data);
        Self { data, norm }
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }
}

impl Evaluable for DenseVector {
    fn len(&self) -> usize {
        self.data.len()
    }
    fn at(&self, i: usize) -> C64 {
        self.data[i]
    }
    fn norm(&self) -> f64 {
        self.norm
    }
}

/// The conjugate of row `s` of a row sketch, so that `v* M w` with this `v`
/// equals `S_(s, .) M w`.
pub struct ConjSketchRow<'s, 'a> {
    pub sketch: &'s RowSketch<'a>,
    pub s: usize,
}

impl Evaluable for ConjSketchRow<'_, '_> {
    fn len(&self) -> usize {
        self.sketch.source().ncols()
    }
    fn at(&self, i: usize) -> C64 {
        self.sketch.entry(self.s, i).conj()
    }
    fn norm(&self) -> f64 {
        self.sketch.row_norm()
    }
}

/// A stored matrix `A` read either as itself or as `A*`. Entry sampling has
/// the same distribution in both views, with indices swapped.
#[derive(Debug, Clone, Copy)]
pub enum MatrixView<'a> {
    Direct(&'a SampledMatrix),
    Adjoint(&'a SampledMatrix),
}

impl MatrixView<'_> {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Self::Direct(a) => (a.nrows(), a.ncols()),
            Self::Adjoint(a) => (a.ncols(), a.nrows()),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        match self {
            Self::Direct(a) | Self::Adjoint(a) => a.frobenius_sq(),
        }
    }

    /// Draws `(i, j)` with probability `|M_ij|^2 / ‖M‖_F^2` and returns `M_ij`.
    pub fn sample_entry<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize, C64)> {
        match self {
            Self::Direct(a) => {
                let (i, j) = a.sample_entry(rng)?;
                Ok((i, j, a.get(i, j)))
            }
            Self::Adjoint(a) => {
                let (i, j) = a.sample_entry(rng)?;
                Ok((j, i, a.get(i, j).conj()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearEstimate {
    pub value: C64,
    pub epsilon: f64,
    pub delta: f64,
    pub samples_used: u64,
}

/// Draw budget `(per group, groups)` for additive error `eps` and failure
/// probability `delta` when the single-draw variance is at most `variance`.
pub fn budget(variance: f64, eps: f64, delta: f64) -> (u64, u64) {
    let per_group = (6.0 * variance / (eps * eps)).ceil().max(1.0) as u64;
    let groups = (8.0 * (2.0 / delta).ln()).ceil().max(1.0) as u64;
    (per_group, groups)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median-of-means estimate of `v* M w`.
///
/// Each draw picks `(i, j)` with probability `|M_ij|^2 / ‖M‖_F^2` and yields
/// `conj(v_i) M_ij w_j ‖M‖_F^2 / |M_ij|^2`. Group means are combined by the
/// median of their real parts and of their imaginary parts.
pub fn estimate_bilinear<V, W, R>(
    v: &V,
    m: MatrixView<'_>,
    w: &W,
    eps: f64,
    delta: f64,
    rng: &mut R,
) -> Result<BilinearEstimate>
where
    V: Evaluable + ?Sized,
    W: Evaluable + ?Sized,
    R: Rng + ?Sized,
{
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps' must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (rows, cols) = m.shape();
    if v.len() != rows || w.len() != cols {
        return Err(Error::DimensionMismatch(format!(
            "v has length {}, w has length {}, M is {rows}x{cols}",
            v.len(),
            w.len()
        )));
    }
    let fro2 = m.frobenius_sq();
    let zero = BilinearEstimate { value: ZERO, epsilon: eps, delta, samples_used: 0 };
    if v.norm() == 0.0 || w.norm() == 0.0 || fro2 == 0.0 {
        return Ok(zero);
    }
    let variance = v.norm().powi(2) * w.norm().powi(2) * fro2;
    let (per_group, groups) = budget(variance, eps, delta);
    let total = per_group.saturating_mul(groups);
    if total > MAX_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "bilinear estimate needs {total} draws (limit {MAX_SAMPLES})"
        )));
    }

    let mut parent = StreamRng::seed_from_u64(rng.next_u64());
    let seeds = child_seeds(&mut parent, groups as usize);
    let group_mean = |seed: &u64| -> Result<C64> {
        let mut g = StreamRng::seed_from_u64(*seed);
        let mut acc = ZERO;
        for _ in 0..per_group {
            let (i, j, mij) = m.sample_entry(&mut g)?;
            acc += v.at(i).conj() * mij * w.at(j) * (fro2 / mij.norm_sqr());
        }
        Ok(acc / per_group as f64)
    };
    let means: Vec<C64> = if total >= PARALLEL_THRESHOLD {
        seeds.par_iter().map(group_mean).collect::<Result<_>>()?
    } else {
        seeds.iter().map(group_mean).collect::<Result<_>>()?
    };
    let mut re: Vec<f64> = means.iter().map(|z| z.re).collect();
    let mut im: Vec<f64> = means.iter().map(|z| z.im).collect();
    Ok(BilinearEstimate {
        value: C64::new(median(&mut re), median(&mut im)),
        epsilon: eps,
        delta,
        samples_used: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_estimator_is_exact() {
        let m = SampledMatrix::build(3, 2, [(0, 0, real(5.0))]).unwrap();
        let e1 = DenseVector::new(vec![real(1.0), ZERO, ZERO]);
        let f1 = DenseVector::new(vec![real(1.0), ZERO]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = estimate_bilinear(&e1, MatrixView::Direct(&m), &f1, 0.5, 0.1, &mut rng).unwrap();
        assert_eq!(est.value, real(5.0));
    }

    #[test]
    fn zero_vector_short_circuits() {
        let m = SampledMatrix::build(2, 2, [(0, 1, real(1.0))]).unwrap();
        let v = DenseVector::new(vec![real(1.0), real(1.0)]);
        let w = DenseVector::new(vec![ZERO, ZERO]);
        let est = estimate_bilinear(&v, MatrixView::Direct(&m), &w, 0.1, 0.1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((est.value, est.samples_used), (ZERO, 0));
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = SampledMatrix::build(1, 1, [(0, 0, real(1.0))]).unwrap();
        let v = DenseVector::new(vec![real(1.0)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(estimate_bilinear(&v, MatrixView::Direct(&m), &v, 0.0, 0.1, &mut rng).is_err());
        assert!(estimate_bilinear(&v, MatrixView::Direct(&m), &v, 0.1, 1.0, &mut rng).is_err());
        let w2 = DenseVector::new(vec![real(1.0), real(1.0)]);
        assert!(matches!(
            estimate_bilinear(&v, MatrixView::Direct(&m), &w2, 0.1, 0.1, &mut rng),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn adjoint_view_conjugates() {
        let a = SampledMatrix::build(1, 2, [(0, 1, C64::new(0.0, 2.0))]).unwrap();
        let v = DenseVector::new(vec![ZERO, real(1.0)]);
        let w = DenseVector::new(vec![real(1.0)]);
        let est = estimate_bilinear(&v, MatrixView::Adjoint(&a), &w, 0.1, 0.1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((est.value - C64::new(0.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn budget_formula() {
        assert_eq!(budget(1.0, 1.0, 0.05), (6, 30));
        let (g, _) = budget(4.0, 0.5, 0.5);
        assert_eq!(g, 96);
    }
}
