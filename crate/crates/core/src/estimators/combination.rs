use std::sync::Mutex;

use rand::Rng;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};
use crate::sample_access::tree::DenseTree;
use crate::sketch::RowSketch;

pub const DEFAULT_ITERATION_CAP: u64 = 1_000_000;

/// Per-index values reused across draws: `(S* y)_i` and the proposal weight
/// `Σ_t |y_t|^2 |S_ti|^2`.
#[derive(Debug, Clone, Copy)]
struct Cached {
    value: C64,
    spread: f64,
}

/// Draws `i` with probability `|(S* y)_i|^2 / ‖S* y‖^2` by rejection.
///
/// A proposal picks sketch row `t` with probability `|y_t|^2 / ‖y‖^2`, then
/// `i` from that row's entry distribution. It is accepted with probability
/// `|(S* y)_i|^2 / (r Σ_t |y_t|^2 |S_ti|^2)`.
#[derive(Debug)]
pub struct LinearCombinationSampler<'s, 'a> {
    sketch: &'s RowSketch<'a>,
    y: Vec<C64>,
    y_tree: DenseTree,
    cap: u64,
    cache: Mutex<FxHashMap<usize, Cached>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draw {
    pub index: usize,
    pub iterations: u64,
}

impl<'s, 'a> LinearCombinationSampler<'s, 'a> {
    pub fn new(sketch: &'s RowSketch<'a>, y: Vec<C64>) -> Result<Self> {
        if y.len() != sketch.r() {
            return Err(Error::DimensionMismatch(format!("y has length {}, sketch has {} rows", y.len(), sketch.r())));
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("y has non-finite entries".into()));
        }
        let mut y_tree = DenseTree::new(y.len());
        for (t, z) in y.iter().enumerate() {
            y_tree.set(t, z.norm_sqr());
        }
        if y_tree.total() <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        Ok(Self { sketch, y, y_tree, cap: DEFAULT_ITERATION_CAP, cache: Mutex::new(FxHashMap::default()) })
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.cap = cap.max(1);
        self
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    fn evaluate(&self, i: usize) -> Result<Cached> {
        if let Some(c) = self.cache.lock().unwrap().get(&i) {
            return Ok(*c);
        }
        let col = self.sketch.s_column(i)?;
        let mut value = ZERO;
        let mut spread = 0.0;
        for (s, y) in col.iter().zip(&self.y) {
            value += s.conj() * y;
            spread += y.norm_sqr() * s.norm_sqr();
        }
        let c = Cached { value, spread };
        self.cache.lock().unwrap().insert(i, c);
        Ok(c)
    }

    /// `(S* y)_i` via `r` entry queries.
    pub fn value_at(&self, i: usize) -> Result<C64> {
        Ok(self.evaluate(i)?.value)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw> {
        let a = self.sketch.source();
        let r = self.sketch.r() as f64;
        let mut accept_mass = 0.0;
        for it in 1..=self.cap {
            let (t, _) = self.y_tree.sample(rng)?;
            let i = a.sample_in_row(self.sketch.row_indices()[t], rng)?;
            let c = self.evaluate(i)?;
            let p = c.value.norm_sqr() / (r * c.spread);
            accept_mass += p;
            if rng.random::<f64>() < p {
                return Ok(Draw { index: i, iterations: it });
            }
        }
        Err(Error::DegenerateCombination { iterations: self.cap, acceptance_rate: accept_mass / self.cap as f64 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;
    use crate::sample_access::SampledMatrix;
    use crate::sketch::sample_rows;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_row_accepts_immediately() {
        let a = SampledMatrix::build(2, 3, [(0, 0, real(1.0)), (0, 2, real(2.0)), (1, 1, real(1.0))]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rs = sample_rows(&a, 1, &mut rng).unwrap();
        let s = LinearCombinationSampler::new(&rs, vec![C64::new(0.3, -0.1)]).unwrap();
        for _ in 0..200 {
            assert_eq!(s.draw(&mut rng).unwrap().iterations, 1);
        }
    }

    #[test]
    fn one_hot_y_follows_that_row() {
        let a = SampledMatrix::build(2, 4, [(0, 0, real(1.0)), (1, 3, real(1.0)), (1, 2, real(1.0))]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rs = sample_rows(&a, 5, &mut rng).unwrap();
        let t = rs.row_indices().iter().position(|&p| p == 1).unwrap();
        let mut y = vec![ZERO; 5];
        y[t] = real(1.0);
        let s = LinearCombinationSampler::new(&rs, y).unwrap();
        for _ in 0..200 {
            let i = s.draw(&mut rng).unwrap().index;
            assert!(i == 2 || i == 3);
        }
    }

    #[test]
    fn cancelling_combination_is_degenerate() {
        let a = SampledMatrix::build(1, 2, [(0, 0, real(1.0)), (0, 1, real(1.0))]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rs = sample_rows(&a, 2, &mut rng).unwrap();
        let s = LinearCombinationSampler::new(&rs, vec![real(1.0), real(-1.0)]).unwrap().with_cap(1000);
        assert!(matches!(s.draw(&mut rng), Err(Error::DegenerateCombination { iterations: 1000, .. })));
    }

    #[test]
    fn zero_y_is_rejected() {
        let a = SampledMatrix::build(1, 1, [(0, 0, real(1.0))]).unwrap();
        let rs = sample_rows(&a, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matches!(LinearCombinationSampler::new(&rs, vec![ZERO]), Err(Error::EmptyDistribution)));
    }
}
