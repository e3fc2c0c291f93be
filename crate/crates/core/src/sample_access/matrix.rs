use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rustc_hash::{FxHashMap, FxHashSet};

use super::tree::{DenseTree, SparseTree};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, C64, ZERO};

/// Updates between full recomputations of the row-weight tree.
const REBUILD_PERIOD: u64 = 1 << 20;

/// A matrix held in prefix-sum trees so that entries can be read and updated
/// and rows, entries within a row, and entries overall can be drawn with
/// probability proportional to their squared magnitude.
///
/// One sparse tree per row holds `|A_ij|^2`; a dense tree over the rows holds
/// the row weights. A hash side-index answers entry queries in O(1).
///
/// Reads take `&self` and may run concurrently. The node-visit counter is
/// atomic so that concurrent samplers can be instrumented.
#[derive(Debug)]
pub struct SampledMatrix {
    m: usize,
    n: usize,
    rows: Vec<SparseTree>,
    row_tree: DenseTree,
    values: FxHashMap<(usize, usize), C64>,
    updates: u64,
    visits: AtomicU64,
}

impl Clone for SampledMatrix {
    fn clone(&self) -> Self {
        Self {
            m: self.m,
            n: self.n,
            rows: self.rows.clone(),
            row_tree: self.row_tree.clone(),
            values: self.values.clone(),
            updates: self.updates,
            visits: AtomicU64::new(self.visits.load(Ordering::Relaxed)),
        }
    }
}

impl SampledMatrix {
    /// An all-zero `m x n` matrix.
    pub fn zeros(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter(format!("dimensions must be positive, got {m}x{n}")));
        }
        Ok(Self {
            m,
            n,
            rows: (0..m).map(|_| SparseTree::new(n)).collect(),
            row_tree: DenseTree::new(m),
            values: FxHashMap::default(),
            updates: 0,
            visits: AtomicU64::new(0),
        })
    }

    /// Builds from `(i, j, value)` triplets. Duplicate coordinates are rejected.
    pub fn build<I>(m: usize, n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut out = Self::zeros(m, n)?;
        let mut seen = FxHashSet::default();
        for (i, j, v) in triplets {
            out.check(i, j)?;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteEntry { i, j });
            }
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEntry { i, j });
            }
            if v != ZERO {
                out.values.insert((i, j), v);
                out.rows[i].set(j, v.norm_sqr());
            }
        }
        for i in 0..m {
            let w = out.rows[i].total();
            if w > 0.0 {
                out.row_tree.set(i, w);
            }
        }
        Ok(out)
    }

    /// Stores a vector as a `1 x len` matrix.
    pub fn from_vector(v: &[C64]) -> Result<Self> {
        Self::build(1, v.len(), v.iter().enumerate().map(|(j, &x)| (0, j, x)))
    }

    pub fn from_dense(a: &DenseMatrix) -> Result<Self> {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != ZERO {
                    t.push((i, j, v));
                }
            }
        }
        Self::build(a.nrows(), a.ncols(), t)
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.m || j >= self.n {
            return Err(Error::IndexOutOfRange { i, j, m: self.m, n: self.n });
        }
        Ok(())
    }

    fn count(&self, v: u64) {
        self.visits.fetch_add(v, Ordering::Relaxed);
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn update(&mut self, i: usize, j: usize, value: C64) -> Result<()> {
        self.check(i, j)?;
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::NonFiniteEntry { i, j });
        }
        if value == ZERO {
            self.values.remove(&(i, j));
        } else {
            self.values.insert((i, j), value);
        }
        let mut v = self.rows[i].set(j, value.norm_sqr());
        v += self.row_tree.set(i, self.rows[i].total());
        self.count(v);
        self.updates += 1;
        if self.updates.is_multiple_of(REBUILD_PERIOD) {
            self.row_tree.rebuild();
        }
        Ok(())
    }

    pub fn query(&self, i: usize, j: usize) -> Result<C64> {
        self.check(i, j)?;
        self.count(1);
        Ok(self.get(i, j))
    }

    /// Unchecked read used on hot paths where the index is known valid.
    pub(crate) fn get(&self, i: usize, j: usize) -> C64 {
        self.values.get(&(i, j)).copied().unwrap_or(ZERO)
    }

    /// `‖A‖_F^2`, read from the root of the row tree.
    pub fn frobenius_sq(&self) -> f64 {
        self.row_tree.total()
    }

    pub fn frobenius(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn row_norm_sq(&self, i: usize) -> Result<f64> {
        self.check(i, 0)?;
        self.count(1);
        Ok(self.row_tree.leaf(i))
    }

    pub fn row_norm(&self, i: usize) -> Result<f64> {
        Ok(self.row_norm_sq(i)?.sqrt())
    }

    /// Draws row `i` with probability `‖A_i‖^2 / ‖A‖_F^2`.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let (i, v) = self.row_tree.sample(rng)?;
        self.count(v);
        Ok(i)
    }

    /// Draws column `j` with probability `|A_ij|^2 / ‖A_i‖^2`.
    pub fn sample_in_row<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<usize> {
        self.check(i, 0)?;
        let (j, v) = self.rows[i].sample(rng)?;
        self.count(v);
        Ok(j)
    }

    /// Draws an entry with probability `|A_ij|^2 / ‖A‖_F^2`.
    pub fn sample_entry<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize)> {
        let i = self.sample_row(rng)?;
        let j = self.sample_in_row(i, rng)?;
        Ok((i, j))
    }

    /// Total node visits recorded since construction.
    pub fn node_visits(&self) -> u64 {
        self.visits.load(Ordering::Relaxed)
    }

    /// Per-operation visit ceiling `4 (ceil log2 m + ceil log2 n + 2)`.
    pub fn visit_bound(&self) -> u64 {
        let lg = |x: usize| x.next_power_of_two().trailing_zeros() as u64;
        4 * (lg(self.m) + lg(self.n) + 2)
    }

    /// Nonzero entries sorted by `(i, j)`.
    pub fn entries(&self) -> Vec<(usize, usize, C64)> {
        let mut e: Vec<_> = self.values.iter().map(|(&(i, j), &v)| (i, j, v)).collect();
        e.sort_unstable_by_key(|&(i, j, _)| (i, j));
        e
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut a = DenseMatrix::zeros(self.m, self.n);
        for (&(i, j), &v) in &self.values {
            a[(i, j)] = v;
        }
        a
    }

    /// Row `i` as a dense vector. Scans every stored entry.
    pub fn row_dense(&self, i: usize) -> Result<Vec<C64>> {
        self.check(i, 0)?;
        let mut out = vec![ZERO; self.n];
        for (&(r, j), &v) in &self.values {
            if r == i {
                out[j] = v;
            }
        }
        Ok(out)
    }

    /// Checks every stored invariant. Returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut total = 0.0;
        for i in 0..self.m {
            let root = self.rows[i].total();
            if self.row_tree.leaf(i) != root {
                return Err(format!("row leaf {i} = {} but row root = {root}", self.row_tree.leaf(i)));
            }
            if let Some(k) = self.rows[i].inconsistent_nodes().first() {
                return Err(format!("row {i} node {k} differs from its children"));
            }
            total += root;
        }
        let direct: f64 = self.values.values().map(|v| v.norm_sqr()).sum();
        let tol = 1e-12 * direct.max(f64::MIN_POSITIVE);
        if (self.frobenius_sq() - direct).abs() > tol || (total - direct).abs() > tol {
            return Err(format!("root {} vs direct sum {direct}", self.frobenius_sq()));
        }
        Ok(())
    }
}
