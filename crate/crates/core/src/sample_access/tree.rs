//! Binary prefix-sum trees over non-negative leaf weights.
//!
//! Both trees use implicit heap layout: node 1 is the root, node `k` has
//! children `2k` and `2k + 1`, and leaf `j` lives at `capacity + j` where
//! `capacity` is the next power of two of the logical length. Leaves past the
//! logical length weigh zero.
//!
//! Every update recomputes the ancestors of the touched leaf from their two
//! children, so each internal node always equals the sum of its children as
//! stored. Every method reports how many node slots it read or wrote.

use rand::Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

fn depth_for(len: usize) -> u32 {
    len.max(1).next_power_of_two().trailing_zeros()
}

/// Walks from the root to a leaf with positive weight. `weight(k)` returns the
/// stored weight of node `k`.
fn descend<R, F>(depth: u32, root: f64, rng: &mut R, weight: F) -> (usize, u64)
where
    R: Rng + ?Sized,
    F: Fn(usize) -> f64,
{
    let mut u = rng.random::<f64>() * root;
    let mut node = 1usize;
    let mut visits = 1u64;
    for _ in 0..depth {
        let left = weight(2 * node);
        let right = weight(2 * node + 1);
        visits += 2;
        if (u < left && left > 0.0) || right <= 0.0 {
            node *= 2;
        } else {
            u -= left;
            node = 2 * node + 1;
        }
    }
    (node - (1usize << depth), visits)
}

/// Dense tree over a fixed number of leaves. Used for the row-weight tree.
#[derive(Debug, Clone)]
pub struct DenseTree {
    len: usize,
    depth: u32,
    nodes: Vec<f64>,
}

impl DenseTree {
    pub fn new(len: usize) -> Self {
        let depth = depth_for(len);
        Self {
            len,
            depth,
            nodes: vec![0.0; 2usize << depth],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn leaf(&self, j: usize) -> f64 {
        self.nodes[(1usize << self.depth) + j]
    }

    pub fn set(&mut self, j: usize, weight: f64) -> u64 {
        debug_assert!(j < self.len && weight >= 0.0);
        let mut k = (1usize << self.depth) + j;
        self.nodes[k] = weight;
        let mut visits = 1;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
            visits += 3;
        }
        visits
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, u64)> {
        let root = self.total();
        if root <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        Ok(descend(self.depth, root, rng, |k| self.nodes[k]))
    }

    /// Recomputes every internal node from the leaves.
    pub fn rebuild(&mut self) {
        for k in (1..(1usize << self.depth)).rev() {
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    #[cfg(test)]
    pub(crate) fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Tree over `len` logical leaves that only stores nodes with positive
/// weight, so storage is O(nnz * depth).
///
/// Nodes live in a hash map while the tree is sparse. Once positive nodes fill
/// half of the full heap they move to a flat array, which is no larger than
/// twice the map would be and avoids hashing on every descent. The tree moves
/// back to a map when fewer than an eighth of the slots are positive.
#[derive(Debug, Clone)]
pub struct SparseTree {
    len: usize,
    depth: u32,
    positive: usize,
    nodes: Nodes,
}

#[derive(Debug, Clone)]
enum Nodes {
    Map(FxHashMap<usize, f64>),
    Flat(Vec<f64>),
}

impl Default for SparseTree {
    fn default() -> Self {
        Self::new(0)
    }
}

impl SparseTree {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            depth: depth_for(len),
            positive: 0,
            nodes: Nodes::Map(FxHashMap::default()),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Nodes with positive weight.
    pub fn stored_nodes(&self) -> usize {
        self.positive
    }

    fn slots(&self) -> usize {
        2usize << self.depth
    }

    #[inline]
    fn weight(&self, k: usize) -> f64 {
        match &self.nodes {
            Nodes::Map(m) => m.get(&k).copied().unwrap_or(0.0),
            Nodes::Flat(v) => v[k],
        }
    }

    fn store(&mut self, k: usize, w: f64) {
        let before = self.weight(k) > 0.0;
        let after = w > 0.0;
        match &mut self.nodes {
            Nodes::Map(m) if after => {
                m.insert(k, w);
            }
            Nodes::Map(m) => {
                m.remove(&k);
            }
            Nodes::Flat(v) => v[k] = if after { w } else { 0.0 },
        }
        self.positive = self.positive + usize::from(after) - usize::from(before);
    }

    fn relayout(&mut self) {
        let slots = self.slots();
        match &self.nodes {
            Nodes::Map(m) if 2 * self.positive >= slots => {
                let mut v = vec![0.0; slots];
                for (&k, &w) in m {
                    v[k] = w;
                }
                self.nodes = Nodes::Flat(v);
            }
            Nodes::Flat(v) if 8 * self.positive < slots => {
                let m = v.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(k, &w)| (k, w)).collect();
                self.nodes = Nodes::Map(m);
            }
            _ => {}
        }
    }

    pub fn total(&self) -> f64 {
        self.weight(1)
    }

    pub fn leaf(&self, j: usize) -> f64 {
        self.weight((1usize << self.depth) + j)
    }

    pub fn set(&mut self, j: usize, weight: f64) -> u64 {
        debug_assert!(j < self.len && weight >= 0.0);
        let mut k = (1usize << self.depth) + j;
        self.store(k, weight);
        let mut visits = 1;
        while k > 1 {
            k /= 2;
            let w = self.weight(2 * k) + self.weight(2 * k + 1);
            self.store(k, w);
            visits += 3;
        }
        self.relayout();
        visits
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, u64)> {
        let root = self.total();
        if root <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        Ok(match &self.nodes {
            Nodes::Map(m) => descend(self.depth, root, rng, |k| m.get(&k).copied().unwrap_or(0.0)),
            Nodes::Flat(v) => descend(self.depth, root, rng, |k| v[k]),
        })
    }

    /// Internal nodes that differ from the sum of their children. Always empty
    /// unless the tree was corrupted.
    pub fn inconsistent_nodes(&self) -> Vec<usize> {
        let internal = 1usize << self.depth;
        let consistent = |k: &usize| self.weight(*k) == self.weight(2 * k) + self.weight(2 * k + 1);
        match &self.nodes {
            Nodes::Map(m) => {
                let mut bad: Vec<usize> = m.keys().copied().filter(|&k| k < internal && !consistent(&k)).collect();
                bad.sort_unstable();
                bad
            }
            Nodes::Flat(_) => (1..internal).filter(|k| !consistent(k)).collect(),
        }
    }

    #[cfg(test)]
    fn is_flat(&self) -> bool {
        matches!(self.nodes, Nodes::Flat(_))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_tree_sums_and_samples() {
        let mut t = DenseTree::new(5);
        for j in 0..5 {
            t.set(j, (j + 1) as f64);
        }
        assert_eq!(t.total(), 15.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut counts = [0usize; 5];
        for _ in 0..150_000 {
            counts[t.sample(&mut rng).unwrap().0] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            let p = (j + 1) as f64 / 15.0;
            assert!((c as f64 / 150_000.0 - p).abs() < 0.01, "leaf {j}: {c}");
        }
    }

    #[test]
    fn zero_leaves_are_never_sampled() {
        let mut t = SparseTree::new(16);
        t.set(3, 2.0);
        t.set(11, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (j, _) = t.sample(&mut rng).unwrap();
            assert!(j == 3 || j == 11);
        }
    }

    #[test]
    fn sparse_tree_drops_zeroed_paths() {
        let mut t = SparseTree::new(1000);
        t.set(500, 1.0);
        assert_eq!(t.stored_nodes(), t.depth() as usize + 1);
        t.set(500, 0.0);
        assert_eq!(t.stored_nodes(), 0);
        assert!(matches!(t.sample(&mut ChaCha8Rng::seed_from_u64(0)), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn sparse_tree_switches_layout_and_back() {
        let mut t = SparseTree::new(64);
        for j in 0..64 {
            t.set(j, 1.0 + j as f64);
        }
        assert!(t.is_flat());
        assert_eq!(t.total(), 2080.0);
        assert!(t.inconsistent_nodes().is_empty());
        for j in 1..64 {
            t.set(j, 0.0);
        }
        assert!(!t.is_flat());
        assert_eq!((t.total(), t.stored_nodes()), (1.0, 7));
        assert_eq!(t.sample(&mut ChaCha8Rng::seed_from_u64(3)).unwrap().0, 0);
    }

    #[test]
    fn single_leaf_tree() {
        let mut t = SparseTree::new(1);
        assert_eq!(t.depth(), 0);
        t.set(0, 4.0);
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.sample(&mut ChaCha8Rng::seed_from_u64(0)).unwrap(), (0, 1));
    }

    #[test]
    fn rebuild_is_identity_on_consistent_tree() {
        let mut t = DenseTree::new(9);
        for j in 0..9 {
            t.set(j, 0.1 * j as f64 + 0.3);
        }
        let before = t.nodes().to_vec();
        t.rebuild();
        assert_eq!(before, t.nodes());
    }
}
