use dequant_svt::linalg::{C64, ZERO};
use dequant_svt::sample_access::tree::SparseTree;
use dequant_svt::sample_access::SampledMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
struct Update {
    i: usize,
    j: usize,
    value: C64,
}

fn updates(m: usize, n: usize) -> impl Strategy<Value = Vec<Update>> {
    let entry = (0..m, 0..n, -3.0f64..3.0, -3.0f64..3.0, 0u8..4).prop_map(|(i, j, re, im, z)| Update {
        i,
        j,
        // A quarter of the updates clear the entry.
        value: if z == 0 { ZERO } else { C64::new(re, im) },
    });
    prop::collection::vec(entry, 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn updates_match_a_dense_mirror(us in updates(7, 13)) {
        let mut a = SampledMatrix::zeros(7, 13).unwrap();
        let mut mirror = vec![[ZERO; 13]; 7];
        for u in &us {
            a.update(u.i, u.j, u.value).unwrap();
            mirror[u.i][u.j] = u.value;
        }
        prop_assert!(a.check_invariants().is_ok());
        let mut frob = 0.0;
        for (i, row) in mirror.iter().enumerate() {
            let row_sq: f64 = row.iter().map(|v| v.norm_sqr()).sum();
            prop_assert!((a.row_norm_sq(i).unwrap() - row_sq).abs() <= 1e-12 * row_sq.max(1.0));
            for (j, &v) in row.iter().enumerate() {
                prop_assert_eq!(a.query(i, j).unwrap(), v);
            }
            frob += row_sq;
        }
        prop_assert!((a.frobenius_sq() - frob).abs() <= 1e-12 * frob.max(1.0));
        prop_assert_eq!(a.nnz(), mirror.iter().flatten().filter(|v| **v != ZERO).count());
    }

    #[test]
    fn samples_only_hit_nonzero_entries(us in updates(5, 9), seed in any::<u64>()) {
        let mut a = SampledMatrix::zeros(5, 9).unwrap();
        for u in &us {
            a.update(u.i, u.j, u.value).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if a.nnz() == 0 {
            prop_assert!(a.sample_entry(&mut rng).is_err());
        } else {
            for _ in 0..50 {
                let (i, j) = a.sample_entry(&mut rng).unwrap();
                prop_assert!(a.query(i, j).unwrap() != ZERO);
            }
        }
    }

    #[test]
    fn sparse_tree_stays_consistent(len in 1usize..300, sets in prop::collection::vec((any::<prop::sample::Index>(), 0.0f64..5.0, any::<bool>()), 0..400)) {
        let mut t = SparseTree::new(len);
        let mut leaves = vec![0.0; len];
        for (idx, w, clear) in sets {
            let j = idx.index(len);
            let w = if clear { 0.0 } else { w };
            t.set(j, w);
            leaves[j] = w;
        }
        prop_assert!(t.inconsistent_nodes().is_empty());
        for (j, &w) in leaves.iter().enumerate() {
            prop_assert_eq!(t.leaf(j), w);
        }
        let total: f64 = leaves.iter().sum();
        prop_assert!((t.total() - total).abs() <= 1e-12 * total.max(1.0));
    }
}
