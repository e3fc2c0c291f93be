//! Row sketch `S` (implicit: sampled row indices and scales) and column
//! sketch `W` (explicit `r x c`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, C64, ZERO};
use crate::sample_access::SampledMatrix;

/// `S` with row `s` equal to `scale_s · A_(p_s, .)`, where
/// `scale_s = ‖A‖_F / (√r ‖A_(p_s, .)‖)`.
#[derive(Debug, Clone)]
pub struct RowSketch<'a> {
    a: &'a SampledMatrix,
    rows: Vec<usize>,
    scales: Vec<f64>,
    frob: f64,
}

/// Draws `r` rows i.i.d. from the row distribution of `a`.
pub fn sample_rows<'a, R: Rng + ?Sized>(a: &'a SampledMatrix, r: usize, rng: &mut R) -> Result<RowSketch<'a>> {
    if r == 0 {
        return Err(Error::InvalidParameter("sketch size r must be positive".into()));
    }
    let frob = a.frobenius();
    if frob <= 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let mut rows = Vec::with_capacity(r);
    let mut scales = Vec::with_capacity(r);
    let root_r = (r as f64).sqrt();
    for _ in 0..r {
        let p = a.sample_row(rng)?;
        rows.push(p);
        scales.push(frob / (root_r * a.row_norm(p)?));
    }
    Ok(RowSketch { a, rows, scales, frob })
}

impl<'a> RowSketch<'a> {
    pub fn source(&self) -> &'a SampledMatrix {
        self.a
    }

    pub fn r(&self) -> usize {
        self.rows.len()
    }

    pub fn row_indices(&self) -> &[usize] {
        &self.rows
    }

    pub fn row_scales(&self) -> &[f64] {
        &self.scales
    }

    /// `‖S‖_F`, equal to `‖A‖_F` by construction.
    pub fn frobenius(&self) -> f64 {
        self.frob
    }

    /// Norm shared by every row of `S`: `‖A‖_F / √r`.
    pub fn row_norm(&self) -> f64 {
        self.frob / (self.r() as f64).sqrt()
    }

    /// `S_(s, i)`
    pub fn entry(&self, s: usize, i: usize) -> C64 {
        self.a.get(self.rows[s], i) * self.scales[s]
    }

    /// Column `i` of `S` (row `i` of `S*` up to conjugation), from `r` queries.
    pub fn s_column(&self, i: usize) -> Result<Vec<C64>> {
        if i >= self.a.ncols() {
            return Err(Error::IndexOutOfRange { i: 0, j: i, m: self.r(), n: self.a.ncols() });
        }
        Ok((0..self.r()).map(|s| self.entry(s, i)).collect())
    }

    /// Dense `r x n` copy of `S`. Only sensible for small `n`.
    pub fn materialize(&self) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(self.r(), self.a.ncols());
        for (k, &p) in self.rows.iter().enumerate() {
            for j in 0..self.a.ncols() {
                let v = self.a.get(p, j);
                if v != ZERO {
                    s[(k, j)] = v * self.scales[k];
                }
            }
        }
        s
    }
}

/// `W` with `W_(s, t) = S_(s, q_t) · ‖S‖_F / (√c ‖S_(., q_t)‖)`.
#[derive(Debug, Clone)]
pub struct WSketch {
    pub cols: Vec<usize>,
    pub col_scales: Vec<f64>,
    pub w: DenseMatrix,
}

impl WSketch {
    pub fn c(&self) -> usize {
        self.cols.len()
    }
}

/// Draws `c` columns of `S`: a uniform sketch row, then a column from that
/// row's entry distribution.
pub fn sample_columns<R: Rng + ?Sized>(rs: &RowSketch<'_>, c: usize, rng: &mut R) -> Result<WSketch> {
    if c == 0 {
        return Err(Error::InvalidParameter("sketch size c must be positive".into()));
    }
    let r = rs.r();
    let root_c = (c as f64).sqrt();
    let mut cols = Vec::with_capacity(c);
    let mut col_scales = Vec::with_capacity(c);
    let mut w = DenseMatrix::zeros(r, c);
    for t in 0..c {
        let s = rng.random_range(0..r);
        let q = rs.a.sample_in_row(rs.rows[s], rng)?;
        let col = rs.s_column(q)?;
        let norm = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let scale = rs.frob / (root_c * norm);
        for (k, v) in col.into_iter().enumerate() {
            w[(k, t)] = v * scale;
        }
        cols.push(q);
        col_scales.push(scale);
    }
    Ok(WSketch { cols, col_scales, w })
}

/// JSON form of a sketch: indices, scales and `W` as row-major `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchSnapshot {
    pub r: usize,
    pub c: usize,
    pub row_indices: Vec<usize>,
    pub row_scales: Vec<f64>,
    pub col_indices: Vec<usize>,
    pub col_scales: Vec<f64>,
    pub w: Vec<[f64; 2]>,
}

impl SketchSnapshot {
    pub fn new(rs: &RowSketch<'_>, ws: &WSketch) -> Self {
        let (r, c) = (rs.r(), ws.c());
        let mut w = Vec::with_capacity(r * c);
        for s in 0..r {
            for t in 0..c {
                let z = ws.w[(s, t)];
                w.push([z.re, z.im]);
            }
        }
        Self {
            r,
            c,
            row_indices: rs.rows.clone(),
            row_scales: rs.scales.clone(),
            col_indices: ws.cols.clone(),
            col_scales: ws.col_scales.clone(),
            w,
        }
    }

    pub fn w_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.r, self.c, |s, t| {
            let [re, im] = self.w[s * self.c + t];
            C64::new(re, im)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, real};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(m: usize, n: usize, seed: u64) -> SampledMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = DenseMatrix::from_fn(m, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        SampledMatrix::from_dense(&d).unwrap()
    }

    #[test]
    fn single_nonzero_row() {
        let a = SampledMatrix::build(4, 3, [(2, 0, real(1.0)), (2, 2, real(-2.0))]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rs = sample_rows(&a, 7, &mut rng).unwrap();
        assert!(rs.row_indices().iter().all(|&p| p == 2));
    }

    #[test]
    fn one_row_sketch_has_full_norm() {
        let a = random(10, 6, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rs = sample_rows(&a, 1, &mut rng).unwrap();
        let s = rs.materialize();
        assert!((linalg::frobenius(s.as_ref()) - a.frobenius()).abs() < 1e-12 * a.frobenius());
    }

    #[test]
    fn norms_preserved() {
        let a = random(30, 20, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rs = sample_rows(&a, 13, &mut rng).unwrap();
        let ws = sample_columns(&rs, 9, &mut rng).unwrap();
        let fa = a.frobenius();
        assert!((linalg::frobenius(rs.materialize().as_ref()) - fa).abs() < 1e-10 * fa);
        assert!((linalg::frobenius(ws.w.as_ref()) - fa).abs() < 1e-10 * fa);
    }

    #[test]
    fn diagonal_columns_hit_sampled_rows() {
        let a = SampledMatrix::build(5, 5, (0..5).map(|i| (i, i, real(i as f64 + 1.0)))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rs = sample_rows(&a, 3, &mut rng).unwrap();
        let ws = sample_columns(&rs, 10, &mut rng).unwrap();
        assert!(ws.cols.iter().all(|q| rs.row_indices().contains(q)));
    }

    #[test]
    fn equal_modulus_two_by_two() {
        let a = SampledMatrix::build(2, 2, [(0, 0, real(1.0)), (0, 1, real(-1.0)), (1, 0, real(1.0)), (1, 1, real(1.0))])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rs = sample_rows(&a, 2, &mut rng).unwrap();
        let ws = sample_columns(&rs, 2, &mut rng).unwrap();
        for s in 0..2 {
            for t in 0..2 {
                assert!((ws.w[(s, t)].norm() - a.frobenius() / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn s_column_matches_dense() {
        let a = random(15, 8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rs = sample_rows(&a, 6, &mut rng).unwrap();
        let s = rs.materialize();
        for i in 0..8 {
            let col = rs.s_column(i).unwrap();
            for k in 0..6 {
                assert_eq!(col[k], s[(k, i)]);
            }
        }
        assert!(rs.s_column(8).is_err());
    }

    #[test]
    fn zero_matrix_rejected() {
        let a = SampledMatrix::zeros(3, 3).unwrap();
        assert!(matches!(sample_rows(&a, 2, &mut ChaCha8Rng::seed_from_u64(0)), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn snapshot_round_trip() {
        let a = random(6, 5, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rs = sample_rows(&a, 3, &mut rng).unwrap();
        let ws = sample_columns(&rs, 4, &mut rng).unwrap();
        let snap = SketchSnapshot::new(&rs, &ws);
        let back: SketchSnapshot = serde_json::from_str(&serde_json::to_string(&snap).unwrap()).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.w_matrix(), ws.w);
    }
}
