//! Dense complex helpers shared by the sketching, transformation and oracle
//! code. Matrices are `faer::Mat<C64>`.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for sketches, mid-matrices and test mirrors.
pub type DenseMatrix = Mat<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn zeros(m: usize, n: usize) -> DenseMatrix {
    Mat::zeros(m, n)
}

pub fn identity(n: usize) -> DenseMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn from_diag(d: &[f64]) -> DenseMatrix {
    let n = d.len();
    Mat::from_fn(n, n, |i, j| if i == j { real(d[i]) } else { ZERO })
}

pub fn adjoint(a: MatRef<'_, C64>) -> DenseMatrix {
    Mat::from_fn(a.ncols(), a.nrows(), |i, j| a[(j, i)].conj())
}

pub fn mul(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> DenseMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    a * b
}

/// `a b*`
pub fn mul_adjoint(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> DenseMatrix {
    assert_eq!(a.ncols(), b.ncols(), "inner dimensions differ");
    a * b.adjoint()
}

/// `a* a`
pub fn gram(a: MatRef<'_, C64>) -> DenseMatrix {
    a.adjoint() * a
}

/// `a a*`
pub fn outer_gram(a: MatRef<'_, C64>) -> DenseMatrix {
    a * a.adjoint()
}

pub fn sub(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> DenseMatrix {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

pub fn frobenius_sq(a: MatRef<'_, C64>) -> f64 {
    a.squared_norm_l2()
}

/// Singular values in non-increasing order.
pub fn singular_values(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    if !is_finite(a) {
        return Err(Error::NonFiniteMatrix);
    }
    let mut s = a.singular_values().map_err(|_| Error::SvdFailed)?;
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

pub fn spectral_norm(a: MatRef<'_, C64>) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}

pub fn is_finite(a: MatRef<'_, C64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

pub fn is_hermitian(a: MatRef<'_, C64>, tol: f64) -> bool {
    a.nrows() == a.ncols()
        && (0..a.nrows()).all(|i| (0..=i).all(|j| (a[(i, j)] - a[(j, i)].conj()).norm() <= tol))
}

pub fn mat_vec(a: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), v.len());
    let mut out = vec![ZERO; a.nrows()];
    for (j, &vj) in v.iter().enumerate() {
        if vj == ZERO {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += a[(i, j)] * vj;
        }
    }
    out
}

/// `a* v`
pub fn adjoint_mat_vec(a: MatRef<'_, C64>, v: &[C64]) -> Vec<C64> {
    assert_eq!(a.nrows(), v.len());
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].conj() * v[i]).sum())
        .collect()
}

pub fn norm(v: &[C64]) -> f64 {
    norm_sq(v).sqrt()
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

pub fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gram_of_identity_is_identity() {
        let i = identity(3);
        let g = gram(i.as_ref());
        assert!(frobenius(sub(g.as_ref(), i.as_ref()).as_ref()) < 1e-15);
    }

    #[test]
    fn singular_values_of_diag_are_sorted() {
        let d = from_diag(&[1.0, 3.0, 2.0]);
        let s = singular_values(d.as_ref()).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 2.0).abs() < 1e-12 && (s[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_products_match_explicit() {
        let a = Mat::from_fn(3, 2, |i, j| C64::new(i as f64 + 1.0, j as f64 - 0.5));
        let explicit = mul(adjoint(a.as_ref()).as_ref(), a.as_ref());
        let fast = gram(a.as_ref());
        assert!(frobenius(sub(explicit.as_ref(), fast.as_ref()).as_ref()) < 1e-12);
        let v = vec![C64::new(1.0, 2.0), C64::new(-1.0, 0.5), C64::new(0.0, 1.0)];
        let av = adjoint_mat_vec(a.as_ref(), &v);
        let explicit = mat_vec(adjoint(a.as_ref()).as_ref(), &v);
        assert!(norm(&vec_sub(&av, &explicit)) < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        let mut a = zeros(2, 2);
        a[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(singular_values(a.as_ref()), Err(Error::NonFiniteMatrix)));
    }
}
