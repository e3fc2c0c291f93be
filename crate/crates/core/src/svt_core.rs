//! SVD of small dense matrices, singular value transformation, and the
//! mid-matrix `P' = U diag(f(σ)/σ³) U*`.

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, real, DenseMatrix, C64};
use crate::spectral_fn::{SpectralFunction, SpectrumSummary};

/// How small a singular value may be before it is treated as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RankCutoff {
    /// `max(r, c) · ε_mach · σ_max`.
    Machine,
    /// `‖A‖ / (2κ)`, below the bracket every sketch singular value falls in.
    Spectrum { sigma_max: f64, kappa2: f64 },
    Fixed { tau: f64 },
}

impl RankCutoff {
    pub fn from_summary(s: &SpectrumSummary) -> Self {
        Self::Spectrum { sigma_max: s.sigma_max, kappa2: s.kappa2 }
    }

    fn tau(&self, r: usize, c: usize, sigma_max: f64) -> f64 {
        match *self {
            Self::Machine => r.max(c) as f64 * f64::EPSILON * sigma_max,
            Self::Spectrum { sigma_max: a, kappa2 } => (r.max(c) as f64 * f64::EPSILON * sigma_max).max(a / (2.0 * kappa2)),
            Self::Fixed { tau } => tau,
        }
    }
}

/// Thin SVD truncated to the singular values above `tau`.
#[derive(Debug, Clone)]
pub struct SmallSvd {
    /// `rows x k`
    pub u: DenseMatrix,
    /// Non-increasing, all above `tau`.
    pub sigma: Vec<f64>,
    /// `cols x k`
    pub v: DenseMatrix,
    pub tau: f64,
}

impl SmallSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn nrows(&self) -> usize {
        self.u.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.v.nrows()
    }

    /// `U diag(d) V*`
    fn combine(&self, d: impl Fn(f64) -> f64) -> DenseMatrix {
        let k = self.rank();
        let scaled = DenseMatrix::from_fn(self.nrows(), k, |i, t| self.u[(i, t)] * d(self.sigma[t]));
        if k == 0 {
            return linalg::zeros(self.nrows(), self.ncols());
        }
        linalg::mul_adjoint(scaled.as_ref(), self.v.as_ref())
    }

    /// `V diag(d) U*`
    fn combine_adjoint(&self, d: impl Fn(f64) -> f64) -> DenseMatrix {
        let k = self.rank();
        if k == 0 {
            return linalg::zeros(self.ncols(), self.nrows());
        }
        let scaled = DenseMatrix::from_fn(self.ncols(), k, |i, t| self.v[(i, t)] * d(self.sigma[t]));
        linalg::mul_adjoint(scaled.as_ref(), self.u.as_ref())
    }
}

pub fn svd(w: MatRef<'_, C64>, cutoff: RankCutoff) -> Result<SmallSvd> {
    let (r, c) = (w.nrows(), w.ncols());
    if !linalg::is_finite(w) {
        return Err(Error::NonFiniteMatrix);
    }
    if r == 0 || c == 0 {
        return Ok(SmallSvd { u: linalg::zeros(r, 0), sigma: vec![], v: linalg::zeros(c, 0), tau: 0.0 });
    }
    let dec = w.thin_svd().map_err(|_| Error::SvdFailed)?;
    let s: Vec<f64> = dec.S().column_vector().iter().map(|x| x.re).collect();
    let smax = s.iter().copied().fold(0.0, f64::max);
    let tau = cutoff.tau(r, c, smax);
    let mut keep: Vec<usize> = (0..s.len()).filter(|&t| s[t] > tau && s[t] > 0.0).collect();
    keep.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let (uf, vf) = (dec.U(), dec.V());
    Ok(SmallSvd {
        u: DenseMatrix::from_fn(r, keep.len(), |i, t| uf[(i, keep[t])]),
        sigma: keep.iter().map(|&t| s[t]).collect(),
        v: DenseMatrix::from_fn(c, keep.len(), |i, t| vf[(i, keep[t])]),
        tau,
    })
}

/// `Φ_f(M) = Σ f(σ) u v*`
pub fn phi(m: &SmallSvd, f: &SpectralFunction) -> DenseMatrix {
    m.combine(|s| f.eval(s))
}

/// `Φ_f(M*) = Σ f(σ) v u*`
pub fn phi_adjoint(m: &SmallSvd, f: &SpectralFunction) -> DenseMatrix {
    m.combine_adjoint(|s| f.eval(s))
}

#[derive(Debug, Clone)]
pub struct MidMatrix {
    pub p: DenseMatrix,
    pub rank: usize,
    pub function: String,
}

/// Closed form of `Φ_inv(W) Φ_f(W*) Φ_inv(W) Φ_inv(W*)`.
pub fn mid_matrix(w: &SmallSvd, f: &SpectralFunction) -> MidMatrix {
    MidMatrix { p: gram_weighted(&w.u, &w.sigma, f), rank: w.rank(), function: f.name() }
}

/// `U diag(f(σ)/σ³) U*`
fn gram_weighted(u: &DenseMatrix, sigma: &[f64], f: &SpectralFunction) -> DenseMatrix {
    let r = u.nrows();
    if sigma.is_empty() {
        return linalg::zeros(r, r);
    }
    let scaled = DenseMatrix::from_fn(r, sigma.len(), |i, t| u[(i, t)] * (f.eval(sigma[t]) / sigma[t].powi(3)));
    let mut p = linalg::mul_adjoint(scaled.as_ref(), u.as_ref());
    // Symmetrize away rounding so downstream code sees an exactly Hermitian matrix.
    for i in 0..r {
        p[(i, i)] = real(p[(i, i)].re);
        for j in 0..i {
            let z = (p[(i, j)] + p[(j, i)].conj()) * 0.5;
            p[(i, j)] = z;
            p[(j, i)] = z.conj();
        }
    }
    p
}

/// The mid-matrix as the literal product of four transforms. Used to check
/// the closed form.
pub fn four_factor_product(w: &SmallSvd, f: &SpectralFunction) -> DenseMatrix {
    let inv = SpectralFunction::inverse();
    let a = phi(w, &inv);
    let b = phi_adjoint(w, f);
    let c = phi(w, &inv);
    let d = phi_adjoint(w, &inv);
    let ab = linalg::mul(a.as_ref(), b.as_ref());
    let abc = linalg::mul(ab.as_ref(), c.as_ref());
    linalg::mul(abc.as_ref(), d.as_ref())
}

/// `P = Φ_inv(S) Φ_f(S*) Φ_inv(S) Φ_inv(S*)` from a dense `S`.
pub fn p_reference(s: MatRef<'_, C64>, f: &SpectralFunction, cutoff: RankCutoff) -> Result<DenseMatrix> {
    let d = svd(s, cutoff)?;
    Ok(gram_weighted(&d.u, &d.sigma, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, sub};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(r: usize, c: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(r, c, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn rel(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        frobenius(sub(a.as_ref(), b.as_ref()).as_ref()) / frobenius(b.as_ref()).max(f64::MIN_POSITIVE)
    }

    #[test]
    fn diag_svd() {
        let w = linalg::from_diag(&[2.0, 1.0]);
        let d = svd(w.as_ref(), RankCutoff::Machine).unwrap();
        assert!((d.sigma[0] - 2.0).abs() < 1e-14 && (d.sigma[1] - 1.0).abs() < 1e-14);
        let sq = phi(&d, &SpectralFunction::power(2.0).unwrap());
        assert!(rel(&sq, &linalg::from_diag(&[4.0, 1.0])) < 1e-14);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let d = svd(linalg::zeros(3, 4).as_ref(), RankCutoff::Machine).unwrap();
        assert_eq!(d.rank(), 0);
        let p = mid_matrix(&d, &SpectralFunction::identity());
        assert_eq!((p.p.nrows(), p.p.ncols()), (3, 3));
        assert_eq!(frobenius(p.p.as_ref()), 0.0);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let w = random(40, 60, 1);
        let d = svd(w.as_ref(), RankCutoff::Machine).unwrap();
        assert_eq!(d.rank(), 40);
        assert!(rel(&phi(&d, &SpectralFunction::identity()), &w) < 1e-10);
        let k = d.rank();
        let uu = linalg::gram(d.u.as_ref());
        let vv = linalg::gram(d.v.as_ref());
        let i = linalg::identity(k);
        assert!(frobenius(sub(uu.as_ref(), i.as_ref()).as_ref()) <= 1e-10 * (k as f64).sqrt());
        assert!(frobenius(sub(vv.as_ref(), i.as_ref()).as_ref()) <= 1e-10 * (k as f64).sqrt());
    }

    #[test]
    fn pseudo_inverse_identity() {
        let m = random(7, 5, 2);
        let d = svd(m.as_ref(), RankCutoff::Machine).unwrap();
        let pinv = phi_adjoint(&d, &SpectralFunction::inverse());
        let mpm = linalg::mul(linalg::mul(m.as_ref(), pinv.as_ref()).as_ref(), m.as_ref());
        assert!(rel(&mpm, &m) < 1e-9);
    }

    #[test]
    fn mid_matrix_examples() {
        let d = svd(linalg::identity(2).as_ref(), RankCutoff::Machine).unwrap();
        assert!(rel(&mid_matrix(&d, &SpectralFunction::identity()).p, &linalg::identity(2)) < 1e-14);
        let d = svd(linalg::from_diag(&[2.0]).as_ref(), RankCutoff::Machine).unwrap();
        let p = mid_matrix(&d, &SpectralFunction::inverse()).p;
        assert!((p[(0, 0)].re - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn closed_form_matches_four_factors() {
        let w = random(12, 20, 3);
        let d = svd(w.as_ref(), RankCutoff::Machine).unwrap();
        for f in [SpectralFunction::identity(), SpectralFunction::inverse(), SpectralFunction::power(3.0).unwrap()] {
            let closed = mid_matrix(&d, &f).p;
            assert!(rel(&four_factor_product(&d, &f), &closed) < 1e-9, "{}", f.name());
            assert!(linalg::is_hermitian(closed.as_ref(), 0.0));
        }
    }

    #[test]
    fn spectrum_cutoff_drops_tail() {
        let w = linalg::from_diag(&[1.0, 0.9, 1e-3]);
        let cut = RankCutoff::Spectrum { sigma_max: 1.0, kappa2: 2.0 };
        let d = svd(w.as_ref(), cut).unwrap();
        assert_eq!(d.rank(), 2);
        assert_eq!(d.tau, 0.25);
    }

    #[test]
    fn reference_equals_mid_matrix_on_same_input() {
        let w = random(6, 9, 4);
        let f = SpectralFunction::power(2.0).unwrap();
        let p = p_reference(w.as_ref(), &f, RankCutoff::Machine).unwrap();
        let d = svd(w.as_ref(), RankCutoff::Machine).unwrap();
        assert!(rel(&p, &mid_matrix(&d, &f).p) < 1e-12);
    }
}
