//! Synthetic matrices `A = U Σ V*` with a prescribed spectrum.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, C64, ZERO};
use crate::sample_access::SampledMatrix;
use crate::spectral_fn::SpectrumSummary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub m: usize,
    pub n: usize,
    /// Positive and non-increasing; the length is the rank.
    pub singular_values: Vec<f64>,
    #[serde(default = "default_complex")]
    pub complex: bool,
}

fn default_complex() -> bool {
    true
}

impl InstanceSpec {
    /// `k` values evenly spaced from `hi` down to `lo`.
    pub fn linspace(m: usize, n: usize, k: usize, hi: f64, lo: f64, complex: bool) -> Self {
        let singular_values = if k == 1 {
            vec![hi]
        } else {
            (0..k).map(|t| hi + (lo - hi) * t as f64 / (k - 1) as f64).collect()
        };
        Self { m, n, singular_values, complex }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.singular_values.len();
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("dimensions must be positive".into()));
        }
        if k > self.m.min(self.n) {
            return Err(Error::InvalidParameter(format!("rank {k} exceeds min({}, {})", self.m, self.n)));
        }
        if self.singular_values.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter("singular values must be positive".into()));
        }
        if self.singular_values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("singular values must be non-increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub a: DenseMatrix,
    /// `m x k`, orthonormal columns.
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    /// `n x k`, orthonormal columns.
    pub v: DenseMatrix,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, complex: bool) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
    C64::new(re, im)
}

/// `rows x k` matrix with orthonormal columns.
pub fn random_orthonormal<R: Rng + ?Sized>(rows: usize, k: usize, complex: bool, rng: &mut R) -> DenseMatrix {
    if k == 0 {
        return linalg::zeros(rows, 0);
    }
    let g = DenseMatrix::from_fn(rows, k, |_, _| gaussian(rng, complex));
    g.qr().compute_thin_Q()
}

pub fn random_dense<R: Rng + ?Sized>(m: usize, n: usize, complex: bool, rng: &mut R) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| gaussian(rng, complex))
}

pub fn random_vector<R: Rng + ?Sized>(n: usize, complex: bool, rng: &mut R) -> Vec<C64> {
    (0..n).map(|_| gaussian(rng, complex)).collect()
}

pub fn generate<R: Rng + ?Sized>(spec: &InstanceSpec, rng: &mut R) -> Result<Instance> {
    spec.validate()?;
    let k = spec.singular_values.len();
    let u = random_orthonormal(spec.m, k, spec.complex, rng);
    let v = random_orthonormal(spec.n, k, spec.complex, rng);
    let a = if k == 0 {
        linalg::zeros(spec.m, spec.n)
    } else {
        let us = DenseMatrix::from_fn(spec.m, k, |i, t| u[(i, t)] * spec.singular_values[t]);
        let mut a = linalg::mul_adjoint(us.as_ref(), v.as_ref());
        if !spec.complex {
            for j in 0..spec.n {
                for i in 0..spec.m {
                    a[(i, j)].im = 0.0;
                }
            }
        }
        a
    };
    Ok(Instance { a, u, sigma: spec.singular_values.clone(), v })
}

impl Instance {
    pub fn summary(&self) -> Result<SpectrumSummary> {
        SpectrumSummary::from_singular_values(&self.sigma, 0.0)
    }

    pub fn sampled(&self) -> Result<SampledMatrix> {
        SampledMatrix::from_dense(&self.a)
    }

    /// A unit vector in the column space of `A`.
    pub fn column_space_vector<R: Rng + ?Sized>(&self, complex: bool, rng: &mut R) -> Vec<C64> {
        let k = self.sigma.len();
        let coef = random_vector(k, complex, rng);
        let mut b = linalg::mat_vec(self.u.as_ref(), &coef);
        let nb = linalg::norm(&b);
        if nb > 0.0 {
            b.iter_mut().for_each(|x| *x /= nb);
        }
        b
    }

    /// `Φ_f(A*) b = V diag(f(σ)) U* b`, from the exact factors.
    pub fn svt_apply(&self, f: &crate::spectral_fn::SpectralFunction, b: &[C64]) -> Vec<C64> {
        let utb = linalg::adjoint_mat_vec(self.u.as_ref(), b);
        let scaled: Vec<C64> = utb.iter().zip(&self.sigma).map(|(x, &s)| x * f.eval(s)).collect();
        if scaled.is_empty() {
            return vec![ZERO; self.v.nrows()];
        }
        linalg::mat_vec(self.v.as_ref(), &scaled)
    }
}
