//! Dense reference computations and inequality checkers.
//!
//! Everything here works on explicit matrices and is exact up to floating
//! point. Checkers return both sides of the inequality so callers can report
//! margins.

use faer::MatRef;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ZERO};
use crate::pipeline::sketch_divisor;
use crate::spectral_fn::{intervals, SpectralBounds, SpectralFunction, SpectrumSummary};
use crate::svt_core::{phi, svd, RankCutoff, SmallSvd};

/// Relative slack used by the matrix inequality checkers.
pub const SLACK: f64 = 1e-9;
/// Slack for the total variation bound, which involves no decompositions.
pub const TV_SLACK: f64 = 1e-12;

/// Points used to maximize `|g'(σ)| + |g(σ)/σ|` over an interval.
const FPSD_GRID: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl BoundCheck {
    /// `lhs ≤ rhs + slack · max(1, rhs)`
    pub fn new(lhs: f64, rhs: f64, slack: f64) -> Self {
        let pass = lhs.is_finite() && lhs <= rhs + slack * rhs.max(1.0);
        Self { lhs, rhs, pass }
    }

    /// `rhs − lhs`
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// `Φ_f(A*) b = V diag(f(σ)) U* b` through a full SVD of `A`.
pub fn exact_svt_apply(a: MatRef<'_, C64>, f: &SpectralFunction, b: &[C64]) -> Result<Vec<C64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!("b has length {}, A has {} rows", b.len(), a.nrows())));
    }
    let d = svd(a, RankCutoff::Machine)?;
    Ok(svt_apply_factors(&d, f, b))
}

/// `V diag(f(σ)) U* b` from given factors.
pub fn svt_apply_factors(d: &SmallSvd, f: &SpectralFunction, b: &[C64]) -> Vec<C64> {
    if d.rank() == 0 {
        return vec![ZERO; d.ncols()];
    }
    let utb = linalg::adjoint_mat_vec(d.u.as_ref(), b);
    let scaled: Vec<C64> = utb.iter().zip(&d.sigma).map(|(x, &s)| x * f.eval(s)).collect();
    linalg::mat_vec(d.v.as_ref(), &scaled)
}

/// `P_v(i) = |v_i|² / ‖v‖²`
pub fn exact_distribution(v: &[C64]) -> Result<Vec<f64>> {
    let total = linalg::norm_sq(v);
    if !(total > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    Ok(v.iter().map(|x| x.norm_sqr() / total).collect())
}

pub fn empirical_distribution(counts: &[u64]) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyDistribution);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// `½ Σ |p_i − q_i|`
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    for d in [p, q] {
        let s: f64 = d.iter().sum();
        if (s - 1.0).abs() > 1e-9 || d.iter().any(|&x| x < 0.0) {
            return Err(Error::InvalidParameter(format!("not a probability vector (sum {s})")));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// `‖P_v − P_w‖_TV ≤ 2‖v − w‖/‖v‖`. A zero `w` has no distribution and is
/// treated as being at distance 1.
pub fn check_tv_vector_bound(v: &[C64], w: &[C64]) -> Result<BoundCheck> {
    let pv = exact_distribution(v)?;
    let lhs = match exact_distribution(w) {
        Ok(pw) => tv_distance(&pv, &pw)?,
        Err(_) => 1.0,
    };
    let rhs = 2.0 * linalg::norm(&linalg::vec_sub(v, w)) / linalg::norm(v);
    Ok(BoundCheck::new(lhs, rhs, TV_SLACK))
}

/// `max_i |σ_i(M) − σ_i(N)| ≤ ‖M − N‖`
pub fn check_weyl(m: MatRef<'_, C64>, n: MatRef<'_, C64>) -> Result<BoundCheck> {
    same_shape(m, n)?;
    let sm = linalg::singular_values(m)?;
    let sn = linalg::singular_values(n)?;
    let lhs = sm.iter().zip(&sn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rhs = linalg::spectral_norm(linalg::sub(m, n).as_ref())?;
    Ok(BoundCheck::new(lhs, rhs, SLACK))
}

/// `‖M*M − N*N‖_F ≤ β ‖M‖_F²`. The inequality holds with probability
/// `1 − η` when `N` is a sketch of `M` with `q ≥ 1/(ηβ²)` rows.
pub fn check_fkv(m: MatRef<'_, C64>, n: MatRef<'_, C64>, beta: f64) -> Result<BoundCheck> {
    if m.ncols() != n.ncols() {
        return Err(Error::DimensionMismatch(format!("{} and {} columns", m.ncols(), n.ncols())));
    }
    let lhs = linalg::frobenius(linalg::sub(linalg::gram(m).as_ref(), linalg::gram(n).as_ref()).as_ref());
    Ok(BoundCheck::new(lhs, beta * linalg::frobenius_sq(m), SLACK))
}

/// `max |g'(σ)| + |g(σ)/σ|` over `[lo, hi]`, on a uniform grid that
/// includes both endpoints. Exact whenever the maximand is monotone, as for
/// the power functions.
pub fn fpsd_constant(g: &SpectralFunction, lo: f64, hi: f64) -> f64 {
    let h = |s: f64| g.deriv(s).abs() + (g.eval(s) / s).abs();
    if hi <= lo {
        return h(lo);
    }
    (0..=FPSD_GRID)
        .map(|t| h(lo + (hi - lo) * t as f64 / FPSD_GRID as f64))
        .fold(0.0, f64::max)
}

/// `‖Φ_g(X) − Φ_g(Y)‖_F ≤ ‖X − Y‖_F · max_{σ ∈ Conv(s(X) ∪ s(Y) ∖ {0})} {|g'(σ)| + |g(σ)/σ|}`
/// for positive semi-definite `X`, `Y`.
pub fn check_fpsd(x: MatRef<'_, C64>, y: MatRef<'_, C64>, g: &SpectralFunction) -> Result<BoundCheck> {
    same_shape(x, y)?;
    if x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch("fpsd needs square matrices".into()));
    }
    let dx = svd(x, RankCutoff::Machine)?;
    let dy = svd(y, RankCutoff::Machine)?;
    let all: Vec<f64> = dx.sigma.iter().chain(&dy.sigma).copied().collect();
    let lhs = linalg::frobenius(linalg::sub(phi(&dx, g).as_ref(), phi(&dy, g).as_ref()).as_ref());
    let diff = linalg::frobenius(linalg::sub(x, y).as_ref());
    if all.is_empty() {
        return Ok(BoundCheck::new(lhs, 0.0, SLACK));
    }
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(0.0, f64::max);
    Ok(BoundCheck::new(lhs, diff * fpsd_constant(g, lo, hi), SLACK))
}

/// `‖Mv‖ ≤ ‖M‖‖v‖`, `‖MN‖_F ≤ ‖M‖‖N‖_F`, `‖MN‖_F ≤ ‖M‖_F‖N‖`.
pub fn check_norm_inequalities(m: MatRef<'_, C64>, n: MatRef<'_, C64>, v: &[C64]) -> Result<[BoundCheck; 3]> {
    if m.ncols() != n.nrows() || m.ncols() != v.len() {
        return Err(Error::DimensionMismatch("M, N and v do not chain".into()));
    }
    let norm_m = linalg::spectral_norm(m)?;
    let norm_n = linalg::spectral_norm(n)?;
    let mn = linalg::frobenius(linalg::mul(m, n).as_ref());
    Ok([
        BoundCheck::new(linalg::norm(&linalg::mat_vec(m, v)), norm_m * linalg::norm(v), SLACK),
        BoundCheck::new(mn, norm_m * linalg::frobenius(n), SLACK),
        BoundCheck::new(mn, linalg::frobenius(m) * norm_n, SLACK),
    ])
}

fn same_shape(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Result<()> {
    if (a.nrows(), a.ncols()) != (b.nrows(), b.ncols()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// Smallest and largest singular value above `1e-10 · σ_max`.
pub fn nonzero_extremes(a: MatRef<'_, C64>) -> Result<(f64, f64)> {
    let s = linalg::singular_values(a)?;
    let max = s.first().copied().unwrap_or(0.0);
    let min = s.iter().copied().filter(|&x| x > 1e-10 * max).fold(f64::INFINITY, f64::min);
    Ok((if min.is_finite() { min } else { 0.0 }, max))
}

/// The five facts the sketch analysis conditions on, evaluated on dense
/// `A`, `S` and `W`:
///
/// 1. `‖S‖_F = ‖A‖_F`
/// 2. `‖A*A − S*S‖_F ≤ θ ‖A‖_F²`
/// 3. `‖SS* − WW*‖_F ≤ γ ‖S‖_F²`
/// 4. the extreme nonzero singular values of `S` lie strictly inside `L`
/// 5. the same for `W`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SketchStatements {
    pub frobenius_preserved: BoundCheck,
    pub row_gram: BoundCheck,
    pub col_gram: BoundCheck,
    pub s_extremes: (f64, f64),
    pub w_extremes: (f64, f64),
    pub s_in_l: bool,
    pub w_in_l: bool,
}

impl SketchStatements {
    /// Statements 1 to 3, the hypotheses of the sandwich. The Gram bounds
    /// must hold strictly, without slack.
    pub fn hypotheses_hold(&self) -> bool {
        self.frobenius_preserved.pass && self.row_gram.lhs < self.row_gram.rhs && self.col_gram.lhs < self.col_gram.rhs
    }

    pub fn sandwich_holds(&self) -> bool {
        self.s_in_l && self.w_in_l
    }

    pub fn all_hold(&self) -> bool {
        self.hypotheses_hold() && self.sandwich_holds()
    }
}

pub fn sketch_statements(
    a: MatRef<'_, C64>,
    s: MatRef<'_, C64>,
    w: MatRef<'_, C64>,
    summary: &SpectrumSummary,
    theta: f64,
    gamma: f64,
) -> Result<SketchStatements> {
    let fa = linalg::frobenius(a);
    let fs = linalg::frobenius(s);
    let frobenius_preserved = BoundCheck::new((fs - fa).abs(), 0.0, SLACK);
    let row_gram = check_fkv(a, s, theta)?;
    let col_gram = check_fkv(linalg::adjoint(s).as_ref(), linalg::adjoint(w).as_ref(), gamma)?;
    let (l, _) = intervals(summary);
    let s_extremes = nonzero_extremes(s)?;
    let w_extremes = nonzero_extremes(w)?;
    let inside = |(lo, hi): (f64, f64)| lo > 0.0 && l.contains_strictly(lo) && l.contains_strictly(hi);
    Ok(SketchStatements {
        frobenius_preserved,
        row_gram,
        col_gram,
        s_extremes,
        w_extremes,
        s_in_l: inside(s_extremes),
        w_in_l: inside(w_extremes),
    })
}

/// `2γ ‖A‖_F² (κ/‖A‖)⁴ {φ + 7√2 Ω κ/‖A‖}`, the bound on `‖P' − P‖_F`.
pub fn mid_matrix_bound(s: &SpectrumSummary, b: &SpectralBounds, gamma: f64) -> f64 {
    let a = s.sigma_max;
    let k = s.kappa2;
    2.0 * gamma * s.frob * s.frob * (k / a).powi(4) * (b.phi + 7.0 * std::f64::consts::SQRT_2 * b.big_omega * k / a)
}

/// Smallest `ε` for which `θ` and `γ` are at most the values the sketch
/// sizes are chosen from, `max(θ K₃, γ K₇)`.
pub fn vector_bound_epsilon(s: &SpectrumSummary, b: &SpectralBounds, norm_b: f64, theta: f64, gamma: f64) -> f64 {
    (theta * sketch_divisor(s, b, norm_b, 3.0)).max(gamma * sketch_divisor(s, b, norm_b, 7.0))
}
