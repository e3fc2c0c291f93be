use serde::{Deserialize, Serialize};

use super::function::{FunctionKind, SpectralFunction};
use crate::error::{Error, Result};

/// Grid resolution for functions without closed-form extrema.
pub const GRID_POINTS: usize = 10_000;
/// Inflation applied to grid maxima (and deflation of grid minima).
pub const GRID_SAFETY: f64 = 1.05;
/// Largest relative change allowed when the grid density is doubled.
pub const GRID_CONVERGENCE: f64 = 0.01;

/// Spectral facts about `A` that the planner takes as known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    /// `‖A‖`
    pub sigma_max: f64,
    /// Smallest nonzero singular value.
    pub sigma_min: f64,
    pub kappa2: f64,
    /// `‖A‖_F`
    pub frob: f64,
}

impl SpectrumSummary {
    pub fn new(sigma_max: f64, sigma_min: f64, frob: f64) -> Result<Self> {
        let ok = sigma_min > 0.0 && sigma_max >= sigma_min && frob >= sigma_max * (1.0 - 1e-12);
        if !ok || !sigma_max.is_finite() || !frob.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "inconsistent spectrum: sigma_max {sigma_max}, sigma_min {sigma_min}, frob {frob}"
            )));
        }
        Ok(Self { sigma_max, sigma_min, kappa2: sigma_max / sigma_min, frob })
    }

    /// From a full list of singular values; values at or below
    /// `rel_tol * max` count as zero.
    pub fn from_singular_values(s: &[f64], rel_tol: f64) -> Result<Self> {
        let max = s.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let min = s.iter().copied().filter(|&x| x > rel_tol * max).fold(f64::INFINITY, f64::min);
        let frob = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self::new(max, min, frob.max(max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains_strictly(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }
}

/// `L = [‖A‖/(√2 κ), ‖A‖/(√2 κ) · √(2κ² + 1)]` and `Q = L²`.
pub fn intervals(s: &SpectrumSummary) -> (Interval, Interval) {
    let lo = s.sigma_max / (std::f64::consts::SQRT_2 * s.kappa2);
    let hi = lo * (2.0 * s.kappa2 * s.kappa2 + 1.0).sqrt();
    (Interval { lo, hi }, Interval { lo: lo * lo, hi: hi * hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundsMethod {
    ClosedForm,
    Grid { n_points: usize },
}

/// Extrema of `f` over `L`: `big_omega = max |f|`, `phi = max |f'|`,
/// `omega = min |f|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralBounds {
    pub l: Interval,
    pub q: Interval,
    pub big_omega: f64,
    pub phi: f64,
    pub omega: f64,
    pub method: BoundsMethod,
}

fn closed(l: Interval, big_omega: f64, phi: f64, omega: f64) -> SpectralBounds {
    SpectralBounds {
        l,
        q: Interval { lo: l.lo * l.lo, hi: l.hi * l.hi },
        big_omega,
        phi,
        omega,
        method: BoundsMethod::ClosedForm,
    }
}

pub fn bounds_over_l(f: &SpectralFunction, l: Interval) -> Result<SpectralBounds> {
    if !(l.lo > 0.0 && l.hi >= l.lo && l.hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad interval [{}, {}]", l.lo, l.hi)));
    }
    match f.kind() {
        FunctionKind::Identity => Ok(closed(l, l.hi, 1.0, l.lo)),
        FunctionKind::Inverse => Ok(closed(l, 1.0 / l.lo, 1.0 / (l.lo * l.lo), 1.0 / l.hi)),
        FunctionKind::Power(p) => {
            let d = p * l.lo.powf(p - 1.0).max(l.hi.powf(p - 1.0));
            Ok(closed(l, l.hi.powf(*p), d, l.lo.powf(*p)))
        }
        FunctionKind::Threshold(s) => {
            if l.contains_strictly(*s) {
                Err(Error::NonDifferentiable { name: f.name(), lo: l.lo, hi: l.hi })
            } else if *s <= l.lo {
                Ok(closed(l, l.hi, 1.0, l.lo))
            } else if *s == l.hi {
                Ok(closed(l, l.hi, 1.0, 0.0))
            } else {
                Ok(closed(l, 0.0, 0.0, 0.0))
            }
        }
        FunctionKind::Table(t) => {
            let (tlo, thi) = t.span();
            if l.lo < tlo || l.hi > thi {
                return Err(Error::TableRange { lo: l.lo, hi: l.hi, table_lo: tlo, table_hi: thi });
            }
            let knots: Vec<f64> = t.x.iter().copied().filter(|x| l.contains_strictly(*x)).collect();
            grid_bounds(f, l, &knots)
        }
        FunctionKind::Induced(_) => grid_bounds(f, l, &[]),
    }
}

fn grid_extrema(f: &SpectralFunction, l: Interval, n: usize, extra: &[f64]) -> (f64, f64, f64) {
    let mut big = 0.0f64;
    let mut phi = 0.0f64;
    let mut small = f64::INFINITY;
    let pts = (0..=n).map(|k| l.lo + (l.hi - l.lo) * k as f64 / n as f64).chain(extra.iter().copied());
    for x in pts {
        let v = f.eval(x).abs();
        big = big.max(v);
        small = small.min(v);
        phi = phi.max(f.deriv(x).abs());
    }
    (big, phi, small)
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Grid extrema with a doubling check and safety inflation.
pub fn grid_bounds(f: &SpectralFunction, l: Interval, extra: &[f64]) -> Result<SpectralBounds> {
    let coarse = grid_extrema(f, l, GRID_POINTS, extra);
    let fine = grid_extrema(f, l, 2 * GRID_POINTS, extra);
    let changes = [
        rel_change(coarse.0, fine.0),
        rel_change(coarse.1, fine.1),
        rel_change(coarse.2, fine.2),
    ];
    if changes.iter().any(|&c| !(c < GRID_CONVERGENCE)) {
        return Err(Error::NotConverged(format!(
            "{} on [{}, {}]: relative changes {:?} on doubling",
            f.name(),
            l.lo,
            l.hi,
            changes
        )));
    }
    let (big, phi, small) = coarse;
    Ok(SpectralBounds {
        l,
        q: Interval { lo: l.lo * l.lo, hi: l.hi * l.hi },
        big_omega: big * GRID_SAFETY,
        phi: phi * GRID_SAFETY,
        omega: small / GRID_SAFETY,
        method: BoundsMethod::Grid { n_points: GRID_POINTS + 1 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_fn::Table;

    const L: Interval = Interval { lo: 0.5, hi: 1.5 };

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn interval_examples() {
        let s = SpectrumSummary::new(1.0, 1.0, 1.0).unwrap();
        let (l, q) = intervals(&s);
        assert!(close(l.lo, 1.0 / 2f64.sqrt()) && close(l.hi, 1.5f64.sqrt()));
        assert!(close(q.lo, l.lo * l.lo) && close(q.hi, l.hi * l.hi));
        let s = SpectrumSummary::new(1.0, 0.5, 1.2).unwrap();
        let (l, _) = intervals(&s);
        let r = 2.0 * 2f64.sqrt();
        assert!(close(l.lo, 1.0 / r) && close(l.hi, 3.0 / r));
    }

    #[test]
    fn closed_form_examples() {
        let b = bounds_over_l(&SpectralFunction::identity(), L).unwrap();
        assert_eq!((b.big_omega, b.phi, b.omega), (1.5, 1.0, 0.5));
        let b = bounds_over_l(&SpectralFunction::inverse(), L).unwrap();
        assert!(close(b.big_omega, 2.0) && close(b.phi, 4.0) && close(b.omega, 2.0 / 3.0));
        let b = bounds_over_l(&SpectralFunction::power(2.0).unwrap(), L).unwrap();
        assert!(close(b.big_omega, 2.25) && close(b.phi, 3.0) && close(b.omega, 0.25));
    }

    #[test]
    fn threshold_cases() {
        let inside = bounds_over_l(&SpectralFunction::threshold(1.0).unwrap(), L);
        assert!(matches!(inside, Err(Error::NonDifferentiable { .. })));
        let below = bounds_over_l(&SpectralFunction::threshold(0.2).unwrap(), L).unwrap();
        assert_eq!((below.big_omega, below.omega), (1.5, 0.5));
        let above = bounds_over_l(&SpectralFunction::threshold(2.0).unwrap(), L).unwrap();
        assert_eq!(above.omega, 0.0);
    }

    #[test]
    fn grid_bounds_cover_closed_form() {
        for f in [SpectralFunction::identity(), SpectralFunction::inverse(), SpectralFunction::power(2.0).unwrap()] {
            let exact = bounds_over_l(&f, L).unwrap();
            let g = grid_bounds(&f, L, &[]).unwrap();
            assert!(g.big_omega >= exact.big_omega && g.big_omega <= exact.big_omega * 1.06);
            assert!(g.phi >= exact.phi && g.omega <= exact.omega);
        }
    }

    #[test]
    fn table_bounds_and_range() {
        let xs: Vec<f64> = (0..=40).map(|k| k as f64 * 0.05).collect();
        let t = Table::new(xs.clone(), xs.iter().map(|x| x * x).collect(), xs.iter().map(|x| 2.0 * x).collect()).unwrap();
        let f = SpectralFunction::table(t);
        let b = bounds_over_l(&f, L).unwrap();
        assert!(matches!(b.method, BoundsMethod::Grid { n_points: 10_001 }));
        assert!((b.big_omega / 1.05 - 2.25).abs() < 1e-9);
        let far = bounds_over_l(&f, Interval { lo: 0.5, hi: 3.0 });
        assert!(matches!(far, Err(Error::TableRange { .. })));
    }

    #[test]
    fn summary_rejects_nonsense() {
        assert!(SpectrumSummary::new(1.0, 2.0, 3.0).is_err());
        assert!(SpectrumSummary::new(1.0, 0.0, 3.0).is_err());
        assert!(SpectrumSummary::new(2.0, 1.0, 1.0).is_err());
        let s = SpectrumSummary::from_singular_values(&[2.0, 1.0, 1e-20], 1e-12).unwrap();
        assert_eq!(s.kappa2, 2.0);
    }
}
