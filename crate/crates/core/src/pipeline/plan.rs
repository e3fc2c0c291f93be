use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral_fn::{SpectralBounds, SpectrumSummary};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    /// Additive error on one coordinate of `Φ_f(A*) b`.
    Coordinate { eps1: f64 },
    /// Total variation distance to the distribution of `Φ_f(A*) b`.
    Sampler { eps2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlanMode {
    /// `r = ⌈3/(ηθ²)⌉`, `c = ⌈3/(ηγ²)⌉`.
    FromBounds,
    /// `r` and `c` were supplied. The implied fields give what those sizes
    /// guarantee at the planned `η`.
    Overridden {
        implied_theta: f64,
        implied_gamma: f64,
        implied_eps: f64,
        implied_target: f64,
        implied_in_range: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanParameters {
    pub target: Target,
    pub eta: f64,
    pub alpha: f64,
    /// Accuracy of `S* P' S A* b` against `Φ_f(A*) b`.
    pub eps: f64,
    pub theta: f64,
    pub gamma: f64,
    /// Upper end of the admissible range for `θ` and `γ`.
    pub theta_limit: f64,
    pub r: u64,
    pub c: u64,
    /// Additive error of each bilinear estimate.
    pub eps_inner: f64,
    pub delta_inner: f64,
    pub mode: PlanMode,
    pub summary: SpectrumSummary,
    pub bounds: SpectralBounds,
    pub norm_b: f64,
}

/// `2 ‖A‖_F² (κ²/‖A‖) {φ + k√2 Ω κ/‖A‖} ‖b‖`, the divisor turning `ε` into
/// `θ` (`k = 3`) or `γ` (`k = 7`).
pub fn sketch_divisor(s: &SpectrumSummary, b: &SpectralBounds, norm_b: f64, k: f64) -> f64 {
    let a = s.sigma_max;
    2.0 * s.frob * s.frob * (s.kappa2 * s.kappa2 / a) * (b.phi + k * SQRT2 * b.big_omega * s.kappa2 / a) * norm_b
}

/// `ε` must stay below `½ ‖A‖ ‖b‖ {φ + 3√2 Ω κ/‖A‖}`.
pub fn eps_limit(s: &SpectrumSummary, b: &SpectralBounds, norm_b: f64) -> f64 {
    0.5 * s.sigma_max * norm_b * (b.phi + 3.0 * SQRT2 * b.big_omega * s.kappa2 / s.sigma_max)
}

/// `‖A‖² / (4 κ² ‖A‖_F²)`
pub fn theta_limit(s: &SpectrumSummary) -> f64 {
    s.sigma_max * s.sigma_max / (4.0 * s.kappa2 * s.kappa2 * s.frob * s.frob)
}

/// `⌈3 / (η x²)⌉`, saturating.
pub fn sketch_size(eta: f64, x: f64) -> u64 {
    let v = (3.0 / (eta * x * x)).ceil();
    if v.is_finite() && v < u64::MAX as f64 {
        v as u64
    } else {
        u64::MAX
    }
}

/// Accuracy a sketch of size `size` reaches at failure budget `η`.
pub fn implied_accuracy(eta: f64, size: u64) -> f64 {
    (3.0 / (eta * size as f64)).sqrt()
}

fn check_common(s: &SpectrumSummary, norm_b: f64, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {eta}")));
    }
    if !(norm_b > 0.0 && norm_b.is_finite()) {
        return Err(Error::InvalidParameter(format!("b must be a nonzero vector, got norm {norm_b}")));
    }
    if !(s.sigma_min > 0.0 && s.kappa2 >= 1.0) {
        return Err(Error::InvalidParameter("spectrum summary is inconsistent".into()));
    }
    Ok(())
}

/// `√(r (2κ² + 1))`
fn inner_scale(s: &SpectrumSummary, r: u64) -> f64 {
    (r as f64 * (2.0 * s.kappa2 * s.kappa2 + 1.0)).sqrt()
}

fn finish(
    target: Target,
    eps: f64,
    eta: f64,
    alpha: f64,
    s: &SpectrumSummary,
    b: &SpectralBounds,
    norm_b: f64,
) -> Result<PlanParameters> {
    let limit = eps_limit(s, b, norm_b);
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::TargetOutOfRange {
            value: eps,
            bound: limit,
            what: "accuracy of the sketched vector, 0.5 ‖A‖ ‖b‖ (φ + 3√2 Ω κ/‖A‖)",
        });
    }
    let theta = eps / sketch_divisor(s, b, norm_b, 3.0);
    let gamma = eps / sketch_divisor(s, b, norm_b, 7.0);
    let r = sketch_size(eta, theta);
    let c = sketch_size(eta, gamma);
    let mut plan = PlanParameters {
        target,
        eta,
        alpha,
        eps,
        theta,
        gamma,
        theta_limit: theta_limit(s),
        r,
        c,
        eps_inner: 0.0,
        delta_inner: 0.0,
        mode: PlanMode::FromBounds,
        summary: *s,
        bounds: *b,
        norm_b,
    };
    plan.set_inner();
    Ok(plan)
}

/// Parameters for estimating one coordinate to within `eps1`.
pub fn plan_coordinate(
    s: &SpectrumSummary,
    b: &SpectralBounds,
    norm_b: f64,
    eps1: f64,
    eta: f64,
) -> Result<PlanParameters> {
    check_common(s, norm_b, eta)?;
    finish(Target::Coordinate { eps1 }, eps1 / 2.0, eta, 1.0, s, b, norm_b)
}

/// Parameters for sampling within total variation `eps2`.
pub fn plan_sampler(
    s: &SpectrumSummary,
    b: &SpectralBounds,
    norm_b: f64,
    eps2: f64,
    eta: f64,
    alpha: f64,
) -> Result<PlanParameters> {
    check_common(s, norm_b, eta)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(b.omega > 0.0) {
        return Err(Error::InvalidParameter("sampling needs f bounded away from zero on L (omega = 0)".into()));
    }
    finish(Target::Sampler { eps2 }, eps2 * b.omega * alpha * norm_b / 4.0, eta, alpha, s, b, norm_b)
}

impl PlanParameters {
    fn set_inner(&mut self) {
        let s = &self.summary;
        let base = (s.sigma_max / s.kappa2).powi(2) / (self.bounds.big_omega * inner_scale(s, self.r));
        self.eps_inner = match self.target {
            Target::Coordinate { eps1 } => eps1 * base / 4.0,
            Target::Sampler { eps2 } => eps2 * self.bounds.omega * self.alpha * self.norm_b * base / 8.0,
        };
        self.delta_inner = self.eta / (3.0 * self.r as f64);
    }

    /// Replaces `r` and `c` and reports what they imply. The inner accuracy
    /// follows the target formula at the new `r` unless `eps_inner` is given.
    pub fn with_overrides(mut self, r: u64, c: u64, eps_inner: Option<f64>) -> Result<Self> {
        if r == 0 || c == 0 {
            return Err(Error::InvalidParameter("overridden r and c must be positive".into()));
        }
        if let Some(e) = eps_inner {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::InvalidParameter(format!("eps_inner must be positive, got {e}")));
            }
        }
        self.r = r;
        self.c = c;
        self.set_inner();
        if let Some(e) = eps_inner {
            self.eps_inner = e;
        }
        let (s, b) = (&self.summary, &self.bounds);
        let it = implied_accuracy(self.eta, r);
        let ig = implied_accuracy(self.eta, c);
        let ie = (it * sketch_divisor(s, b, self.norm_b, 3.0)).max(ig * sketch_divisor(s, b, self.norm_b, 7.0));
        let implied_target = match self.target {
            Target::Coordinate { .. } => 2.0 * ie,
            Target::Sampler { .. } => 4.0 * ie / (b.omega * self.alpha * self.norm_b),
        };
        self.mode = PlanMode::Overridden {
            implied_theta: it,
            implied_gamma: ig,
            implied_eps: ie,
            implied_target,
            implied_in_range: it < self.theta_limit && ig < self.theta_limit,
        };
        Ok(self)
    }

    pub fn target_value(&self) -> f64 {
        match self.target {
            Target::Coordinate { eps1 } => eps1,
            Target::Sampler { eps2 } => eps2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_fn::{bounds_over_l, intervals, SpectralFunction};

    fn setup(f: SpectralFunction) -> (SpectrumSummary, SpectralBounds) {
        let s = SpectrumSummary::new(1.0, 1.0, 5f64.sqrt()).unwrap();
        let (l, _) = intervals(&s);
        (s, bounds_over_l(&f, l).unwrap())
    }

    #[test]
    fn coordinate_plan_by_substitution() {
        let (s, b) = setup(SpectralFunction::identity());
        let (eps1, eta) = (0.01, 0.1);
        let p = plan_coordinate(&s, &b, 1.0, eps1, eta).unwrap();
        // κ = 1, ‖A‖ = 1, ‖A‖_F² = 5, Ω = √1.5, φ = 1.
        let omega = 1.5f64.sqrt();
        let theta = 0.005 / (2.0 * 5.0 * (1.0 + 3.0 * SQRT2 * omega));
        let gamma = 0.005 / (2.0 * 5.0 * (1.0 + 7.0 * SQRT2 * omega));
        assert!((p.theta - theta).abs() < 1e-15 && (p.gamma - gamma).abs() < 1e-15);
        assert_eq!(p.r, (3.0 / (eta * theta * theta)).ceil() as u64);
        assert_eq!(p.c, (3.0 / (eta * gamma * gamma)).ceil() as u64);
        let inner = eps1 / (4.0 * omega * (p.r as f64 * 3.0).sqrt());
        assert!((p.eps_inner - inner).abs() < 1e-18);
        assert!((p.delta_inner - eta / (3.0 * p.r as f64)).abs() < 1e-18);
    }

    #[test]
    fn sketch_size_example() {
        assert_eq!(sketch_size(0.1, 0.1), 3000);
    }

    #[test]
    fn doubling_target_quarters_r() {
        let (s, b) = setup(SpectralFunction::power(2.0).unwrap());
        let p1 = plan_coordinate(&s, &b, 1.0, 0.001, 0.2).unwrap();
        let p2 = plan_coordinate(&s, &b, 1.0, 0.002, 0.2).unwrap();
        assert!((p1.r as f64 / p2.r as f64 - 4.0).abs() < 1e-3);
        let q1 = plan_sampler(&s, &b, 1.0, 0.01, 0.2, 1.0).unwrap();
        let q2 = plan_sampler(&s, &b, 1.0, 0.02, 0.2, 1.0).unwrap();
        assert!((q1.r as f64 / q2.r as f64 - 4.0).abs() < 1e-3);
        assert!((q2.eps / q1.eps - 2.0).abs() < 1e-12);
    }

    #[test]
    fn range_checks() {
        let (s, b) = setup(SpectralFunction::identity());
        let limit = eps_limit(&s, &b, 1.0);
        assert!(matches!(plan_coordinate(&s, &b, 1.0, 2.0 * limit, 0.1), Err(Error::TargetOutOfRange { .. })));
        let p = plan_coordinate(&s, &b, 1.0, 1.99 * limit, 0.1).unwrap();
        assert!(p.theta < p.theta_limit && p.gamma < p.theta_limit);
        assert!(plan_sampler(&s, &b, 1.0, 0.1, 0.1, 0.0).is_err());
        assert!(plan_sampler(&s, &b, 1.0, 0.1, 0.1, 1.5).is_err());
        assert!(plan_coordinate(&s, &b, 1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn zero_omega_rejected() {
        let s = SpectrumSummary::new(1.0, 0.5, 1.5).unwrap();
        let (l, _) = intervals(&s);
        let b = bounds_over_l(&SpectralFunction::threshold(10.0).unwrap(), l).unwrap();
        assert!(plan_sampler(&s, &b, 1.0, 0.1, 0.1, 1.0).is_err());
    }

    #[test]
    fn overrides_report_implied_values() {
        let (s, b) = setup(SpectralFunction::identity());
        let p = plan_coordinate(&s, &b, 1.0, 0.01, 0.1).unwrap().with_overrides(300, 300, None).unwrap();
        let PlanMode::Overridden { implied_theta, implied_eps, implied_target, .. } = p.mode else {
            panic!("mode not overridden")
        };
        assert!((implied_theta - 0.1f64.sqrt()).abs() < 1e-15);
        assert!((implied_target - 2.0 * implied_eps).abs() < 1e-15);
        assert_eq!(p.r, 300);
        assert!((p.delta_inner - 0.1 / 900.0).abs() < 1e-18);
        let q = p.clone().with_overrides(300, 300, Some(0.5)).unwrap();
        assert_eq!(q.eps_inner, 0.5);
    }
}
