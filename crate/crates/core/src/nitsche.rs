//! The admissibility limit `α₀`, the Nitsche-type bound `r_max`, and instance classification.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::solve_alpha_in;
use crate::metric::{eval_rho, minimize_weight, weight, weight_increment, AnnulusPair, MetricSpec, Weights};
use crate::quadrature::{integrate_anchored_with, QuadOptions, QuadResult};

/// Exponent beyond which `r_max = exp(I)` is reported as infinite.
pub const OVERFLOW_EXPONENT: f64 = 700.0;
/// Relative slack on `r ≤ r_max`.
pub const FEASIBILITY_SLACK: f64 = 1e-12;
/// Quadrature tolerance on the bound path.
const BOUND_REL_TOL: f64 = 1e-13;

/// Local growth exponent `p` in `w(s) − w(s*) ~ |s − s*|^p` at or above which
/// `∫ 1/√(w − w*)` diverges (the borderline case `p = 2` is logarithmic).
const DIVERGENT_EXPONENT: f64 = 1.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `α > 0`.
    Elastic,
    /// `α = 0`: the power map `t^{b/a}`.
    Conformal,
    /// `α₀ ≤ α < 0`.
    NonElastic,
    Infeasible,
    /// Feasible, but `α` was not solved.
    Unknown,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Elastic => "elastic",
            Regime::Conformal => "conformal",
            Regime::NonElastic => "non_elastic",
            Regime::Infeasible => "infeasible",
            Regime::Unknown => "unknown",
        })
    }
}

/// Zero band for `α` used by the regime split.
pub fn alpha_zero_tolerance(alpha0: f64) -> f64 {
    1e-10 * (1.0 + alpha0.abs())
}

/// Regime of a solved `α`.
pub fn regime_for(alpha: f64, alpha0: f64) -> Regime {
    let tol = alpha_zero_tolerance(alpha0);
    if alpha > tol {
        Regime::Elastic
    } else if alpha >= -tol {
        Regime::Conformal
    } else {
        Regime::NonElastic
    }
}

/// The weight on `[1, R]` together with its infimum, ready for the `α`-integrals
/// `∫ aρ/√(w + α)`.
#[derive(Debug, Clone)]
pub struct WeightLandscape<'m> {
    pub metric: &'m MetricSpec,
    pub weights: Weights,
    pub big_r: f64,
    pub alpha0: f64,
    pub s_star: f64,
    /// Whether `∫ aρ/√(w + α₀)` diverges.
    pub divergent_at_alpha0: bool,
}

impl<'m> WeightLandscape<'m> {
    pub fn new(metric: &'m MetricSpec, weights: Weights, big_r: f64) -> Result<Self> {
        if !(big_r.is_finite() && big_r > 1.0) {
            return Err(Error::InvalidParameter(format!("R must exceed 1, got {big_r}")));
        }
        eval_rho(metric, 1.0)?;
        eval_rho(metric, big_r)?;
        let min = minimize_weight(metric, &weights, big_r)?;
        let divergent = diverges_at_minimum(metric, &weights, big_r, min.s_star, min.w_min)?;
        Ok(WeightLandscape {
            metric,
            weights,
            big_r,
            alpha0: -min.w_min,
            s_star: min.s_star,
            divergent_at_alpha0: divergent,
        })
    }

    /// `s ↦ aρ(s)/√(w(s) + α)`; metric failures surface as NaN.
    pub fn integrand(&self, alpha: f64) -> impl Fn(f64) -> f64 + '_ {
        move |s| {
            let Ok(rho) = eval_rho(self.metric, s) else { return f64::NAN };
            let bs = self.weights.b * s * rho;
            self.weights.a * rho / (bs * bs + alpha).sqrt()
        }
    }

    /// The integrand at `s = p + δ`, with `w(s) + α` formed as `(w(p) + α) + (w(s) − w(p))`
    /// so that the gap near a zero of `w + α` keeps its digits.
    pub fn anchored_integrand(&self, alpha: f64) -> impl Fn(f64, f64) -> f64 + '_ {
        move |p, d| {
            let s = p + d;
            let Ok(rho) = eval_rho(self.metric, s) else { return f64::NAN };
            let gap = if d == 0.0 {
                weight(self.metric, &self.weights, s).map(|v| v + alpha)
            } else {
                weight(self.metric, &self.weights, p)
                    .and_then(|wp| weight_increment(self.metric, &self.weights, p, d).map(|inc| wp + alpha + inc))
            };
            match gap {
                Ok(g) => self.weights.a * rho / g.sqrt(),
                Err(_) => f64::NAN,
            }
        }
    }

    /// Interior points where the integrand peaks or kinks.
    pub fn split_points(&self) -> Vec<f64> {
        let mut pts = self.metric.kinks_in(1.0, self.big_r);
        if self.s_star > 1.0 && self.s_star < self.big_r {
            pts.push(self.s_star);
        }
        pts
    }

    pub fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !alpha.is_finite() || alpha < self.alpha0 || (alpha == self.alpha0 && self.divergent_at_alpha0) {
            return Err(Error::SingularIntegrand { alpha, alpha0: self.alpha0 });
        }
        Ok(())
    }

    /// `∫₁^R aρ/√(w + α) ds`, i.e. `ln Φ(α)`.
    pub fn log_phi(&self, alpha: f64, rel_tol: f64) -> Result<QuadResult> {
        self.check_alpha(alpha)?;
        let opts = QuadOptions::rel(rel_tol).sqrt_endpoints();
        integrate_anchored_with(self.anchored_integrand(alpha), 1.0, self.big_r, &self.split_points(), &opts)
    }
}

/// Decides whether `1/√(w(s) − w(s*))` fails to be integrable at `s*` by
/// probing the local growth exponent of the weight on each side.
fn diverges_at_minimum(m: &MetricSpec, w: &Weights, big_r: f64, s_star: f64, w_min: f64) -> Result<bool> {
    let mut sides = Vec::with_capacity(2);
    // a side narrower than rounding of the endpoints carries no integrand mass
    let negligible = 1e-9 * big_r;
    if big_r - s_star > negligible {
        sides.push(big_r - s_star);
    }
    if s_star - 1.0 > negligible {
        sides.push(-(s_star - 1.0));
    }
    for span in sides {
        let d1 = 1e-3 * span;
        let d2 = 1e-4 * span;
        let g1 = weight(m, w, s_star + d1)? - w_min;
        let g2 = weight(m, w, s_star + d2)? - w_min;
        if g1 <= 1e-12 * w_min || g2 <= 0.0 {
            return Ok(true);
        }
        let p = (g1 / g2).log10();
        if p >= DIVERGENT_EXPONENT {
            return Ok(true);
        }
    }
    Ok(false)
}

/// `α₀ = −inf_{[1,R]} b²s²ρ²(s)` and the minimizing `s*`.
pub fn alpha0(m: &MetricSpec, w: &Weights, big_r: f64) -> Result<(f64, f64)> {
    let min = minimize_weight(m, w, big_r)?;
    Ok((-min.w_min, min.s_star))
}

/// Bound `r_max = exp(∫₁^R aρ/√(w + α₀))` with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundEstimate {
    /// `+∞` when the integral diverges.
    pub r_max: f64,
    pub log_r_max: f64,
    pub divergent: bool,
    pub converged: bool,
    pub abs_error_estimate: f64,
}

pub(crate) fn bound_in(land: &WeightLandscape<'_>) -> Result<BoundEstimate> {
    let infinite = BoundEstimate {
        r_max: f64::INFINITY,
        log_r_max: f64::INFINITY,
        divergent: true,
        converged: true,
        abs_error_estimate: 0.0,
    };
    if land.divergent_at_alpha0 {
        return Ok(infinite);
    }
    let q = land.log_phi(land.alpha0, BOUND_REL_TOL)?;
    if q.value > OVERFLOW_EXPONENT {
        return Ok(BoundEstimate { converged: q.converged, ..infinite });
    }
    Ok(BoundEstimate {
        r_max: q.value.exp(),
        log_r_max: q.value,
        divergent: false,
        converged: q.converged,
        abs_error_estimate: q.abs_error_estimate,
    })
}

/// Full bound computation.
pub fn nitsche_bound_detailed(m: &MetricSpec, w: &Weights, big_r: f64) -> Result<BoundEstimate> {
    bound_in(&WeightLandscape::new(m, *w, big_r)?)
}

/// `r_max`, possibly `+∞`.
pub fn nitsche_bound(m: &MetricSpec, w: &Weights, big_r: f64) -> Result<f64> {
    nitsche_bound_detailed(m, w, big_r).map(|b| b.r_max)
}

/// Feasibility and regime of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NitscheReport {
    pub alpha0: f64,
    pub s_star: f64,
    /// `null` in JSON when infinite.
    pub r_max: f64,
    pub bound_converged: bool,
    pub feasible: bool,
    pub regime: Regime,
    pub alpha: Option<f64>,
    /// `r` sits on the bound, so `α = α₀`.
    pub critical: bool,
}

/// Classifies an instance, solving for `α` when feasible.
pub fn classify(m: &MetricSpec, w: &Weights, ann: &AnnulusPair) -> Result<NitscheReport> {
    classify_with(m, w, ann, true)
}

/// As [`classify`]; with `solve = false` a feasible instance gets [`Regime::Unknown`].
pub fn classify_with(m: &MetricSpec, w: &Weights, ann: &AnnulusPair, solve: bool) -> Result<NitscheReport> {
    let land = WeightLandscape::new(m, *w, ann.big_r)?;
    let bound = bound_in(&land)?;
    let feasible = ann.r <= bound.r_max * (1.0 + FEASIBILITY_SLACK);
    let mut report = NitscheReport {
        alpha0: land.alpha0,
        s_star: land.s_star,
        r_max: bound.r_max,
        bound_converged: bound.converged,
        feasible,
        regime: if feasible { Regime::Unknown } else { Regime::Infeasible },
        alpha: None,
        critical: false,
    };
    if feasible && solve {
        let sol = solve_alpha_in(&land, &bound, ann.r)?;
        report.alpha = Some(sol.alpha);
        report.critical = sol.critical;
        report.regime = regime_for(sol.alpha, land.alpha0);
    }
    Ok(report)
}
