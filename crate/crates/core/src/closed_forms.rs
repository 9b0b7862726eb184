//! Explicit minimizers and bounds for `ρ = 1` and `ρ = s^{−λ}`, used as oracles.

use std::f64::consts::PI;

use serde::Serialize;

use crate::energy::radial_energy;
use crate::error::{Error, Result};
use crate::extremal::{solve, RadialProfile};
use crate::metric::{AnnulusPair, MetricSpec, Weights};
use crate::quadrature::{integrate_with, QuadOptions};
use crate::roots::brent;

const FEASIBILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedFormFamily {
    /// `ρ = 1`.
    Rho1,
    /// `ρ = s^{−2}`.
    RhoInvSquare,
    /// `ρ = s^{−λ}`, `λ ≠ 1`.
    RhoPowerLambda { lambda: f64 },
}

impl ClosedFormFamily {
    pub fn metric(&self) -> MetricSpec {
        match *self {
            ClosedFormFamily::Rho1 => MetricSpec::Constant,
            ClosedFormFamily::RhoInvSquare => MetricSpec::Power { lambda: 2.0 },
            ClosedFormFamily::RhoPowerLambda { lambda } => MetricSpec::Power { lambda },
        }
    }

    /// The family whose explicit minimizer covers `m`.
    pub fn for_metric(m: &MetricSpec) -> Result<Self> {
        match *m {
            MetricSpec::Constant => Ok(ClosedFormFamily::Rho1),
            MetricSpec::Power { lambda } if lambda == 2.0 => Ok(ClosedFormFamily::RhoInvSquare),
            MetricSpec::Power { lambda } if lambda == 1.0 => Err(Error::LambdaOne),
            MetricSpec::Power { lambda } if lambda == 0.0 => Ok(ClosedFormFamily::Rho1),
            MetricSpec::Power { lambda } => Ok(ClosedFormFamily::RhoPowerLambda { lambda }),
            MetricSpec::Tabulated(_) => Err(Error::InvalidParameter("no closed form for tabulated metrics".into())),
        }
    }
}

/// An explicit minimizer with its boundary-fitted constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormCase {
    pub family: ClosedFormFamily,
    pub a: f64,
    pub b: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `μ` for `ρ = 1`, `δ` for `s^{−2}`, `ε` for `s^{−λ}`.
    pub constant: f64,
    /// The first-integral constant `α` implied by `constant`.
    pub alpha: f64,
    #[serde(skip)]
    shape: Shape,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    /// `H = ((1−μ) t^{−1/c} + (1+μ) t^{1/c}) / 2`.
    Rho1 { mu: f64, c: f64 },
    /// `H = 2(1+m)τ / ((1+m)² − τ²δ/b²)`, `τ = t^{b/a}`.
    InvSquare { m: f64, delta_b2: f64 },
    /// `H^ν = 2τ / (1 + τ² − m(τ² − 1))`, `τ = t^{νb/a}`, `ν = λ − 1`.
    Power { m: f64, nu: f64 },
}

impl ClosedFormCase {
    /// `(H(t), Ḣ(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let k = self.b / self.a;
        match self.shape {
            Shape::Rho1 { mu, c } => {
                let p = t.powf(1.0 / c);
                let h = ((1.0 - mu) / p + (1.0 + mu) * p) / 2.0;
                let dh = ((1.0 + mu) * p - (1.0 - mu) / p) / (2.0 * c * t);
                (h, dh)
            }
            Shape::InvSquare { m, delta_b2 } => {
                let tau = t.powf(k);
                let num = 2.0 * (1.0 + m) * tau;
                let den = (1.0 + m) * (1.0 + m) - tau * tau * delta_b2;
                let h = num / den;
                // τ dH/dτ = H (1 + 2τ²δ/b² / den)
                let dh = k * h * (1.0 + 2.0 * tau * tau * delta_b2 / den) / t;
                (h, dh)
            }
            Shape::Power { m, nu } => {
                let tau = t.powf(nu * k);
                let den = 1.0 + tau * tau - m * (tau * tau - 1.0);
                let f = 2.0 * tau / den;
                let h = f.powf(1.0 / nu);
                // τF′/F = 1 − 2τ²(1 − m)/den
                let tau_df_over_f = 1.0 - 2.0 * tau * tau * (1.0 - m) / den;
                let dh = k * h * tau_df_over_f / t;
                (h, dh)
            }
        }
    }

    pub fn h(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    pub fn metric(&self) -> MetricSpec {
        self.family.metric()
    }

    pub fn weights(&self) -> Weights {
        Weights { a: self.a, b: self.b }
    }

    /// Samples on `t_grid`.
    pub fn profile_on(&self, t_grid: &[f64]) -> Result<RadialProfile> {
        let mut grid = t_grid.to_vec();
        if let Some(last) = grid.last_mut() {
            *last = self.r;
        }
        let mut prof_h: Vec<f64> = Vec::with_capacity(grid.len());
        let mut prof_d: Vec<f64> = Vec::with_capacity(grid.len());
        for &t in &grid {
            let (h, d) = self.eval(t);
            prof_h.push(h);
            prof_d.push(d.max(0.0));
        }
        prof_h[0] = 1.0;
        *prof_h.last_mut().unwrap() = self.big_r;
        RadialProfile::new(grid, prof_h, prof_d)
    }

    /// `E = 2π ∫₁^r (a²Ḣ² + b²H²/t²) ρ²(H) t dt` by direct quadrature of the formula.
    pub fn energy(&self) -> Result<f64> {
        let lam = match self.family {
            ClosedFormFamily::Rho1 => 0.0,
            ClosedFormFamily::RhoInvSquare => 2.0,
            ClosedFormFamily::RhoPowerLambda { lambda } => lambda,
        };
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let f = |t: f64| {
            let (h, dh) = self.eval(t);
            (a2 * dh * dh * t + b2 * h * h / t) * h.powf(-2.0 * lam)
        };
        let q = integrate_with(f, 1.0, self.r, &[], &QuadOptions::rel(1e-13))?;
        Ok(2.0 * PI * q.value)
    }

    /// Checks that `Ḣ ≥ 0` on a fine grid.
    pub fn check_monotone(&self, n: usize) -> Result<()> {
        for i in 0..=n {
            let t = 1.0 + (self.r - 1.0) * i as f64 / n as f64;
            let (_, d) = self.eval(t);
            if !(d >= -1e-12) {
                return Err(Error::NonMonotone { index: i });
            }
        }
        Ok(())
    }
}

fn check_params(a: f64, b: f64, r: f64, big_r: f64) -> Result<()> {
    Weights::new(a, b)?;
    AnnulusPair::new(r, big_r)?;
    Ok(())
}

/// `R_min = cosh((b/a) ln r)` for `ρ = 1`.
pub fn bound_rho1(a: f64, b: f64, r: f64) -> f64 {
    ((b / a) * r.ln()).cosh()
}

/// `r_max` for `ρ = s^{−λ}`: `exp((a/(b|λ−1|)) acosh(R^{|λ−1|}))`.
pub fn bound_power(a: f64, b: f64, lambda: f64, big_r: f64) -> Result<f64> {
    if lambda == 1.0 {
        return Err(Error::LambdaOne);
    }
    let nu = (lambda - 1.0).abs();
    let s = big_r.powf(nu);
    Ok(((a / (b * nu)) * (s + (s * s - 1.0).sqrt()).ln()).exp())
}

/// Minimizer for `ρ = 1`: `c = a/b`, `μ` from `H(r) = R`.
pub fn theorem_b_profile(a: f64, b: f64, r: f64, big_r: f64) -> Result<ClosedFormCase> {
    check_params(a, b, r, big_r)?;
    let c = a / b;
    let r_min = bound_rho1(a, b, r);
    if big_r < r_min * (1.0 - FEASIBILITY_SLACK) {
        return Err(Error::InfeasibleCase(format!("R = {big_r} is below cosh((b/a) ln r) = {r_min}")));
    }
    let p = r.powf(1.0 / c);
    let mu = ((2.0 * big_r * p - 1.0 - p * p) / (p * p - 1.0)).max(0.0);
    let case = ClosedFormCase {
        family: ClosedFormFamily::Rho1,
        a,
        b,
        r,
        big_r,
        constant: mu,
        alpha: b * b * (mu * mu - 1.0),
        shape: Shape::Rho1 { mu, c },
    };
    case.check_monotone(1000)?;
    Ok(case)
}

/// Minimizer for `ρ = s^{−2}`, `δ` from `H(r) = R` by bracketed root finding.
pub fn theorem_c_profile(a: f64, b: f64, r: f64, big_r: f64) -> Result<ClosedFormCase> {
    check_params(a, b, r, big_r)?;
    let r_max = bound_power(a, b, 2.0, big_r)?;
    if r > r_max * (1.0 + FEASIBILITY_SLACK) {
        return Err(Error::InfeasibleCase(format!("r = {r} exceeds (R + sqrt(R^2 - 1))^(a/b) = {r_max}")));
    }
    let b2 = b * b;
    let tau = r.powf(b / a);
    let h_at_r = |delta: f64| {
        let m = (1.0 + delta / b2).max(0.0).sqrt();
        2.0 * (1.0 + m) * tau / ((1.0 + m) * (1.0 + m) - tau * tau * delta / b2)
    };
    // H(r) increases with δ up to the pole where the denominator vanishes
    let m_pole = (tau * tau + 1.0) / (tau * tau - 1.0);
    let delta_pole = b2 * (m_pole * m_pole - 1.0);
    let alpha0 = -b2 / (big_r * big_r);
    let lo = alpha0;
    let delta = if r >= r_max * (1.0 - FEASIBILITY_SLACK) {
        alpha0
    } else {
        let mut k = 1;
        let hi = loop {
            let hi = lo + (delta_pole - lo) * (1.0 - 0.5f64.powi(k));
            let v = h_at_r(hi);
            if v.is_finite() && v > big_r {
                break hi;
            }
            k += 1;
            if k > 60 {
                return Err(Error::BracketFailure { expansions: k as usize });
            }
        };
        brent(|d| Ok(h_at_r(d) - big_r), lo, hi, 1e-15 * (1.0 + b2), 4.0 * f64::EPSILON, 300)?
    };
    let m = (1.0 + delta / b2).max(0.0).sqrt();
    let case = ClosedFormCase {
        family: ClosedFormFamily::RhoInvSquare,
        a,
        b,
        r,
        big_r,
        constant: delta,
        alpha: delta,
        shape: Shape::InvSquare { m, delta_b2: delta / b2 },
    };
    case.check_monotone(1000)?;
    Ok(case)
}

/// Minimizer for `ρ = s^{−λ}`, `λ ≠ 1`; `ε` from `H(r) = R` by bracketed root finding.
pub fn theorem_d_profile(a: f64, b: f64, lambda: f64, r: f64, big_r: f64) -> Result<ClosedFormCase> {
    check_params(a, b, r, big_r)?;
    if lambda == 1.0 {
        return Err(Error::LambdaOne);
    }
    let r_max = bound_power(a, b, lambda, big_r)?;
    if r > r_max * (1.0 + FEASIBILITY_SLACK) {
        return Err(Error::InfeasibleCase(format!("r = {r} exceeds the power-metric bound {r_max}")));
    }
    let b2 = b * b;
    let nu = lambda - 1.0;
    let tau = r.powf(nu * b / a);
    let target = big_r.powf(nu);
    // H(r)^ν = 2τ/(1 + τ² − m(τ² − 1)) is monotone in m, increasing when τ > 1
    let f_at_r = |m: f64| 2.0 * tau / (1.0 + tau * tau - m * (tau * tau - 1.0));
    let m0 = if nu > 0.0 { (1.0 - big_r.powf(-2.0 * nu)).sqrt() } else { 0.0 };
    let m = if r >= r_max * (1.0 - FEASIBILITY_SLACK) {
        m0
    } else if nu > 0.0 {
        let m_pole = (1.0 + tau * tau) / (tau * tau - 1.0);
        let mut k = 1;
        let hi = loop {
            let hi = m0 + (m_pole - m0) * (1.0 - 0.5f64.powi(k));
            let v = f_at_r(hi);
            if v.is_finite() && v > target {
                break hi;
            }
            k += 1;
            if k > 60 {
                return Err(Error::BracketFailure { expansions: k as usize });
            }
        };
        brent(|m| Ok(f_at_r(m) - target), m0, hi, 1e-15, 4.0 * f64::EPSILON, 300)?
    } else {
        let mut hi = 1.0;
        let mut k = 0;
        while f_at_r(hi) > target {
            hi *= 2.0;
            k += 1;
            if k > 1000 {
                return Err(Error::BracketFailure { expansions: k });
            }
        }
        brent(|m| Ok(f_at_r(m) - target), m0, hi, 1e-15, 4.0 * f64::EPSILON, 300)?
    };
    let epsilon = b2 * (m * m - 1.0);
    let case = ClosedFormCase {
        family: ClosedFormFamily::RhoPowerLambda { lambda },
        a,
        b,
        r,
        big_r,
        constant: epsilon,
        alpha: epsilon,
        shape: Shape::Power { m, nu },
    };
    case.check_monotone(1000)?;
    Ok(case)
}

/// Explicit minimizer for the family matching `m`.
pub fn closed_form_for(m: &MetricSpec, w: &Weights, ann: &AnnulusPair) -> Result<ClosedFormCase> {
    match ClosedFormFamily::for_metric(m)? {
        ClosedFormFamily::Rho1 => theorem_b_profile(w.a, w.b, ann.r, ann.big_r),
        ClosedFormFamily::RhoInvSquare => theorem_c_profile(w.a, w.b, ann.r, ann.big_r),
        ClosedFormFamily::RhoPowerLambda { lambda } => theorem_d_profile(w.a, w.b, lambda, ann.r, ann.big_r),
    }
}

/// Closed form against the numeric solver.
#[derive(Debug, Clone, Serialize)]
pub struct ClosedFormComparison {
    pub case: ClosedFormCase,
    pub alpha_numeric: f64,
    /// `sup |H_closed − H_numeric|` on a fine uniform grid.
    pub sup_h_gap: f64,
    pub energy_closed: f64,
    pub energy_numeric: f64,
    pub energy_gap_rel: f64,
}

pub fn compare_with_solver(case: &ClosedFormCase, samples: usize) -> Result<ClosedFormComparison> {
    let m = case.metric();
    let w = case.weights();
    let sol = solve(&m, &w, &AnnulusPair { r: case.r, big_r: case.big_r }, samples)?;
    let n = 4000;
    let mut sup: f64 = 0.0;
    for i in 0..=n {
        let t = if i == n { case.r } else { 1.0 + (case.r - 1.0) * i as f64 / n as f64 };
        sup = sup.max((case.h(t) - sol.profile.eval(t)?.0).abs());
    }
    let energy_closed = case.energy()?;
    let energy_numeric = radial_energy(&m, &w, &sol.profile)?.total;
    Ok(ClosedFormComparison {
        case: *case,
        alpha_numeric: sol.alpha,
        sup_h_gap: sup,
        energy_closed,
        energy_numeric,
        energy_gap_rel: (energy_closed - energy_numeric).abs() / energy_closed,
    })
}
