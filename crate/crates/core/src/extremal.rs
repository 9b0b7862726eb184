//! Solving the boundary condition for `α`, building `q(s)`, and the radial profile `H = q⁻¹`.

use serde::Serialize;

use crate::energy::{distortion_closed_form, radial_energy};
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::metric::{eval_rho, AnnulusPair, MetricSpec, Weights};
use crate::nitsche::{bound_in, regime_for, BoundEstimate, Regime, WeightLandscape, FEASIBILITY_SLACK};
use crate::quadrature::{integrate_anchored_with, QuadOptions};
use crate::roots::{brent, brent_with_values};

/// Default number of profile samples.
pub const DEFAULT_SAMPLES: usize = 512;
/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 16;

const SOLVE_REL_TOL: f64 = 1e-13;
const MAX_DOUBLINGS: usize = 1000;
/// Largest accepted mismatch `|ln Φ(α) − ln r|` when building a profile.
const BOUNDARY_MISMATCH: f64 = 1e-8;

/// `Φ(α) = exp(∫₁^R aρ/√(w + α) ds)`.
pub fn phi(m: &MetricSpec, w: &Weights, big_r: f64, alpha: f64) -> Result<f64> {
    let land = WeightLandscape::new(m, *w, big_r)?;
    Ok(land.log_phi(alpha, SOLVE_REL_TOL)?.value.exp())
}

/// Outcome of the `α` solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaSolve {
    pub alpha: f64,
    pub alpha0: f64,
    pub s_star: f64,
    pub r_max: f64,
    /// `r` sits on the bound and `α = α₀`.
    pub critical: bool,
    /// `|Φ(α) − r| / r`.
    pub boundary_residual: f64,
}

/// `α` with `Φ(α) = r`.
pub fn solve_alpha(m: &MetricSpec, w: &Weights, ann: &AnnulusPair) -> Result<f64> {
    solve_alpha_detailed(m, w, ann).map(|s| s.alpha)
}

pub fn solve_alpha_detailed(m: &MetricSpec, w: &Weights, ann: &AnnulusPair) -> Result<AlphaSolve> {
    let land = WeightLandscape::new(m, *w, ann.big_r)?;
    let bound = bound_in(&land)?;
    solve_alpha_in(&land, &bound, ann.r)
}

pub(crate) fn solve_alpha_in(land: &WeightLandscape<'_>, bound: &BoundEstimate, r: f64) -> Result<AlphaSolve> {
    if !(r.is_finite() && r > 1.0) {
        return Err(Error::InvalidParameter(format!("r must exceed 1, got {r}")));
    }
    if r > bound.r_max * (1.0 + FEASIBILITY_SLACK) {
        return Err(Error::Infeasible { r, r_max: bound.r_max });
    }
    let alpha0 = land.alpha0;
    let ln_r = r.ln();
    let finish = |alpha: f64, critical: bool| -> Result<AlphaSolve> {
        let log_phi = if critical { bound.log_r_max } else { land.log_phi(alpha, SOLVE_REL_TOL)?.value };
        Ok(AlphaSolve {
            alpha,
            alpha0,
            s_star: land.s_star,
            r_max: bound.r_max,
            critical,
            boundary_residual: (log_phi.exp() - r).abs() / r,
        })
    };
    if bound.r_max.is_finite() && r >= bound.r_max * (1.0 - FEASIBILITY_SLACK) {
        return finish(alpha0, true);
    }

    let g = |alpha: f64| land.log_phi(alpha, SOLVE_REL_TOL).map(|q| q.value - ln_r);
    let scale = 1.0 + alpha0.abs();
    let eps = 1e-8 * scale;
    let xtol = 1e-15 * scale;
    let lo = alpha0 + eps;
    let g_lo = g(lo)?;
    let alpha = if g_lo <= 0.0 {
        // root within ε of α₀, where g(α₀) = ln r_max − ln r > 0
        let g0 = if bound.log_r_max.is_finite() { bound.log_r_max - ln_r } else { f64::MAX };
        brent_with_values(g, alpha0, g0, lo, g_lo, xtol, 4.0 * f64::EPSILON, 300)?
    } else {
        let (mut a, mut ga) = (lo, g_lo);
        let mut step = eps;
        let mut found = None;
        for _ in 0..MAX_DOUBLINGS {
            step *= 2.0;
            let b = alpha0 + step;
            let gb = g(b)?;
            if gb <= 0.0 {
                found = Some((b, gb));
                break;
            }
            a = b;
            ga = gb;
        }
        let (b, gb) = found.ok_or(Error::BracketFailure { expansions: MAX_DOUBLINGS })?;
        brent_with_values(g, a, ga, b, gb, xtol, 4.0 * f64::EPSILON, 300)?
    };
    finish(alpha, false)
}

/// Radial profile `H(t)` sampled on `[1, r]` with its exact derivative.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    #[serde(rename = "t")]
    t_samples: Vec<f64>,
    #[serde(rename = "H")]
    h_samples: Vec<f64>,
    #[serde(rename = "Hdot")]
    hdot_samples: Vec<f64>,
    #[serde(skip)]
    interp: MonotoneCubic,
}

impl RadialProfile {
    /// Validates samples and builds the shape-preserving interpolant.
    pub fn new(t: Vec<f64>, h: Vec<f64>, hdot: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || h.len() != t.len() || hdot.len() != t.len() {
            return Err(Error::DegenerateGrid("profile needs at least two matching samples".into()));
        }
        if (t[0] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("profile must start at t = 1, got {}", t[0])));
        }
        if (h[0] - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("profile must satisfy H(1) = 1, got {}", h[0])));
        }
        for v in [&t, &h] {
            if let Some(i) = v.windows(2).position(|p| !(p[1] > p[0])) {
                return Err(Error::NonMonotone { index: i + 1 });
            }
        }
        if let Some(i) = hdot.iter().position(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidParameter(format!("Hdot must be finite and nonnegative, sample {i} is {}", hdot[i])));
        }
        let interp = MonotoneCubic::with_slopes(t.clone(), h.clone(), hdot.clone())?;
        Ok(RadialProfile { t_samples: t, h_samples: h, hdot_samples: hdot, interp })
    }

    /// Samples `f(t) = (H, Ḣ)` on `t_grid`.
    pub fn from_fn<F: Fn(f64) -> (f64, f64)>(t_grid: &[f64], f: F) -> Result<Self> {
        let (h, hdot) = t_grid.iter().map(|&t| f(t)).unzip();
        Self::new(t_grid.to_vec(), h, hdot)
    }

    /// The identity map on `[1, r]`.
    pub fn identity(r: f64, n: usize) -> Result<Self> {
        Self::from_fn(&geometric_grid(1.0, r, n)?, |t| (t, 1.0))
    }

    pub fn t_samples(&self) -> &[f64] {
        &self.t_samples
    }

    pub fn h_samples(&self) -> &[f64] {
        &self.h_samples
    }

    pub fn hdot_samples(&self) -> &[f64] {
        &self.hdot_samples
    }

    pub fn r(&self) -> f64 {
        self.t_samples[self.t_samples.len() - 1]
    }

    pub fn big_r(&self) -> f64 {
        self.h_samples[self.h_samples.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.t_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_samples.is_empty()
    }

    pub(crate) fn interpolant(&self) -> &MonotoneCubic {
        &self.interp
    }

    /// `(H(t), Ḣ(t))` from the interpolant.
    pub fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let r = self.r();
        let slack = 1e-12 * r;
        if !(t >= 1.0 - slack && t <= r + slack) {
            return Err(Error::OutOfDomain { s: t, lo: 1.0, hi: r });
        }
        let (h, dh) = self.interp.eval(t.clamp(1.0, r));
        Ok((h, dh.max(1e-300)))
    }
}

/// `(H(t), Ḣ(t))` of a profile.
pub fn eval_h(p: &RadialProfile, t: f64) -> Result<(f64, f64)> {
    p.eval(t)
}

/// `n` geometrically spaced points from `lo` to `hi`, endpoints exact.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(lo > 0.0 && hi > lo) {
        return Err(Error::DegenerateGrid(format!("cannot place {n} points on [{lo}, {hi}]")));
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let mut g: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).collect();
    g[0] = lo;
    g[n - 1] = hi;
    Ok(g)
}

/// Builds `H = q⁻¹` for a solved `α`.
///
/// The grid in `s` places `n` points uniformly in `σ = (ln s / ln R + ln q(s) / ln r) / 2`,
/// found by marching root solves, plus every metric knot and an interior `s*`.
pub fn build_profile(m: &MetricSpec, w: &Weights, alpha: f64, ann: &AnnulusPair, n: usize) -> Result<RadialProfile> {
    if n < MIN_SAMPLES {
        return Err(Error::DegenerateGrid(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    let land = WeightLandscape::new(m, *w, ann.big_r)?;
    let x_total = land.log_phi(alpha, SOLVE_REL_TOL)?.value;
    let ln_r = ann.r.ln();
    if (x_total - ln_r).abs() > BOUNDARY_MISMATCH * ln_r.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} gives Phi = {} but r = {}",
            x_total.exp(),
            ann.r
        )));
    }
    let (s, x) = equidistributed_samples(&land, alpha, n, x_total)?;

    let scale = ln_r / x[x.len() - 1];
    let mut t: Vec<f64> = x.iter().map(|xi| (xi * scale).exp()).collect();
    t[0] = 1.0;
    *t.last_mut().unwrap() = ann.r;
    let mut hdot = Vec::with_capacity(s.len());
    for (si, ti) in s.iter().zip(&t) {
        let rho = eval_rho(m, *si)?;
        let bs = w.b * si * rho;
        hdot.push((bs * bs + alpha).max(0.0).sqrt() / (w.a * rho * ti));
    }
    RadialProfile::new(t, s, hdot)
}

fn equidistributed_samples(land: &WeightLandscape<'_>, alpha: f64, n: usize, x_total: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let big_r = land.big_r;
    let mut anchors = land.split_points();
    anchors.sort_by(f64::total_cmp);
    anchors.dedup();
    anchors.push(big_r);

    let ln_big = big_r.ln();
    let sigma = |s: f64, x: f64| 0.5 * (s.ln() / ln_big + x / x_total);
    let f = land.anchored_integrand(alpha);
    let opts = QuadOptions::rel(SOLVE_REL_TOL).sqrt_endpoints();
    let piece = |lo: f64, hi: f64| integrate_anchored_with(&f, lo, hi, &[], &opts).map(|q| q.value);

    let mut s_out = Vec::with_capacity(n + anchors.len());
    let mut x_out = Vec::with_capacity(n + anchors.len());
    s_out.push(1.0);
    x_out.push(0.0);
    let (mut s_cur, mut x_cur) = (1.0, 0.0);
    let mut k = 1;
    let step = 1.0 / (n - 1) as f64;
    for &p in &anchors {
        let sigma_p = sigma(p, x_cur + piece(s_cur, p)?);
        while k < n - 1 && (k as f64) * step < sigma_p - 1e-3 * step {
            let target = k as f64 * step;
            let (sc, xc) = (s_cur, x_cur);
            if sigma(sc, xc) >= target {
                // the anchor just placed covers this target
                k += 1;
                continue;
            }
            let s_new = brent(|s| Ok(sigma(s, xc + piece(sc, s)?) - target), sc, p, 1e-15 * p, 0.0, 200)?;
            if s_new > s_cur && s_new < p {
                x_cur += piece(s_cur, s_new)?;
                s_cur = s_new;
                s_out.push(s_cur);
                x_out.push(x_cur);
            }
            k += 1;
        }
        if p > s_cur {
            x_cur += piece(s_cur, p)?;
            s_cur = p;
            s_out.push(s_cur);
            x_out.push(x_cur);
        }
    }
    Ok((s_out, x_out))
}

/// Solved extremal instance.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremalSolution {
    pub metric: MetricSpec,
    pub a: f64,
    pub b: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub alpha: f64,
    pub alpha0: f64,
    pub r_max: f64,
    pub regime: Regime,
    pub critical: bool,
    pub boundary_residual: f64,
    /// `E[h*]` of the sampled profile.
    pub energy: f64,
    /// `K[f*]` from the closed form in `α`.
    pub distortion: f64,
    pub profile: RadialProfile,
}

impl ExtremalSolution {
    pub fn weights(&self) -> Weights {
        Weights { a: self.a, b: self.b }
    }

    pub fn annulus(&self) -> AnnulusPair {
        AnnulusPair { r: self.r, big_r: self.big_r }
    }
}

/// Solves `α`, builds the profile with `n` samples, and evaluates energy and distortion.
pub fn solve(m: &MetricSpec, w: &Weights, ann: &AnnulusPair, n: usize) -> Result<ExtremalSolution> {
    let sol = solve_alpha_detailed(m, w, ann)?;
    let profile = build_profile(m, w, sol.alpha, ann, n)?;
    let energy = radial_energy(m, w, &profile)?.total;
    let distortion = distortion_closed_form(m, w, sol.alpha, ann.big_r)?;
    Ok(ExtremalSolution {
        metric: m.clone(),
        a: w.a,
        b: w.b,
        r: ann.r,
        big_r: ann.big_r,
        alpha: sol.alpha,
        alpha0: sol.alpha0,
        r_max: sol.r_max,
        regime: regime_for(sol.alpha, sol.alpha0),
        critical: sol.critical,
        boundary_residual: sol.boundary_residual,
        energy,
        distortion,
        profile,
    })
}
