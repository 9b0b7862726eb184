//! Evidence that a profile is the extremal: Euler–Lagrange residual, first
//! integral, duality gap, and energy increments under boundary-vanishing perturbations.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{
    distortion_closed_form, grid_energy_with, radial_distortion, radial_energy, theta_at, InverseProfile, PolarGridMap,
    ThetaDerivative,
};
use crate::error::{Error, Result};
use crate::extremal::{ExtremalSolution, RadialProfile};
use crate::metric::{eval_rho, eval_rho_prime, MetricSpec, Weights};

/// Fewest samples accepted by [`el_residual`].
pub const MIN_RESIDUAL_SAMPLES: usize = 64;
const ANNULUS_SLACK: f64 = 1e-12;
const MAX_HALVINGS: usize = 8;

/// `sup |L − R| / (1 + |L| + |R|)` for `L = 2b²y − 2a²y″` and
/// `R = (2a²y′² − 2b²y²) ρ′(y)/ρ(y)` with `y(x) = H(eˣ)`.
///
/// Uses five-point central differences on a uniform `x` grid with as many points
/// as the profile has samples. Stencils straddling a metric knot are skipped.
pub fn el_residual(m: &MetricSpec, w: &Weights, p: &RadialProfile) -> Result<f64> {
    let n = p.len();
    if n < MIN_RESIDUAL_SAMPLES {
        return Err(Error::DegenerateGrid(format!("need at least {MIN_RESIDUAL_SAMPLES} samples, got {n}")));
    }
    let x_end = p.r().ln();
    let h = x_end / (n - 1) as f64;
    let mut y = Vec::with_capacity(n);
    for k in 0..n {
        let t = if k == n - 1 { p.r() } else { (k as f64 * h).exp() };
        y.push(p.eval(t)?.0);
    }
    let knots = m.kinks_in(0.0, f64::INFINITY);
    let (a2, b2) = (w.a * w.a, w.b * w.b);
    let mut sup: f64 = 0.0;
    for k in 2..n - 2 {
        let (lo, hi) = (y[k - 2], y[k + 2]);
        if knots.iter().any(|&s| s > lo && s < hi) {
            continue;
        }
        let d1 = (-y[k + 2] + 8.0 * y[k + 1] - 8.0 * y[k - 1] + y[k - 2]) / (12.0 * h);
        let d2 = (-y[k + 2] + 16.0 * y[k + 1] - 30.0 * y[k] + 16.0 * y[k - 1] - y[k - 2]) / (12.0 * h * h);
        let rho = eval_rho(m, y[k])?;
        let drho = eval_rho_prime(m, y[k])?.value;
        let lhs = 2.0 * b2 * y[k] - 2.0 * a2 * d2;
        let rhs = (2.0 * a2 * d1 * d1 - 2.0 * b2 * y[k] * y[k]) * drho / rho;
        sup = sup.max((lhs - rhs).abs() / (1.0 + lhs.abs() + rhs.abs()));
    }
    Ok(sup)
}

/// `max |C − α| / (1 + |α|)` for `C = (a²t²Ḣ² − b²H²)ρ²(H)`, taken over the
/// samples and over the cell midpoints of the interpolant.
pub fn first_integral_deviation(m: &MetricSpec, w: &Weights, p: &RadialProfile, alpha: f64) -> Result<f64> {
    let c = |t: f64, h: f64, dh: f64| -> Result<f64> {
        let rho = eval_rho(m, h)?;
        Ok((w.a * w.a * t * t * dh * dh - w.b * w.b * h * h) * rho * rho)
    };
    let ts = p.t_samples();
    let mut dev: f64 = 0.0;
    for i in 0..ts.len() {
        dev = dev.max((c(ts[i], p.h_samples()[i], p.hdot_samples()[i])? - alpha).abs());
        if i + 1 < ts.len() {
            let tm = 0.5 * (ts[i] + ts[i + 1]);
            let (h, dh) = p.interpolant().eval(tm);
            dev = dev.max((c(tm, h, dh)? - alpha).abs());
        }
    }
    Ok(dev / (1.0 + alpha.abs()))
}

/// The three routes to the extremal energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    /// `E[h*]` of the forward profile.
    pub energy: f64,
    /// `K[f*]` of the sampled inverse.
    pub distortion: f64,
    /// `K[f*]` from the closed form in `α`.
    pub closed_form: f64,
    /// Largest pairwise relative difference.
    pub gap: f64,
}

pub fn duality_report(m: &MetricSpec, w: &Weights, sol: &ExtremalSolution) -> Result<DualityReport> {
    let energy = radial_energy(m, w, &sol.profile)?.total;
    let distortion = radial_distortion(m, w, &InverseProfile::from_forward(&sol.profile))?;
    let closed_form = distortion_closed_form(m, w, sol.alpha, sol.big_r)?;
    let vals = [energy, distortion, closed_form];
    let mut gap: f64 = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            gap = gap.max((vals[i] - vals[j]).abs() / vals[i].max(vals[j]));
        }
    }
    Ok(DualityReport { energy, distortion, closed_form, gap })
}

/// Relative duality gap; see [`duality_report`].
pub fn duality_check(m: &MetricSpec, w: &Weights, sol: &ExtremalSolution) -> Result<f64> {
    duality_report(m, w, sol).map(|d| d.gap)
}

/// Perturbations `φ` vanishing on both boundary circles, with `β(t) = sin(π(t−1)/(r−1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PerturbationFamily {
    /// `β(t) e^{iθ}`.
    RadialBump,
    /// `β(t) e^{i(1+k)θ}`.
    AngularMode { k: u32 },
    /// `Σ c_{mn} sin(mπ(t−1)/(r−1)) e^{inθ}` for `1 ≤ m ≤ 3`, `|n| ≤ 3`, random `c` with `Σ|c| = 1`.
    RandomTrig { seed: u64 },
    /// The flat direction `h e^{iε}`.
    GlobalRotation,
}

impl PerturbationFamily {
    pub fn standard() -> Vec<PerturbationFamily> {
        vec![
            PerturbationFamily::RadialBump,
            PerturbationFamily::AngularMode { k: 1 },
            PerturbationFamily::AngularMode { k: 2 },
            PerturbationFamily::RandomTrig { seed: 7 },
            PerturbationFamily::GlobalRotation,
        ]
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, PerturbationFamily::GlobalRotation)
    }

    /// Samples of `φ` on the grid; `None` for the rotation.
    fn samples(&self, t: &[f64], n_theta: usize) -> Option<Vec<Complex64>> {
        let r = t[t.len() - 1];
        let bump = |m: f64, ti: f64| (m * PI * (ti - 1.0) / (r - 1.0)).sin();
        let mode = |n: i64, j: usize| Complex64::from_polar(1.0, n as f64 * theta_at(j, n_theta));
        let coeffs: Vec<(f64, i64, Complex64)> = match *self {
            PerturbationFamily::GlobalRotation => return None,
            PerturbationFamily::RadialBump => vec![(1.0, 1, Complex64::new(1.0, 0.0))],
            PerturbationFamily::AngularMode { k } => vec![(1.0, 1 + k as i64, Complex64::new(1.0, 0.0))],
            PerturbationFamily::RandomTrig { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut c = Vec::new();
                for m in 1..=3 {
                    for n in -3..=3 {
                        c.push((m as f64, n, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
                    }
                }
                let total: f64 = c.iter().map(|x| x.2.norm()).sum();
                c.into_iter().map(|(m, n, z)| (m, n, z / total)).collect()
            }
        };
        let mut out = Vec::with_capacity(t.len() * n_theta);
        for &ti in t {
            for j in 0..n_theta {
                out.push(coeffs.iter().map(|(m, n, c)| c * bump(*m, ti) * mode(*n, j)).sum());
            }
        }
        Some(out)
    }
}

/// Grid used for the perturbation energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationOptions {
    pub n_t: usize,
    pub n_theta: usize,
    pub theta_derivative: ThetaDerivative,
}

impl Default for PerturbationOptions {
    fn default() -> Self {
        PerturbationOptions { n_t: 1025, n_theta: 64, theta_derivative: ThetaDerivative::Spectral }
    }
}

pub const DEFAULT_AMPLITUDES: [f64; 7] = [0.0, 0.005, -0.005, 0.01, -0.01, 0.02, -0.02];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationOutcome {
    pub family: PerturbationFamily,
    /// Requested `ε`.
    pub amplitude: f64,
    /// `ε` after halving to stay inside the target annulus.
    pub applied_amplitude: f64,
    /// `E[h* + εφ] − E[h*]` on the grid.
    pub delta_e: f64,
    /// `(ΔE(ε) − ΔE(−ε)) / 2ε` at the applied magnitude.
    pub fd_derivative: f64,
    /// Samples had to be pulled back onto `[1, R]`.
    pub clamped: bool,
}

pub fn perturbation_test(
    m: &MetricSpec,
    w: &Weights,
    sol: &ExtremalSolution,
    families: &[PerturbationFamily],
    amplitudes: &[f64],
) -> Result<Vec<PerturbationOutcome>> {
    perturbation_test_with(m, w, sol, families, amplitudes, &PerturbationOptions::default())
}

pub fn perturbation_test_with(
    m: &MetricSpec,
    w: &Weights,
    sol: &ExtremalSolution,
    families: &[PerturbationFamily],
    amplitudes: &[f64],
    opts: &PerturbationOptions,
) -> Result<Vec<PerturbationOutcome>> {
    if amplitudes.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidParameter("amplitudes must be finite".into()));
    }
    let base = PolarGridMap::from_radial(&sol.profile, PolarGridMap::uniform_t(sol.r, opts.n_t), opts.n_theta)?;
    let e0 = grid_energy_with(m, w, &base, opts.theta_derivative)?.total;
    let mut mags: Vec<f64> = amplitudes.iter().map(|a| a.abs()).filter(|a| *a > 0.0).collect();
    mags.sort_by(f64::total_cmp);
    mags.dedup();

    let per_family: Vec<Result<Vec<PerturbationOutcome>>> = families
        .par_iter()
        .map(|fam| {
            let phi = fam.samples(base.t(), base.n_theta());
            let mut runs = Vec::with_capacity(mags.len());
            for &mag in &mags {
                runs.push((mag, signed_pair(m, w, &base, phi.as_deref(), mag, sol.big_r, e0, opts)?));
            }
            Ok(amplitudes
                .iter()
                .map(|&amp| {
                    if amp == 0.0 {
                        return PerturbationOutcome {
                            family: *fam,
                            amplitude: amp,
                            applied_amplitude: 0.0,
                            delta_e: 0.0,
                            fd_derivative: 0.0,
                            clamped: false,
                        };
                    }
                    let run = &runs.iter().find(|(mag, _)| *mag == amp.abs()).expect("magnitude present").1;
                    PerturbationOutcome {
                        family: *fam,
                        amplitude: amp,
                        applied_amplitude: run.applied.copysign(amp),
                        delta_e: if amp > 0.0 { run.plus } else { run.minus },
                        fd_derivative: (run.plus - run.minus) / (2.0 * run.applied),
                        clamped: run.clamped,
                    }
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for f in per_family {
        out.extend(f?);
    }
    Ok(out)
}

struct SignedPair {
    applied: f64,
    plus: f64,
    minus: f64,
    clamped: bool,
}

#[allow(clippy::too_many_arguments)]
fn signed_pair(
    m: &MetricSpec,
    w: &Weights,
    base: &PolarGridMap,
    phi: Option<&[Complex64]>,
    mag: f64,
    big_r: f64,
    e0: f64,
    opts: &PerturbationOptions,
) -> Result<SignedPair> {
    let n = base.n_theta();
    let perturb = |eps: f64| match phi {
        Some(phi) => base.map_values(|i, j, v| v + eps * phi[i * n + j]),
        None => base.rotated(eps),
    };
    let excursion = |g: &PolarGridMap| {
        g.values().iter().map(|v| (1.0 - v.norm()).max(v.norm() - big_r)).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut eps = mag;
    let mut clamped = false;
    let (mut gp, mut gm) = (perturb(eps), perturb(-eps));
    for halving in 0..=MAX_HALVINGS {
        if excursion(&gp).max(excursion(&gm)) <= ANNULUS_SLACK {
            break;
        }
        if halving == MAX_HALVINGS {
            clamped = true;
            break;
        }
        eps *= 0.5;
        gp = perturb(eps);
        gm = perturb(-eps);
    }
    let pull_back = |g: PolarGridMap| {
        g.map_values(|_, _, v| {
            let r = v.norm();
            let c = r.clamp(1.0, big_r);
            if c == r { v } else { v * (c / r) }
        })
    };
    let (gp, gm) = (pull_back(gp), pull_back(gm));
    let plus = grid_energy_with(m, w, &gp, opts.theta_derivative)?.total - e0;
    let minus = grid_energy_with(m, w, &gm, opts.theta_derivative)?.total - e0;
    Ok(SignedPair { applied: eps, plus, minus, clamped })
}

/// Pass thresholds of [`verify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub el_residual: f64,
    pub first_integral: f64,
    pub duality_gap: f64,
    /// Lower bound on `ΔE / E`.
    pub delta_e: f64,
    /// Upper bound on `|fd| / (E ε)`.
    pub fd_first_variation: f64,
    /// Upper bound on `|ΔE| / E` along the rotation.
    pub rotation: f64,
    pub ratio_lo: f64,
    pub ratio_hi: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            el_residual: 1e-5,
            first_integral: 1e-6,
            duality_gap: 1e-5,
            delta_e: -1e-6,
            fd_first_variation: 1e-3,
            rotation: 1e-10,
            ratio_lo: 3.0,
            ratio_hi: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub el_residual_sup: f64,
    pub first_integral_dev: f64,
    pub duality_gap_rel: f64,
    pub duality: DualityReport,
    pub perturbation_results: Vec<PerturbationOutcome>,
    /// `max |fd| / (E ε)` over the non-rotation families, with `fd` the
    /// Richardson combination `(4 fd(ε) − fd(2ε)) / 3` where a doubling pair exists.
    pub fd_first_variation: f64,
    /// Same with the plain central difference at each amplitude.
    pub fd_first_variation_raw: f64,
    /// `min ΔE / E` over the non-rotation families.
    pub min_delta_e_rel: f64,
    /// `max |ΔE| / E` along the rotation.
    pub rotation_delta_e_rel: f64,
    /// Extremes of `ΔE(2ε)/ΔE(ε)`; `null` when no amplitude pair doubles.
    pub quadratic_ratio_min: Option<f64>,
    pub quadratic_ratio_max: Option<f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub families: Vec<PerturbationFamily>,
    pub amplitudes: Vec<f64>,
    pub perturbation: PerturbationOptions,
    pub thresholds: Thresholds,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            families: PerturbationFamily::standard(),
            amplitudes: DEFAULT_AMPLITUDES.to_vec(),
            perturbation: PerturbationOptions::default(),
            thresholds: Thresholds::default(),
        }
    }
}

/// Ratios `ΔE(2ε)/ΔE(ε)` for every family, sign, and doubling pair at the applied amplitudes.
pub fn quadratic_ratios(results: &[PerturbationOutcome]) -> Vec<f64> {
    let mut out = Vec::new();
    for one in results.iter().filter(|o| !o.family.is_rotation() && o.applied_amplitude != 0.0) {
        if let Some(two) = results.iter().find(|o| o.family == one.family && o.applied_amplitude == 2.0 * one.applied_amplitude) {
            out.push(two.delta_e / one.delta_e);
        }
    }
    out
}

/// `max |4 fd(ε) − fd(2ε)| / (3ε)` over families and applied doubling pairs; the
/// central difference carries an `O(ε²)` cubic term that this combination cancels.
pub fn richardson_first_variation(results: &[PerturbationOutcome]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for one in results.iter().filter(|o| !o.family.is_rotation() && o.applied_amplitude > 0.0) {
        let eps = one.applied_amplitude;
        if let Some(two) = results.iter().find(|o| o.family == one.family && o.applied_amplitude == 2.0 * eps) {
            let v = (4.0 * one.fd_derivative - two.fd_derivative).abs() / (3.0 * eps);
            best = Some(best.map_or(v, |b| b.max(v)));
        }
    }
    best
}

pub fn verify(m: &MetricSpec, w: &Weights, sol: &ExtremalSolution) -> Result<VerificationReport> {
    verify_with(m, w, sol, &VerifyOptions::default())
}

pub fn verify_with(m: &MetricSpec, w: &Weights, sol: &ExtremalSolution, opts: &VerifyOptions) -> Result<VerificationReport> {
    let th = &opts.thresholds;
    let el = el_residual(m, w, &sol.profile)?;
    let fi = first_integral_deviation(m, w, &sol.profile, sol.alpha)?;
    let duality = duality_report(m, w, sol)?;
    let results = perturbation_test_with(m, w, sol, &opts.families, &opts.amplitudes, &opts.perturbation)?;
    let e = duality.energy;

    let moving = || results.iter().filter(|o| !o.family.is_rotation() && o.applied_amplitude != 0.0);
    let fd_raw = moving().map(|o| o.fd_derivative.abs() / (e * o.applied_amplitude.abs())).fold(0.0, f64::max);
    let fd = richardson_first_variation(&results).map_or(fd_raw, |v| v / e);
    let min_de = moving().map(|o| o.delta_e / e).fold(f64::INFINITY, f64::min);
    let min_de = if min_de.is_finite() { min_de } else { 0.0 };
    let rot = results.iter().filter(|o| o.family.is_rotation()).map(|o| o.delta_e.abs() / e).fold(0.0, f64::max);
    let ratios = quadratic_ratios(&results);
    let rmin = ratios.iter().copied().reduce(f64::min);
    let rmax = ratios.iter().copied().reduce(f64::max);

    let check = |name: &str, value: f64, threshold: String, pass: bool| Check { name: name.into(), value, threshold, pass };
    let mut checks = vec![
        check("el_residual", el, format!("<= {:e}", th.el_residual), el <= th.el_residual),
        check("first_integral", fi, format!("<= {:e}", th.first_integral), fi <= th.first_integral),
        check("duality_gap", duality.gap, format!("<= {:e}", th.duality_gap), duality.gap <= th.duality_gap),
        check("min_delta_e", min_de, format!(">= {:e}", th.delta_e), min_de >= th.delta_e),
        check("fd_first_variation", fd, format!("<= {:e}", th.fd_first_variation), fd <= th.fd_first_variation),
        check("rotation", rot, format!("<= {:e}", th.rotation), rot <= th.rotation),
    ];
    if let (Some(lo), Some(hi)) = (rmin, rmax) {
        let range = format!("in [{}, {}]", th.ratio_lo, th.ratio_hi);
        checks.push(check("quadratic_ratio_min", lo, range.clone(), lo >= th.ratio_lo && lo <= th.ratio_hi));
        checks.push(check("quadratic_ratio_max", hi, range, hi >= th.ratio_lo && hi <= th.ratio_hi));
    }
    let passed = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        el_residual_sup: el,
        first_integral_dev: fi,
        duality_gap_rel: duality.gap,
        duality,
        perturbation_results: results,
        fd_first_variation: fd,
        fd_first_variation_raw: fd_raw,
        min_delta_e_rel: min_de,
        rotation_delta_e_rel: rot,
        quadratic_ratio_min: rmin,
        quadratic_ratio_max: rmax,
        checks,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::solve;
    use crate::metric::AnnulusPair;

    fn wts(a: f64, b: f64) -> Weights {
        Weights::new(a, b).unwrap()
    }

    #[test]
    fn identity_residuals() {
        let p = RadialProfile::identity(5.0, 512).unwrap();
        let m = MetricSpec::Power { lambda: 1.0 };
        assert!(el_residual(&m, &wts(2.0, 1.0), &p).unwrap() <= 1e-6);
        assert!(first_integral_deviation(&m, &wts(2.0, 1.0), &p, 3.0).unwrap() <= 1e-10);
        let p = RadialProfile::identity(2.0, 128).unwrap();
        assert!(el_residual(&MetricSpec::Constant, &wts(1.0, 1.0), &p).unwrap() <= 1e-8);
    }

    #[test]
    fn corrupted_profile_fails_residual() {
        let r: f64 = 2.0;
        let t: Vec<f64> = (0..512).map(|i| 1.0 + (r - 1.0) * i as f64 / 511.0).collect();
        let bump = |t: f64| (PI * (t - 1.0) / (r - 1.0)).sin();
        let dbump = |t: f64| PI / (r - 1.0) * (PI * (t - 1.0) / (r - 1.0)).cos();
        let p = RadialProfile::from_fn(&t, |t| (t + 0.01 * bump(t), 1.0 + 0.01 * dbump(t))).unwrap();
        assert!(el_residual(&MetricSpec::Constant, &wts(1.0, 1.0), &p).unwrap() > 1e-3);
    }

    #[test]
    fn too_few_samples_for_residual() {
        let p = RadialProfile::identity(2.0, 32).unwrap();
        assert!(matches!(el_residual(&MetricSpec::Constant, &wts(1.0, 1.0), &p), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn zero_amplitude_is_zero() {
        let m = MetricSpec::Constant;
        let w = wts(1.0, 1.0);
        let sol = solve(&m, &w, &AnnulusPair::new(1.5, 1.6).unwrap(), 128).unwrap();
        let opts = PerturbationOptions { n_t: 65, n_theta: 16, ..Default::default() };
        let res = perturbation_test_with(&m, &w, &sol, &[PerturbationFamily::RadialBump], &[0.0], &opts).unwrap();
        assert_eq!(res[0].delta_e, 0.0);
    }

    #[test]
    fn random_family_is_deterministic() {
        let t: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 / 19.0).collect();
        let f = PerturbationFamily::RandomTrig { seed: 3 };
        assert_eq!(f.samples(&t, 16), f.samples(&t, 16));
        let first = f.samples(&t, 16).unwrap();
        assert!(first[..16].iter().all(|v| v.norm() < 1e-15));
        assert!(first[first.len() - 16..].iter().all(|v| v.norm() < 1e-14));
    }
}
