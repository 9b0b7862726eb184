//! Weighted combined energy of radial and grid-sampled maps, and the dual distortion.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::RadialProfile;
use crate::interp::MonotoneCubic;
use crate::metric::{eval_rho, MetricSpec, Weights};
use crate::nitsche::WeightLandscape;
use crate::quadrature::{integrate_anchored_with, integrate_with, QuadOptions};

const ENERGY_REL_TOL: f64 = 1e-12;
const BOUNDARY_TOL: f64 = 1e-9;
const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    /// `a²|h_N|²` part.
    #[serde(rename = "normal")]
    pub normal_part: f64,
    /// `b²|h_T|²` part.
    #[serde(rename = "tangential")]
    pub tangential_part: f64,
}

impl EnergyBreakdown {
    fn from_parts(normal_part: f64, tangential_part: f64) -> Self {
        EnergyBreakdown { total: normal_part + tangential_part, normal_part, tangential_part }
    }
}

/// `E = 2π ∫₁^r (a²Ḣ² + b²H²/t²) ρ²(H) t dt` over the interpolated profile.
pub fn radial_energy(m: &MetricSpec, w: &Weights, p: &RadialProfile) -> Result<EnergyBreakdown> {
    let splits = &p.t_samples()[1..p.len() - 1];
    let opts = QuadOptions::rel(ENERGY_REL_TOL);
    let interp = p.interpolant();
    let part = |normal: bool| {
        let f = |t: f64| {
            let (h, dh) = interp.eval(t);
            let Ok(rho) = eval_rho(m, h) else { return f64::NAN };
            let density = if normal { w.a * w.a * dh * dh * t } else { w.b * w.b * h * h / t };
            density * rho * rho
        };
        integrate_with(f, 1.0, p.r(), splits, &opts).map(|q| 2.0 * PI * q.value)
    };
    Ok(EnergyBreakdown::from_parts(part(true)?, part(false)?))
}

/// Sampled inverse map `ϱ = H⁻¹` on `[1, R]`.
#[derive(Debug, Clone)]
pub struct InverseProfile {
    forward: MonotoneCubic,
}

impl InverseProfile {
    /// Inverse of a forward profile, sharing its interpolant.
    pub fn from_forward(p: &RadialProfile) -> Self {
        InverseProfile { forward: p.interpolant().clone() }
    }

    /// Samples `ϱ(s_k)` with slopes `ϱ′(s_k)`; an infinite slope marks a point where `Ḣ = 0`.
    pub fn from_samples(s: Vec<f64>, varrho: Vec<f64>, varrho_prime: Vec<f64>) -> Result<Self> {
        if varrho_prime.len() != s.len() || varrho_prime.iter().any(|d| !(*d > 0.0)) {
            return Err(Error::InvalidParameter("inverse slopes must be positive and match the samples".into()));
        }
        for v in [&s, &varrho] {
            if let Some(i) = v.windows(2).position(|p| !(p[1] > p[0])) {
                return Err(Error::NonMonotone { index: i + 1 });
            }
        }
        let slopes = varrho_prime.iter().map(|d| 1.0 / d).collect();
        Ok(InverseProfile { forward: MonotoneCubic::with_slopes(varrho, s, slopes)? })
    }

    pub fn domain(&self) -> (f64, f64) {
        let y = self.forward.y();
        (y[0], y[y.len() - 1])
    }

    /// `(ϱ(s), 1/ϱ′(s))` at `s = anchor + offset`.
    fn eval_with_forward_slope(&self, anchor: f64, offset: f64) -> (f64, f64) {
        self.forward.invert_anchored(anchor, offset)
    }

    /// `(ϱ(s), ϱ′(s))`.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        let (t, dh) = self.eval_with_forward_slope(s, 0.0);
        (t, 1.0 / dh)
    }
}

/// `K = 2π ∫₁^R (b²ϱ′² + a²ϱ²/s²) s²ρ²(s)/(ϱ′ϱ) ds`.
pub fn radial_distortion(m: &MetricSpec, w: &Weights, inv: &InverseProfile) -> Result<f64> {
    let (lo, hi) = inv.domain();
    let knots = inv.forward.y();
    let splits = &knots[1..knots.len() - 1];
    // in terms of Ḣ = 1/ϱ′ the integrand is b²s²ρ²/(Ḣϱ) + a²ϱḢρ²
    let f = |p: f64, d: f64| {
        let s = p + d;
        let (t, dh) = inv.eval_with_forward_slope(p, d);
        let Ok(rho) = eval_rho(m, s) else { return f64::NAN };
        (w.b * w.b * s * s / (dh * t) + w.a * w.a * t * dh) * rho * rho
    };
    let opts = QuadOptions::rel(ENERGY_REL_TOL).sqrt_endpoints();
    Ok(2.0 * PI * integrate_anchored_with(f, lo, hi, splits, &opts)?.value)
}

/// `K[f*] = 4π∫₁^R ab²s²ρ³/√(w+α) ds + 2πα∫₁^R aρ/√(w+α) ds`.
pub fn distortion_closed_form(m: &MetricSpec, w: &Weights, alpha: f64, big_r: f64) -> Result<f64> {
    let land = WeightLandscape::new(m, *w, big_r)?;
    land.check_alpha(alpha)?;
    let opts = QuadOptions::rel(ENERGY_REL_TOL).sqrt_endpoints();
    let splits = land.split_points();
    let base = land.anchored_integrand(alpha);
    // ab²s²ρ³/√(w+α) = w(s)·aρ/√(w+α)
    let first = |p: f64, d: f64| {
        let s = p + d;
        let Ok(rho) = eval_rho(m, s) else { return f64::NAN };
        let bs = w.b * s * rho;
        base(p, d) * bs * bs
    };
    let i1 = integrate_anchored_with(first, 1.0, big_r, &splits, &opts)?.value;
    let i2 = if alpha == 0.0 { 0.0 } else { integrate_anchored_with(&base, 1.0, big_r, &splits, &opts)?.value };
    Ok(4.0 * PI * i1 + 2.0 * PI * alpha * i2)
}

/// Complex samples `h(t_i, θ_j)` on a polar tensor grid, `θ_j = 2πj/n_θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGridMap {
    t: Vec<f64>,
    n_theta: usize,
    /// Row-major: `values[i * n_theta + j]`.
    values: Vec<Complex64>,
}

impl PolarGridMap {
    pub fn new(t: Vec<f64>, n_theta: usize, values: Vec<Complex64>) -> Result<Self> {
        if t.len() < MIN_GRID || n_theta < MIN_GRID {
            return Err(Error::DegenerateGrid(format!("grid {}x{n_theta} is below {MIN_GRID}x{MIN_GRID}", t.len())));
        }
        if values.len() != t.len() * n_theta {
            return Err(Error::DegenerateGrid("value count does not match the grid".into()));
        }
        if (t[0] - 1.0).abs() > 1e-12 || t.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::DegenerateGrid("t grid must increase from 1".into()));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::DegenerateGrid("grid values must be finite".into()));
        }
        let g = PolarGridMap { t, n_theta, values };
        let outer = g.row(g.t.len() - 1)[0].norm();
        let inner_ok = g.row(0).iter().all(|v| (v.norm() - 1.0).abs() <= BOUNDARY_TOL);
        let outer_ok = g.row(g.t.len() - 1).iter().all(|v| (v.norm() - outer).abs() <= BOUNDARY_TOL * outer);
        if !inner_ok || !outer_ok {
            return Err(Error::InvalidParameter("boundary rows must lie on circles |h| = 1 and |h| = R".into()));
        }
        Ok(g)
    }

    /// Samples `f(t, θ)`.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(t: Vec<f64>, n_theta: usize, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(t.len() * n_theta);
        for &ti in &t {
            for j in 0..n_theta {
                values.push(f(ti, theta_at(j, n_theta)));
            }
        }
        Self::new(t, n_theta, values)
    }

    /// Lifts a radial profile: `h = H(t) e^{iθ}`.
    pub fn from_radial(p: &RadialProfile, t: Vec<f64>, n_theta: usize) -> Result<Self> {
        let interp = p.interpolant();
        let h: Vec<f64> = t.iter().map(|&ti| interp.eval(ti).0).collect();
        let mut values = Vec::with_capacity(t.len() * n_theta);
        for hi in &h {
            for j in 0..n_theta {
                values.push(Complex64::from_polar(*hi, theta_at(j, n_theta)));
            }
        }
        Self::new(t, n_theta, values)
    }

    /// `n` uniform points on `[1, r]`.
    pub fn uniform_t(r: f64, n: usize) -> Vec<f64> {
        let mut t: Vec<f64> = (0..n).map(|i| 1.0 + (r - 1.0) * i as f64 / (n - 1) as f64).collect();
        t[n - 1] = r;
        t
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.values[i * self.n_theta..(i + 1) * self.n_theta]
    }

    /// `h e^{iβ}`.
    pub fn rotated(&self, beta: f64) -> Self {
        let rot = Complex64::from_polar(1.0, beta);
        PolarGridMap { t: self.t.clone(), n_theta: self.n_theta, values: self.values.iter().map(|v| v * rot).collect() }
    }

    /// Applies `f(i, j, h_ij)` to every sample, bypassing the boundary checks.
    pub(crate) fn map_values<F: Fn(usize, usize, Complex64) -> Complex64>(&self, f: F) -> Self {
        let n = self.n_theta;
        let values = self.values.iter().enumerate().map(|(k, v)| f(k / n, k % n, *v)).collect();
        PolarGridMap { t: self.t.clone(), n_theta: n, values }
    }
}

pub(crate) fn theta_at(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// Discretization of `∂θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaDerivative {
    /// Second-order periodic central differences.
    #[default]
    Central,
    /// Exact for trigonometric polynomials below the Nyquist mode.
    Spectral,
}

/// `E = ∬ (a²|h_N|² + b²|h_T|²) ρ²(|h|) t dt dθ` with central differences and
/// the tensor trapezoidal rule.
pub fn grid_energy(m: &MetricSpec, w: &Weights, g: &PolarGridMap) -> Result<EnergyBreakdown> {
    grid_energy_with(m, w, g, ThetaDerivative::Central)
}

pub fn grid_energy_with(m: &MetricSpec, w: &Weights, g: &PolarGridMap, dtheta: ThetaDerivative) -> Result<EnergyBreakdown> {
    let nt = g.t.len();
    let nth = g.n_theta;
    let t = &g.t;
    let d_theta = 2.0 * PI / nth as f64;
    let fft = match dtheta {
        ThetaDerivative::Spectral => {
            let mut planner = FftPlanner::new();
            Some((planner.plan_fft_forward(nth), planner.plan_fft_inverse(nth)))
        }
        ThetaDerivative::Central => None,
    };

    let rows: Vec<Result<(f64, f64)>> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let (c_prev, c_mid, c_next, i0) = t_stencil(t, i);
            let h_theta = theta_derivative(g.row(i), d_theta, fft.as_ref());
            let (mut normal, mut tangential) = (0.0, 0.0);
            for j in 0..nth {
                let ht = c_prev * g.row(i0)[j] + c_mid * g.row(i0 + 1)[j] + c_next * g.row(i0 + 2)[j];
                let rho = eval_rho(m, g.row(i)[j].norm())?;
                let r2 = rho * rho;
                normal += ht.norm_sqr() * r2;
                tangential += h_theta[j].norm_sqr() * r2;
            }
            let weight = trapezoid_weight(t, i) * d_theta;
            Ok((w.a * w.a * normal * t[i] * weight, w.b * w.b * tangential / t[i] * weight))
        })
        .collect();
    let (mut normal, mut tangential) = (0.0, 0.0);
    for row in rows {
        let (n, tg) = row?;
        normal += n;
        tangential += tg;
    }
    Ok(EnergyBreakdown::from_parts(normal, tangential))
}

/// Second-order three-point weights for `∂t` at row `i`, applied to rows `i0, i0+1, i0+2`.
fn t_stencil(t: &[f64], i: usize) -> (f64, f64, f64, usize) {
    let n = t.len();
    let i0 = i.clamp(1, n - 2) - 1;
    let (x0, x1, x2) = (t[i0], t[i0 + 1], t[i0 + 2]);
    let x = t[i];
    // derivative of the quadratic Lagrange basis at x
    let c0 = (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    let c1 = (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    let c2 = (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    (c0, c1, c2, i0)
}

fn trapezoid_weight(t: &[f64], i: usize) -> f64 {
    let n = t.len();
    let left = if i > 0 { t[i] - t[i - 1] } else { 0.0 };
    let right = if i + 1 < n { t[i + 1] - t[i] } else { 0.0 };
    0.5 * (left + right)
}

type FftPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn theta_derivative(row: &[Complex64], d_theta: f64, fft: Option<&FftPair>) -> Vec<Complex64> {
    let n = row.len();
    match fft {
        None => (0..n).map(|j| (row[(j + 1) % n] - row[(j + n - 1) % n]) / (2.0 * d_theta)).collect(),
        Some((fwd, inv)) => {
            let mut buf = row.to_vec();
            fwd.process(&mut buf);
            for (k, c) in buf.iter_mut().enumerate() {
                let freq = if 2 * k < n {
                    k as f64
                } else if 2 * k > n {
                    k as f64 - n as f64
                } else {
                    0.0
                };
                *c *= Complex64::new(0.0, freq / n as f64);
            }
            inv.process(&mut buf);
            buf
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wts(a: f64, b: f64) -> Weights {
        Weights::new(a, b).unwrap()
    }

    #[test]
    fn identity_energies() {
        let id = RadialProfile::identity(2.0, 64).unwrap();
        let e = radial_energy(&MetricSpec::Constant, &wts(1.0, 1.0), &id).unwrap();
        assert!((e.total - 6.0 * PI).abs() < 1e-10);
        assert!((e.normal_part - 3.0 * PI).abs() < 1e-10);
        let e = radial_energy(&MetricSpec::Power { lambda: 1.0 }, &wts(2.0, 1.0), &id).unwrap();
        assert!((e.total - 10.0 * PI * 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn identity_distortion() {
        let id = RadialProfile::identity(5.0, 64).unwrap();
        let inv = InverseProfile::from_forward(&id);
        let k = radial_distortion(&MetricSpec::Power { lambda: 1.0 }, &wts(2.0, 1.0), &inv).unwrap();
        assert!((k - 10.0 * PI * 5f64.ln()).abs() < 1e-10);
        let id = RadialProfile::identity(2.0, 64).unwrap();
        let k = radial_distortion(&MetricSpec::Constant, &wts(1.0, 1.0), &InverseProfile::from_forward(&id)).unwrap();
        assert!((k - 6.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn closed_form_examples() {
        let k = distortion_closed_form(&MetricSpec::Power { lambda: 1.0 }, &wts(2.0, 1.0), 3.0, 5.0).unwrap();
        assert!((k - 10.0 * PI * 5f64.ln()).abs() < 1e-10);
        let k = distortion_closed_form(&MetricSpec::Constant, &wts(1.0, 2.0), 0.0, 4.0).unwrap();
        assert!((k - 60.0 * PI).abs() < 1e-9);
        let ks: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&al| distortion_closed_form(&MetricSpec::Constant, &wts(1.0, 1.0), al, 2.0).unwrap())
            .collect();
        assert!(ks[0] < ks[1] && ks[1] < ks[2]);
    }

    #[test]
    fn inverse_from_samples() {
        let s: Vec<f64> = (0..20).map(|i| 1.0 + i as f64 / 19.0).collect();
        let inv = InverseProfile::from_samples(s.clone(), s.clone(), vec![1.0; 20]).unwrap();
        let (v, d) = inv.eval(1.3);
        assert!((v - 1.3).abs() < 1e-14 && (d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_grid() {
        let g = PolarGridMap::from_fn(PolarGridMap::uniform_t(2.0, 256), 256, |t, th| Complex64::from_polar(t, th)).unwrap();
        let e = grid_energy(&MetricSpec::Constant, &wts(1.0, 1.0), &g).unwrap();
        assert!((e.total / (6.0 * PI) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn spectral_theta_is_exact_on_modes() {
        let g = PolarGridMap::from_fn(PolarGridMap::uniform_t(2.0, 33), 32, |t, th| Complex64::from_polar(t, th)).unwrap();
        let e = grid_energy_with(&MetricSpec::Constant, &wts(1.0, 1.0), &g, ThetaDerivative::Spectral).unwrap();
        // tangential part ∫ t dt dθ is integrated exactly by the trapezoid rule
        assert!((e.tangential_part - 3.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn rotation_invariance() {
        let g = PolarGridMap::from_fn(PolarGridMap::uniform_t(2.0, 64), 64, |t, th| {
            Complex64::from_polar(t, th) + 0.01 * (PI * (t - 1.0)).sin() * Complex64::from_polar(1.0, 3.0 * th)
        })
        .unwrap();
        let m = MetricSpec::Power { lambda: 2.0 };
        let e0 = grid_energy(&m, &wts(1.0, 1.0), &g).unwrap().total;
        for beta in [0.1, 1.0, PI] {
            let e = grid_energy(&m, &wts(1.0, 1.0), &g.rotated(beta)).unwrap().total;
            assert!((e - e0).abs() <= 1e-12 * e0);
        }
    }

    #[test]
    fn degenerate_grid() {
        let err = PolarGridMap::from_fn(PolarGridMap::uniform_t(2.0, 8), 32, |t, th| Complex64::from_polar(t, th)).unwrap_err();
        assert!(matches!(err, Error::DegenerateGrid(_)));
    }
}
