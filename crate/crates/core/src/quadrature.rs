//! Globally adaptive Gauss–Kronrod (7–15) quadrature.
//!
//! The error estimate and its rescaling follow QUADPACK's `qk15`. Intervals are
//! kept in a max-heap keyed by estimated error and the worst one is bisected
//! until the total estimate meets the tolerance or the subdivision cap is hit.
//!
//! With [`EndpointTransform::Sqrt`], every panel of the initial partition is
//! split at its midpoint and each half is integrated in `u` with
//! `s = end ± u²`. This turns `1/√(s − end)` endpoint behaviour into a smooth
//! integrand; regular integrands are unaffected apart from the cost.
//!
//! [`integrate_anchored_with`] hands the integrand each node as `(anchor, offset)`
//! with `s = anchor + offset` exactly, so a singular factor such as
//! `1/√(w(s) − w(anchor))` can be evaluated without cancellation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative tolerance for bound and solve paths.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Subdivision cap after which the best estimate is returned, flagged.
pub const MAX_SUBDIVISIONS: usize = 1_000_000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub subdivisions: usize,
    /// `false` when the tolerance was not met (subdivision cap or roundoff limit).
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EndpointTransform {
    #[default]
    None,
    /// Integrate each half panel in `u` with `s = end ± u²`.
    Sqrt,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub transform: EndpointTransform,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: DEFAULT_REL_TOL,
            abs_tol: 0.0,
            max_subdivisions: MAX_SUBDIVISIONS,
            transform: EndpointTransform::None,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        QuadOptions { rel_tol, ..Default::default() }
    }

    pub fn sqrt_endpoints(mut self) -> Self {
        self.transform = EndpointTransform::Sqrt;
        self
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    FromLeft(f64),
    FromRight(f64),
}

impl Map {
    /// `(anchor, offset, ds/du)`.
    #[inline]
    fn apply(self, u: f64) -> (f64, f64, f64) {
        match self {
            Map::Identity => (u, 0.0, 1.0),
            Map::FromLeft(p) => (p, u * u, 2.0 * u),
            Map::FromRight(q) => (q, -u * u, 2.0 * u),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    map: Map,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64, f64) -> f64>(f: &F, map: Map, a: f64, b: f64) -> Result<Segment> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |u: f64| -> Result<f64> {
        let (anchor, offset, jac) = map.apply(u);
        let v = f(anchor, offset);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { x: anchor + offset });
        }
        Ok(v * jac)
    };
    let fc = eval(center)?;
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let hl = half.abs();
    let value = resk * half;
    resabs *= hl;
    resasc *= hl;
    let mut error = ((resk - resg) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Segment { map, a, b, value, error })
}

fn initial_partition(lo: f64, hi: f64, split_points: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = split_points.iter().copied().filter(|&p| p > lo && p < hi).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 2);
    out.push(lo);
    out.extend(pts);
    out.push(hi);
    out
}

/// `∫_lo^hi f` with a default-configured integrator and the given split points.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64, split_points: &[f64]) -> Result<QuadResult> {
    integrate_with(f, lo, hi, split_points, &QuadOptions::rel(rel_tol))
}

/// `∫_lo^hi f` with explicit options. Non-finite integrand values are an error;
/// failing to reach the tolerance is reported through [`QuadResult::converged`].
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    split_points: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    integrate_anchored_with(|p, d| f(p + d), lo, hi, split_points, opts)
}

/// As [`integrate_with`] for an integrand `f(anchor, offset)` of `s = anchor + offset`.
///
/// Without a transform the offset is always zero; with [`EndpointTransform::Sqrt`]
/// the anchor is the panel end nearest to the node.
pub fn integrate_anchored_with<F: Fn(f64, f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    split_points: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("integration limits must be finite, got [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(QuadResult { value: 0.0, abs_error_estimate: 0.0, subdivisions: 0, converged: true });
    }
    if lo > hi {
        let r = integrate_anchored_with(f, hi, lo, split_points, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }

    let knots = initial_partition(lo, hi, split_points);
    let mut heap = BinaryHeap::new();
    for w in knots.windows(2) {
        let (p, q) = (w[0], w[1]);
        match opts.transform {
            EndpointTransform::None => heap.push(kronrod15(&f, Map::Identity, p, q)?),
            EndpointTransform::Sqrt => {
                let mid = 0.5 * (p + q);
                heap.push(kronrod15(&f, Map::FromLeft(p), 0.0, (mid - p).sqrt())?);
                heap.push(kronrod15(&f, Map::FromRight(q), 0.0, (q - mid).sqrt())?);
            }
        }
    }

    let mut frozen: Vec<Segment> = Vec::new();
    let mut subdivisions = 0usize;
    let totals = |heap: &BinaryHeap<Segment>, frozen: &[Segment]| {
        let mut v = 0.0;
        let mut e = 0.0;
        for s in heap.iter().chain(frozen) {
            v += s.value;
            e += s.error;
        }
        (v, e)
    };
    let (mut value, mut error) = totals(&heap, &frozen);
    let mut since_resum = 0usize;

    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= tol {
            break;
        }
        if subdivisions >= opts.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        let width = worst.b - worst.a;
        let scale = worst.a.abs().max(worst.b.abs()).max(f64::MIN_POSITIVE);
        if width <= 64.0 * f64::EPSILON * scale || mid <= worst.a || mid >= worst.b {
            frozen.push(worst);
            continue;
        }
        let left = kronrod15(&f, worst.map, worst.a, mid)?;
        let right = kronrod15(&f, worst.map, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
        since_resum += 1;
        if since_resum >= 256 {
            (value, error) = totals(&heap, &frozen);
            since_resum = 0;
        }
    }
    let (value, error) = totals(&heap, &frozen);
    let converged = error <= opts.abs_tol.max(opts.rel_tol * value.abs());
    Ok(QuadResult { value, abs_error_estimate: error, subdivisions, converged })
}

/// Partial integrals `∫_lo^{grid[i]} f`, one adaptive integration per panel.
#[derive(Debug, Clone, PartialEq)]
pub struct Cumulative {
    pub values: Vec<f64>,
    pub abs_error_estimate: f64,
    pub converged: bool,
}

pub fn cumulative<F: Fn(f64) -> f64>(f: F, lo: f64, grid: &[f64], rel_tol: f64) -> Result<Cumulative> {
    cumulative_with(f, lo, grid, &QuadOptions::rel(rel_tol))
}

pub fn cumulative_with<F: Fn(f64) -> f64>(f: F, lo: f64, grid: &[f64], opts: &QuadOptions) -> Result<Cumulative> {
    if grid.is_empty() {
        return Ok(Cumulative { values: Vec::new(), abs_error_estimate: 0.0, converged: true });
    }
    if grid[0] < lo {
        return Err(Error::InvalidParameter(format!("cumulative grid starts at {} below lo = {lo}", grid[0])));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotone { index: i + 1 });
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut err = 0.0;
    let mut converged = true;
    let mut prev = lo;
    for &g in grid {
        let r = integrate_with(&f, prev, g, &[], opts)?;
        acc += r.value;
        err += r.abs_error_estimate;
        converged &= r.converged;
        values.push(acc);
        prev = g;
    }
    Ok(Cumulative { values, abs_error_estimate: err, converged })
}
