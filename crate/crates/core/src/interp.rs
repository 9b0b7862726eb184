//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch–Carlson).

use crate::error::{Error, Result};

/// Monotone piecewise cubic Hermite interpolant through `(x_k, y_k)` with slopes `d_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant from data alone, estimating slopes by the
    /// weighted harmonic mean of adjacent secants.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_abscissae(&x, &y)?;
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        for k in 1..n - 1 {
            let (s1, s2) = (delta[k - 1], delta[k]);
            if s1 != 0.0 && s2 != 0.0 && s1.signum() == s2.signum() {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / s1 + w2 / s2);
            }
        }
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(MonotoneCubic { x, y, d })
    }

    /// Builds the interpolant from data with known slopes. Slopes that would
    /// break monotonicity of a cell are pulled back onto the Fritsch–Carlson
    /// circle `α² + β² ≤ 9`.
    pub fn with_slopes(x: Vec<f64>, y: Vec<f64>, mut d: Vec<f64>) -> Result<Self> {
        check_abscissae(&x, &y)?;
        if d.len() != x.len() || d.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("slope samples must be finite and match the data".into()));
        }
        for k in 0..x.len() - 1 {
            let delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
            if delta == 0.0 {
                d[k] = 0.0;
                d[k + 1] = 0.0;
                continue;
            }
            let mut al = d[k] / delta;
            let mut be = d[k + 1] / delta;
            if al < 0.0 {
                d[k] = 0.0;
                al = 0.0;
            }
            if be < 0.0 {
                d[k + 1] = 0.0;
                be = 0.0;
            }
            let rad = al * al + be * be;
            if rad > 9.0 {
                let tau = 3.0 / rad.sqrt();
                d[k] = tau * al * delta;
                d[k + 1] = tau * be * delta;
            }
        }
        Ok(MonotoneCubic { x, y, d })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn cell(&self, xq: f64) -> usize {
        let n = self.x.len();
        self.x.partition_point(|&v| v <= xq).clamp(1, n - 1) - 1
    }

    /// Value and derivative at `xq`; the end cubics extend past the data.
    pub fn eval(&self, xq: f64) -> (f64, f64) {
        self.eval_in(self.cell(xq), xq)
    }

    fn eval_in(&self, k: usize, xq: f64) -> (f64, f64) {
        let h = self.x[k + 1] - self.x[k];
        let t = (xq - self.x[k]) / h;
        let (y0, y1, d0, d1) = (self.y[k], self.y[k + 1], self.d[k], self.d[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1;
        let dv = ((6.0 * t2 - 6.0 * t) * (y0 - y1)) / h + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv)
    }

    /// For increasing data, the abscissa where the interpolant equals `yq`.
    ///
    /// Safeguarded Newton inside the cell that brackets `yq`.
    pub fn invert(&self, yq: f64) -> f64 {
        let n = self.y.len();
        let k = self.y.partition_point(|&v| v <= yq).clamp(1, n - 1) - 1;
        let (mut lo, mut hi) = (self.x[k], self.x[k + 1]);
        if yq <= self.y[k] {
            return lo;
        }
        if yq >= self.y[k + 1] {
            return hi;
        }
        let frac = (yq - self.y[k]) / (self.y[k + 1] - self.y[k]);
        let mut x = lo + frac * (hi - lo);
        for _ in 0..100 {
            let (v, dv) = self.eval_in(k, x);
            let g = v - yq;
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = if dv > 0.0 { g / dv } else { f64::NAN };
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
                return next;
            }
            x = next;
        }
        x
    }
}

impl MonotoneCubic {
    /// For increasing data, `(x, y′(x))` where the interpolant equals `anchor + offset`.
    ///
    /// When `anchor` is a data value the cell cubic is solved in the local
    /// coordinate about that knot, so tiny offsets keep full relative accuracy.
    pub fn invert_anchored(&self, anchor: f64, offset: f64) -> (f64, f64) {
        let n = self.y.len();
        let j = self.y.partition_point(|&v| v < anchor);
        let is_knot = j < n && self.y[j] == anchor;
        let fallback = || {
            let x = self.invert(anchor + offset);
            (x, self.eval(x).1)
        };
        if !is_knot || offset == 0.0 {
            return fallback();
        }
        if offset > 0.0 && j + 1 < n {
            let (h, c1, c2, c3) = self.local_coefficients(j);
            if offset >= c1 + c2 + c3 {
                return fallback();
            }
            let z = solve_increasing_cubic(c1, c2, c3, offset);
            (self.x[j] + h * z, (c1 + 2.0 * c2 * z + 3.0 * c3 * z * z) / h)
        } else if offset < 0.0 && j > 0 {
            let (h, c1, c2, c3) = self.local_coefficients(j - 1);
            // in φ = 1 − θ the cell reads y_{j} − (e1 φ + e2 φ² + e3 φ³)
            let (e1, e2, e3) = (c1 + 2.0 * c2 + 3.0 * c3, -(c2 + 3.0 * c3), c3);
            if -offset >= e1 + e2 + e3 {
                return fallback();
            }
            let z = solve_increasing_cubic(e1, e2, e3, -offset);
            (self.x[j] - h * z, (e1 + 2.0 * e2 * z + 3.0 * e3 * z * z) / h)
        } else {
            fallback()
        }
    }

    /// `(h, c1, c2, c3)` with `y = y_k + c1 θ + c2 θ² + c3 θ³` on cell `k`.
    fn local_coefficients(&self, k: usize) -> (f64, f64, f64, f64) {
        let h = self.x[k + 1] - self.x[k];
        let dy = self.y[k + 1] - self.y[k];
        let (m0, m1) = (h * self.d[k], h * self.d[k + 1]);
        (h, m0, 3.0 * dy - 2.0 * m0 - m1, m0 + m1 - 2.0 * dy)
    }
}

/// Root in `[0, 1]` of `c1 z + c2 z² + c3 z³ = target` for a polynomial increasing there.
fn solve_increasing_cubic(c1: f64, c2: f64, c3: f64, target: f64) -> f64 {
    let p = |z: f64| ((c3 * z + c2) * z + c1) * z;
    let dp = |z: f64| (3.0 * c3 * z + 2.0 * c2) * z + c1;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // leading-order guesses from the linear and quadratic terms
    let mut z: f64 = 1.0;
    if c1 > 0.0 {
        z = z.min(target / c1);
    }
    if c2 > 0.0 {
        z = z.min((target / c2).sqrt());
    }
    if !(z > 0.0) {
        z = 0.5;
    }
    for _ in 0..200 {
        let g = p(z) - target;
        if g > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let d = dp(z);
        let mut next = if d > 0.0 { z - g / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if lo == 0.0 { 0.5 * hi.min(2.0 * z) } else { 0.5 * (lo + hi) };
        }
        if (next - z).abs() <= 4.0 * f64::EPSILON * z.abs() {
            return next;
        }
        z = next;
    }
    z
}

fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() {
        0.0
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

fn check_abscissae(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() < 2 || x.len() != y.len() {
        return Err(Error::InvalidParameter("interpolation needs at least two matching samples".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("interpolation samples must be finite".into()));
    }
    match x.windows(2).position(|w| w[1] <= w[0]) {
        Some(i) => Err(Error::NonMonotone { index: i + 1 }),
        None => Ok(()),
    }
}
