//! Radial metrics on the target annulus and the weight `w(s) = b² s² ρ(s)²`.

use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::roots::golden_section_min;

/// Slack allowed below `s = 1` (and beyond table ends) before a point counts as out of domain.
const DOMAIN_SLACK: f64 = 1e-9;

/// Number of geometric grid points scanned by [`minimize_weight`].
const WEIGHT_SCAN_POINTS: usize = 1025;

/// Relative band within which two weight values are treated as tied.
const TIE_BAND: f64 = 1e-13;

/// A radial metric `ρ(s) > 0` on `[1, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    /// `ρ ≡ 1`.
    Constant,
    /// `ρ(s) = s^(−λ)`.
    Power { lambda: f64 },
    /// Sampled `ρ`, interpolated log-linearly in `(ln s, ln ρ)`.
    Tabulated(Table),
}

/// Samples of a tabulated metric. Abscissae are strictly increasing and `≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableData", into = "TableData")]
pub struct Table {
    s: Vec<f64>,
    rho: Vec<f64>,
    ln_s: Vec<f64>,
    ln_rho: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableData {
    s: Vec<f64>,
    rho: Vec<f64>,
}

impl TryFrom<TableData> for Table {
    type Error = Error;
    fn try_from(d: TableData) -> Result<Self> {
        Table::new(d.s, d.rho)
    }
}

impl From<Table> for TableData {
    fn from(t: Table) -> Self {
        TableData { s: t.s, rho: t.rho }
    }
}

#[derive(Deserialize)]
struct TableRow {
    s: f64,
    rho: f64,
}

impl Table {
    pub fn new(s: Vec<f64>, rho: Vec<f64>) -> Result<Self> {
        ensure(s.len() == rho.len(), || "table columns differ in length".into())?;
        ensure(s.len() >= 4, || format!("table needs at least 4 samples, got {}", s.len()))?;
        for (i, (&si, &ri)) in s.iter().zip(&rho).enumerate() {
            ensure(si.is_finite() && ri.is_finite(), || format!("non-finite table entry at row {i}"))?;
            ensure(si >= 1.0, || format!("table abscissa {si} < 1 at row {i}"))?;
            if ri <= 0.0 {
                return Err(Error::NonPositive { s: si });
            }
        }
        if let Some(i) = s.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotone { index: i + 1 });
        }
        let ln_s = s.iter().map(|v| v.ln()).collect();
        let ln_rho = rho.iter().map(|v| v.ln()).collect();
        Ok(Table { s, rho, ln_s, ln_rho })
    }

    /// Samples `f` at the given abscissae.
    pub fn sample<F: Fn(f64) -> f64>(s: &[f64], f: F) -> Result<Self> {
        Table::new(s.to_vec(), s.iter().map(|&x| f(x)).collect())
    }

    /// Reads a CSV with header `s,rho`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "s" || &headers[1] != "rho" {
            return Err(Error::Parse(format!("metric table header must be `s,rho`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut s = Vec::new();
        let mut rho = Vec::new();
        for row in rdr.deserialize() {
            let row: TableRow = row?;
            s.push(row.s);
            rho.push(row.rho);
        }
        Table::new(s, rho)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Table::from_csv_reader(file)
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.s[0], self.s[self.s.len() - 1])
    }

    /// Slope of `ln ρ` against `ln s` on the cell holding `[lo, hi]`, if one cell does.
    fn cell_log_slope(&self, lo: f64, hi: f64) -> Option<f64> {
        let n = self.s.len();
        let k = self.s.partition_point(|&x| x <= lo).clamp(1, n - 1) - 1;
        let k = if lo == self.s[k + 1] && k + 2 < n { k + 1 } else { k };
        if lo >= self.s[k] && hi <= self.s[k + 1] {
            Some((self.ln_rho[k + 1] - self.ln_rho[k]) / (self.ln_s[k + 1] - self.ln_s[k]))
        } else {
            None
        }
    }

    fn eval(&self, s: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(s >= lo * (1.0 - DOMAIN_SLACK) && s <= hi * (1.0 + DOMAIN_SLACK)) {
            return Err(Error::OutOfDomain { s, lo, hi });
        }
        let s = s.clamp(lo, hi);
        let n = self.s.len();
        let k = self.s.partition_point(|&x| x <= s).clamp(1, n - 1) - 1;
        let x = s.ln();
        let th = (x - self.ln_s[k]) / (self.ln_s[k + 1] - self.ln_s[k]);
        let v = ((1.0 - th) * self.ln_rho[k] + th * self.ln_rho[k + 1]).exp();
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonPositive { s })
        }
    }
}

/// Weights `a, b > 0` of the normal and tangential energy parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
}

impl Weights {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        ensure(a.is_finite() && a > 0.0, || format!("weight a must be positive, got {a}"))?;
        ensure(b.is_finite() && b > 0.0, || format!("weight b must be positive, got {b}"))?;
        Ok(Weights { a, b })
    }
}

/// Outer radii of the source annulus `1 ≤ |z| ≤ r` and target annulus `1 ≤ |ω| ≤ R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusPair {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl AnnulusPair {
    pub fn new(r: f64, big_r: f64) -> Result<Self> {
        ensure(r.is_finite() && r > 1.0, || format!("source radius r must exceed 1, got {r}"))?;
        ensure(big_r.is_finite() && big_r > 1.0, || format!("target radius R must exceed 1, got {big_r}"))?;
        Ok(AnnulusPair { r, big_r })
    }
}

/// A derivative value, with a flag set when a one-sided stencil had to be used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub one_sided: bool,
}

/// Location and value of the minimum of the weight on `[1, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightMinimum {
    pub s_star: f64,
    pub w_min: f64,
}

impl MetricSpec {
    pub fn power(lambda: f64) -> Result<Self> {
        ensure(lambda.is_finite(), || format!("power exponent must be finite, got {lambda}"))?;
        Ok(MetricSpec::Power { lambda })
    }

    /// Parses the CLI form: `const`, `power:<λ>` or `table:<path>`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "const" || text == "constant" {
            return Ok(MetricSpec::Constant);
        }
        if let Some(rest) = text.strip_prefix("power:") {
            let lambda: f64 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad power exponent `{rest}`")))?;
            return MetricSpec::power(lambda).map_err(|e| Error::Parse(e.to_string()));
        }
        if let Some(rest) = text.strip_prefix("table:") {
            return Table::from_csv_path(Path::new(rest.trim())).map(MetricSpec::Tabulated);
        }
        Err(Error::Parse(format!("unknown metric `{text}` (expected const, power:<lambda> or table:<path>)")))
    }

    /// Interior points where `ρ` is not differentiable, restricted to `(lo, hi)`.
    pub fn kinks_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self {
            MetricSpec::Tabulated(t) => t.s.iter().copied().filter(|&s| s > lo && s < hi).collect(),
            _ => Vec::new(),
        }
    }

    /// Upper end of the region where the metric is defined.
    pub fn max_domain(&self) -> f64 {
        match self {
            MetricSpec::Tabulated(t) => t.domain().1,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricSpec::Constant => f.write_str("const"),
            MetricSpec::Power { lambda } => write!(f, "power:{lambda}"),
            MetricSpec::Tabulated(t) => write!(f, "table[{} samples]", t.s.len()),
        }
    }
}

/// Evaluates `ρ(s)`.
pub fn eval_rho(m: &MetricSpec, s: f64) -> Result<f64> {
    match m {
        MetricSpec::Tabulated(t) => t.eval(s),
        _ => {
            if !(s.is_finite() && s >= 1.0 - DOMAIN_SLACK) {
                return Err(Error::OutOfDomain { s, lo: 1.0, hi: f64::INFINITY });
            }
            Ok(match m {
                MetricSpec::Constant => 1.0,
                MetricSpec::Power { lambda } => s.powf(-lambda),
                MetricSpec::Tabulated(_) => unreachable!(),
            })
        }
    }
}

/// Evaluates `ρ′(s)`: analytic for closed-form metrics, central differences for tables.
pub fn eval_rho_prime(m: &MetricSpec, s: f64) -> Result<Derivative> {
    match m {
        MetricSpec::Constant => {
            eval_rho(m, s)?;
            Ok(Derivative { value: 0.0, one_sided: false })
        }
        MetricSpec::Power { lambda } => {
            eval_rho(m, s)?;
            Ok(Derivative { value: -lambda * s.powf(-lambda - 1.0), one_sided: false })
        }
        MetricSpec::Tabulated(t) => {
            let (lo, hi) = t.domain();
            let v0 = t.eval(s)?;
            let s = s.clamp(lo, hi);
            let h = (1e-6 * s).max(1e-6);
            if s - h >= lo && s + h <= hi {
                let value = (t.eval(s + h)? - t.eval(s - h)?) / (2.0 * h);
                Ok(Derivative { value, one_sided: false })
            } else if s + 2.0 * h <= hi {
                let value = (-3.0 * v0 + 4.0 * t.eval(s + h)? - t.eval(s + 2.0 * h)?) / (2.0 * h);
                Ok(Derivative { value, one_sided: true })
            } else {
                let value = (3.0 * v0 - 4.0 * t.eval(s - h)? + t.eval(s - 2.0 * h)?) / (2.0 * h);
                Ok(Derivative { value, one_sided: true })
            }
        }
    }
}

/// The weight `w(s) = b² s² ρ(s)²`.
pub fn weight(m: &MetricSpec, w: &Weights, s: f64) -> Result<f64> {
    let v = w.b * s * eval_rho(m, s)?;
    Ok(v * v)
}

/// `w(p + δ) − w(p)`, accurate for `|δ| ≪ p`: on each piece the weight is a
/// power of `s`, so the increment is `w(p)·expm1(k·ln1p(δ/p))`.
pub fn weight_increment(m: &MetricSpec, w: &Weights, p: f64, delta: f64) -> Result<f64> {
    let wp = weight(m, w, p)?;
    let s = p + delta;
    let k = match m {
        MetricSpec::Constant => 2.0,
        MetricSpec::Power { lambda } => 2.0 - 2.0 * lambda,
        MetricSpec::Tabulated(t) => {
            t.eval(s)?;
            match t.cell_log_slope(p.min(s), p.max(s)) {
                Some(c) => 2.0 + 2.0 * c,
                None => return Ok(weight(m, w, s)? - wp),
            }
        }
    };
    eval_rho(m, s)?;
    Ok(wp * (k * (delta / p).ln_1p()).exp_m1())
}

/// Global minimum of the weight on `[1, R]`, ties resolved toward the smallest `s`.
///
/// A geometric scan locates the best cell, golden-section search refines it,
/// and table knots inside the bracket are tried explicitly since minima of the
/// interpolated weight sit on knots or endpoints.
pub fn minimize_weight(m: &MetricSpec, w: &Weights, big_r: f64) -> Result<WeightMinimum> {
    ensure(big_r.is_finite() && big_r > 1.0, || format!("R must exceed 1, got {big_r}"))?;
    let n = WEIGHT_SCAN_POINTS;
    let ln_r = big_r.ln();
    let grid: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            i if i == n - 1 => big_r,
            i => (ln_r * i as f64 / (n - 1) as f64).exp(),
        })
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&s| weight(m, w, s)).collect::<Result<_>>()?;
    let w_grid_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let i = vals
        .iter()
        .position(|&v| v <= w_grid_min * (1.0 + TIE_BAND))
        .expect("finite weights");

    let mut best = WeightMinimum { s_star: grid[i], w_min: vals[i] };
    let mut refined = false;
    let consider = |s: f64, v: f64, best: &mut WeightMinimum, refined: &mut bool| {
        let better = v < best.w_min * (1.0 - TIE_BAND);
        let tied = v <= best.w_min * (1.0 + TIE_BAND) && (*refined || s < best.s_star);
        if better || tied {
            *best = WeightMinimum { s_star: s, w_min: v };
            *refined = false;
        }
    };

    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(n - 1)];
    let (sg, vg) = golden_section_min(|s| weight(m, w, s), lo, hi, 1e-13 * hi)?;
    // the refined point only wins outright, never on a tie with an exact candidate
    if vg < best.w_min {
        best = WeightMinimum { s_star: sg, w_min: vg };
        refined = true;
    }
    for k in m.kinks_in(lo, hi) {
        consider(k, weight(m, w, k)?, &mut best, &mut refined);
    }
    // Endpoints are exact candidates, so an endpoint minimum is reported exactly.
    consider(1.0, vals[0], &mut best, &mut refined);
    consider(big_r, vals[n - 1], &mut best, &mut refined);
    Ok(best)
}
