use thiserror::Error;

/// Errors produced by the numerical routines and the file/CLI front end.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("s = {s} is outside the metric domain [{lo}, {hi}]")]
    OutOfDomain { s: f64, lo: f64, hi: f64 },

    #[error("metric is not positive at s = {s}")]
    NonPositive { s: f64 },

    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("integrand is singular: alpha = {alpha} is not admissible (alpha0 = {alpha0})")]
    SingularIntegrand { alpha: f64, alpha0: f64 },

    #[error("instance is infeasible: r = {r} exceeds the bound r_max = {r_max}")]
    Infeasible { r: f64, r_max: f64 },

    #[error("could not bracket a root after {expansions} expansions")]
    BracketFailure { expansions: usize },

    #[error("root finder did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("boundary condition not met: relative residual {residual:e} exceeds {tol:e}")]
    BoundaryMismatch { residual: f64, tol: f64 },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("samples are not strictly monotone at index {index}")]
    NonMonotone { index: usize },

    #[error("closed-form case is infeasible: {0}")]
    InfeasibleCase(String),

    #[error("closed form is undefined for lambda = 1")]
    LambdaOne,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
