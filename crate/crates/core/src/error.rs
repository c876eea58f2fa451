use thiserror::Error;

/// Failures raised while building or evaluating the construction.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("gap-length series diverges for delta = {delta} (need delta > 0)")]
    DivergentSum { delta: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e} (achieved {achieved:e})")]
    Quadrature { tolerance: f64, achieved: f64 },

    #[error("profile calibration failed: {0}")]
    Calibration(String),

    #[error("only one-sided values exist at t = {t}; request a side")]
    OneSidedOnly { t: f64 },

    #[error("seed alpha1 = {alpha1:e} outside admissible range (0, {upper:e}]")]
    SeedRejected { alpha1: f64, upper: f64 },

    #[error("backward sweep broke down at k = {k}: m_(k+1) - (1 + beta_(k+1)) = {denominator:e}")]
    SweepBreakdown { k: i64, denominator: f64 },

    #[error("homeomorphism condition violated at k = {k}: min(1 + psi_k) = {min_slope:e}")]
    NotMonotone { k: i64, min_slope: f64 },

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("root finder exhausted {iterations} iterations")]
    RootFinder { iterations: usize },

    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
