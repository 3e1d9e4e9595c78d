use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Result<T> = std::result::Result<T, SdrError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdrError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension error: {0}")]
    DimensionError(String),
    #[error(
        "matrix is not positive definite (eigenvalue {eigenvalue:e} at or below threshold {threshold:e}); \
         consider adding a ridge"
    )]
    NotPositiveDefinite { eigenvalue: f64, threshold: f64 },
    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("empty data")]
    EmptyData,
    #[error("need n > p + 1 observations for estimation, got n = {n}, p = {p}")]
    TooFewObservations { n: usize, p: usize },
    #[error("invalid slicing: {0}")]
    InvalidSlicing(String),
    #[error("group {group} has {size} member(s); at least {required} required")]
    GroupTooSmall {
        group: usize,
        size: usize,
        required: usize,
    },
    #[error("censoring status is required for this method")]
    MissingStatus,
    #[error("threshold t = {t} precedes every failure time (1 - S_Y(t) = 0)")]
    ThresholdTooEarly { t: f64 },
    #[error(
        "censoring survival at observation {index} (time {time}) is {value:e}, below the support guard"
    )]
    CensoringSupportViolated { index: usize, time: f64, value: f64 },
    #[error("invalid method: {0}")]
    InvalidMethod(String),
    #[error("model misconfigured: {0}")]
    ModelMisconfigured(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Non-fatal conditions recorded alongside a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// A censoring stratum was empty during double slicing; only the other stratum was sliced.
    EmptyStratum { censored: bool },
    /// The requested leading subspace cuts through a tied eigenvalue.
    EigenvalueTie { index: usize, value: f64 },
    /// The projected induced kernel has (numerically) no mass in the requested directions.
    DegenerateProjection { eigenvalue: f64, reference: f64 },
    /// Dimension selection for the induced response had an empty search range.
    VacuousInducedRange { d_hat: usize },
    /// The MERC search range was shortened because too few eigenvalues were available.
    MercRangeClamped { requested: usize, used: usize },
}

impl Warning {
    pub fn kind(&self) -> &'static str {
        match self {
            Warning::EmptyStratum { .. } => "empty_stratum",
            Warning::EigenvalueTie { .. } => "eigenvalue_tie",
            Warning::DegenerateProjection { .. } => "degenerate_projection",
            Warning::VacuousInducedRange { .. } => "vacuous_induced_range",
            Warning::MercRangeClamped { .. } => "merc_range_clamped",
        }
    }
}
