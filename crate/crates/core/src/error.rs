use thiserror::Error;

use crate::ode::OdeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curvature profile: {0}")]
    InvalidProfile(String),
    #[error("t = {t} lies outside the profile domain")]
    OutsideDomain { t: f64 },
    #[error("integration failed: {source}")]
    Integration {
        #[from]
        source: OdeError,
    },
    #[error("initial data h = {h0}, h' = {dh0} is not positive at the initial point")]
    NonPositiveStart { h0: f64, dh0: f64 },
    #[error("t = {t} is outside the positivity interval ({lo}, {hi})")]
    OutsidePositivity { t: f64, lo: f64, hi: f64 },
    #[error("empty interval [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("h vanishes at the focal radius {radius} before the tube depth {depth}")]
    FocalRadiusReached { radius: f64, depth: f64 },
    #[error("truncation level {level} lies outside the solved range [{lo}, {hi}]")]
    TruncationOutOfRange { level: f64, lo: f64, hi: f64 },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("scenario does not match this estimate: {0}")]
    ScenarioMismatch(String),
    #[error("G is not positive at t = {t}; G^(-1/2) is undefined")]
    NonPositiveTail { t: f64 },
    #[error("negative radius {0}")]
    NegativeRadius(f64),
    #[error("quadrature failed to reach tolerance near r = {r}")]
    Quadrature { r: f64 },
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate induced metric at grid point ({i}, {j})")]
    DegenerateMetric { i: usize, j: usize },
    #[error("patch leaves the regular tube of the chart at rho = {rho}")]
    PatchExitsTube { rho: f64 },
    #[error("chart {chart} does not certify the {form} comparison hypotheses")]
    Uncertified { chart: String, form: String },
    #[error("unknown registry entry `{0}`")]
    UnknownEntry(String),
}
