//! Error type shared by the solver layers.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("normalization violated: g(1) = {g1}, g'(1) = {dg1} (expected 1 and -1/3)")]
    NormalizationViolated { g1: f64, dg1: f64 },

    #[error("largeness hypothesis failed: g''(1) = {d2g1} below required {threshold}")]
    HypothesisFailed { d2g1: f64, threshold: f64 },

    #[error("strain ratio y = {y} left the interval |y - 1| <= {delta}")]
    DomainExit { y: f64, delta: f64 },

    #[error("degenerate geometry at node {node}: f' = {fprime}, lambda = {lambda}")]
    DegenerateGeometry { node: usize, fprime: f64, lambda: f64 },

    #[error("iteration not contracting: ratios {prev} and {last} at iteration {iteration}")]
    NotContracting { iteration: usize, prev: f64, last: f64 },

    #[error("maximum iterations ({max_iter}) exceeded, last update {last_update:e}")]
    MaxIterExceeded { max_iter: usize, last_update: f64 },

    #[error("iterate left the ball N(delta): |zeta| = {norm:e} > delta = {delta:e}")]
    LeftBall { norm: f64, delta: f64 },

    #[error("mu outside proven range: |mu| = {mu} > mu0 = {mu0}")]
    MuOutOfRange { mu: f64, mu0: f64 },

    #[error("reference density {brho} outside admissible bracket [{lo}, {hi}]")]
    DensityOutOfRange { brho: f64, lo: f64, hi: f64 },

    #[error("bracket failure: mismatch {at_lo:e} at lower end, {at_hi:e} at upper end")]
    BracketFailure { at_lo: f64, at_hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step size too large: energy drift {drift:e} exceeds {tolerance:e} at t = {t}")]
    StepSizeTooLarge { drift: f64, tolerance: f64, t: f64 },

    #[error("trajectory is not collapsing (e_eff = {e_eff}, qdot0 = {qdot0})")]
    NotCollapsing { e_eff: f64, qdot0: f64 },

    #[error("time {t} outside sampled range [{t_min}, {t_max}]")]
    OutOfRange { t: f64, t_min: f64, t_max: f64 },

    #[error("nonconvex model: g''({y}) = {d2g} <= 0 at node {node}")]
    NonconvexModel { node: usize, y: f64, d2g: f64 },
}

impl SolverError {
    /// Short variant name, used in CLI messages.
    pub fn kind(&self) -> &'static str {
        match self {
            SolverError::NormalizationViolated { .. } => "NormalizationViolated",
            SolverError::HypothesisFailed { .. } => "HypothesisFailed",
            SolverError::DomainExit { .. } => "DomainExit",
            SolverError::DegenerateGeometry { .. } => "DegenerateGeometry",
            SolverError::NotContracting { .. } => "NotContracting",
            SolverError::MaxIterExceeded { .. } => "MaxIterExceeded",
            SolverError::LeftBall { .. } => "LeftBall",
            SolverError::MuOutOfRange { .. } => "MuOutOfRange",
            SolverError::DensityOutOfRange { .. } => "DensityOutOfRange",
            SolverError::BracketFailure { .. } => "BracketFailure",
            SolverError::InvalidParameter(_) => "InvalidParameter",
            SolverError::StepSizeTooLarge { .. } => "StepSizeTooLarge",
            SolverError::NotCollapsing { .. } => "NotCollapsing",
            SolverError::OutOfRange { .. } => "OutOfRange",
            SolverError::NonconvexModel { .. } => "NonconvexModel",
        }
    }
}
