use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid penalty: {0}")]
    InvalidPenalty(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("evaluation at R = 0 is undefined for {0}; use the extrapolated origin value")]
    AtOrigin(&'static str),

    #[error("not enough resolved nodes near the origin: {0}")]
    Unresolved(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("integration failed at R = {radius:e}: {reason}")]
    Integration { radius: f64, reason: String },

    #[error("solver failed: {0}")]
    Solve(#[from] SolveError),

    #[error("{path}: line {line}: {message}")]
    Csv { path: String, line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Failures of the two solution routes. `NotFound` variants are the honest
/// "method found nothing" outcomes and are kept apart from numerical breakdowns.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("miss function has the same sign at both ends of the bracket [{lo}, {hi}] (misses {miss_lo:e}, {miss_hi:e})")]
    BracketNotStraddled { lo: f64, hi: f64, miss_lo: f64, miss_hi: f64 },

    #[error("no delayed solution in bracket [{lo}, {hi}] (kick {kick:e})")]
    NoDelayedSolution { lo: f64, hi: f64, kick: f64 },

    #[error("delayed branch not found: solution moved by {change:e} when the kick was reduced to {kick:e}")]
    DelayedNotRobust { kick: f64, change: f64 },

    #[error("integrator blow-up for shooting parameter {parameter:e}: {reason}")]
    BlowUp { parameter: f64, reason: String },

    #[error("root search did not converge after {iterations} iterations (|miss| = {miss:e})")]
    NoConvergence { iterations: usize, miss: f64 },

    #[error("line search failed at iteration {iteration} (gradient sup-norm {gradient:e})")]
    LineSearch { iteration: usize, gradient: f64 },

    #[error("non-finite energy at iteration {iteration}")]
    NonFiniteEnergy { iteration: usize },

    #[error("gradient self-test failed: relative error {error:e} exceeds {tolerance:e}")]
    GradientSelfTest { error: f64, tolerance: f64 },

    #[error("minimizer did not reach gradient tolerance after {iterations} iterations (sup-norm {gradient:e})")]
    MaxIterations { iterations: usize, gradient: f64 },

    #[error("invalid solver configuration: {0}")]
    Config(String),
}

impl SolveError {
    /// True for outcomes where the method ran correctly but found no solution.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            SolveError::BracketNotStraddled { .. }
                | SolveError::NoDelayedSolution { .. }
                | SolveError::DelayedNotRobust { .. }
                | SolveError::NoConvergence { .. }
        )
    }
}
