use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: requested {requested:e}, achieved {achieved:e}")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("conjugate diverges: s={s} exceeds the range of i(x2={x2}, .)")]
    ConjugateDivergent { x2: f64, s: f64 },

    #[error("hypothesis validation: {0}")]
    Hypothesis(String),

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("kernel singularity: evaluation at coincident points")]
    Singularity,

    #[error("field not admissible: {0}")]
    Admissibility(String),

    #[error("multiplier bisection failed: mass {mass} > kappa {kappa} at mu={mu_max}")]
    MultiplierBracket { mass: f64, kappa: f64, mu_max: f64 },

    #[error("energy decreased by {drop:e} during fixed-point iteration (tolerance {tol:e})")]
    AscentViolation { drop: f64, tol: f64 },

    #[error("solver did not converge within {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("point-vortex positions too close: min distance {min_dist:e}")]
    VortexCollision { min_dist: f64 },

    #[error("no valid c1 window found down to c1={floor}")]
    NoWindow { floor: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
