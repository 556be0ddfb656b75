use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state or argument left the domain of a correlation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coefficient evaluation failed at a specific grid location.
    #[error("coefficient evaluation failed at node {node} (u = {u}, v = {v}): {reason}")]
    NodeDomain {
        node: usize,
        u: f64,
        v: f64,
        reason: String,
    },

    #[error("degenerate scaling: {0}")]
    DegenerateScaling(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("fixed point did not converge after {subiterations} sub-iterations (residual {residual:.3e})")]
    Convergence { subiterations: usize, residual: f64 },

    #[error("solution diverged (max |field| = {norm:.3e})")]
    Divergence { norm: f64 },

    /// A time step failed; wraps the cause with the time at which it happened.
    #[error("step starting at t* = {t_star} failed: {source}")]
    Step { t_star: f64, source: Box<Error> },

    #[error("reference solution not fine enough: a further time refinement changes it by {delta:.3e}, more than 10% of the measured error {measured:.3e}")]
    ReferenceQuality { delta: f64, measured: f64 },

    /// Scenario or model configuration problem; the message names the field.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Step { source, .. } => source.is_numerical(),
            Error::Domain(_)
            | Error::NodeDomain { .. }
            | Error::Convergence { .. }
            | Error::Divergence { .. }
            | Error::ReferenceQuality { .. } => true,
            _ => false,
        }
    }

    /// Time at which a run aborted, if known.
    pub fn t_star(&self) -> Option<f64> {
        match self {
            Error::Step { t_star, .. } => Some(*t_star),
            _ => None,
        }
    }
}
