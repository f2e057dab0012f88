use thiserror::Error;

/// Errors raised by the numerical core and the run orchestration.
#[derive(Debug, Error)]
pub enum SfvError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: density {rho} must be positive")]
    InvalidState { rho: f64 },

    #[error("infeasible steady state at x = {x} m: radicand {radicand} is negative")]
    InfeasibleSteadyState { x: f64, radicand: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("boundary ghost density {rho} is not positive ({side} boundary, node {node})")]
    GhostDensity {
        side: &'static str,
        node: usize,
        rho: f64,
    },

    #[error("unphysical junction state at node {node}: nodal density {rho}")]
    UnphysicalJunction { node: usize, rho: f64 },

    #[error("positivity violated in pipe {pipe} at t = {time} s, cell {cell}, stochastic cell {stochastic_cell}: density {rho}")]
    Positivity {
        pipe: usize,
        time: f64,
        cell: usize,
        stochastic_cell: usize,
        rho: f64,
    },

    #[error("solver failed at t = {time} s: {source}")]
    Step {
        time: f64,
        #[source]
        source: Box<SfvError>,
    },

    #[error("Monte Carlo sample {index} (y = {y}) failed: {source}")]
    Sample {
        index: usize,
        y: f64,
        #[source]
        source: Box<SfvError>,
    },

    #[error("output grid mismatch: {0}")]
    GridMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl SfvError {
    /// True for errors caused by the input document rather than the solver.
    pub fn is_config_error(&self) -> bool {
        matches!(self, SfvError::Config(_) | SfvError::InvalidParameter(_))
    }
}

pub type Result<T, E = SfvError> = std::result::Result<T, E>;
