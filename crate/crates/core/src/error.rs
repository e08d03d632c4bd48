use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("deformation parameter must lie in (0, 1], got {0}")]
    InvalidDeformation(f64),

    #[error("q-integer overflow: [{n}]_q leaves the f64 range at q = {q}")]
    Overflow { n: i64, q: f64 },

    #[error("grid of {grid} points cannot certify band {band} (need grid > 2 * band)")]
    GridTooCoarse { grid: usize, band: usize },

    #[error("power iteration did not converge after {iterations} iterations")]
    PowerIterationStalled { iterations: usize },

    #[error("constraint rows do not span R^{dim}; the linear program would be unbounded")]
    LpUnbounded { dim: usize },

    #[error("linear program did not converge after {iterations} iterations")]
    LpIterationLimit { iterations: usize },

    #[error("diameter bound violated: {value} > {bound}")]
    DiameterBoundExceeded { value: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable identifier for machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDeformation(_) => "invalid_deformation",
            Error::Overflow { .. } => "overflow",
            Error::GridTooCoarse { .. } => "grid_too_coarse",
            Error::PowerIterationStalled { .. } => "power_iteration_stalled",
            Error::LpUnbounded { .. } => "lp_unbounded",
            Error::LpIterationLimit { .. } => "lp_iteration_limit",
            Error::DiameterBoundExceeded { .. } => "diameter_bound_exceeded",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
