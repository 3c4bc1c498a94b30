use std::fmt;

/// Errors raised by geometry construction, assembly and the solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("overlapping regions: {0}")]
    Overlap(String),
    #[error("truncation radius too small: {0}")]
    Truncation(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("kernel singularity at x = y = {0}")]
    Singularity(f64),
    #[error("point {0} lies in the closure of the interior domain")]
    Domain(f64),
    #[error("region has no interior nodes: {0}")]
    EmptyRegion(String),
    #[error("singular linear system: {0}")]
    SingularSystem(String),
    #[error("iteration cap of {0} reached")]
    MaxIterations(usize),
    #[error("active set still changing after {0} iterations")]
    Cycling(usize),
    #[error("Newton iteration did not converge in {steps} steps (residual {residual:.3e})")]
    NoConvergence { steps: usize, residual: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("check failed: {0}")]
    Assertion(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal conditions. Each one is also logged at `warn` level when raised.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Warning {
    /// A region narrower than h/2 was meshed with a single element.
    DegenerateRegion { left: f64, right: f64 },
    /// Fixed grading loses accuracy for strongly singular kernels.
    NearUnitOrder { s: f64 },
    /// Two quadrature resolutions disagree beyond the requested tolerance.
    Accuracy { quantity: String, discrepancy: f64 },
    /// The active-set method cycled and the projected Gauss-Seidel result was used.
    PdasFallback { iterations: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DegenerateRegion { left, right } => {
                write!(
                    f,
                    "region ({left}, {right}) is narrower than h/2; using one element"
                )
            }
            Warning::NearUnitOrder { s } => {
                write!(f, "s = {s} > 0.9: singular quadrature accuracy degrades")
            }
            Warning::Accuracy {
                quantity,
                discrepancy,
            } => {
                write!(
                    f,
                    "{quantity}: quadrature resolutions differ by {discrepancy:.3e}"
                )
            }
            Warning::PdasFallback { iterations } => {
                write!(
                    f,
                    "active-set iteration cycled after {iterations} steps; used PGS oracle"
                )
            }
        }
    }
}

impl Warning {
    pub(crate) fn emit(self) -> Self {
        log::warn!("{self}");
        self
    }
}
