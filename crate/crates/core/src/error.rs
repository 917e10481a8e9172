use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("A^-1 B is zero; no nonzero reference direction exists")]
    ZeroInputDirection,

    #[error("reference magnitude {requested} A is outside the admissible range (max {max} A)")]
    MagnitudeOutOfRange { requested: f64, max: f64 },

    #[error("(A, B) is not controllable")]
    NotControllable,

    #[error("initial gain does not stabilize the plant; Newton iteration cannot start")]
    NotStabilizing,

    #[error("Riccati iteration did not converge after {iterations} iterations (residual {residual:e})")]
    RiccatiNotConverged { iterations: usize, residual: f64 },

    #[error("reference is orthogonal to B; the eigenvalue parameterisation of K is undefined")]
    DegenerateReference,

    #[error("no feasible eigenvalue found in [{lo:e}, {hi:e}]")]
    NoFeasibleLambda { lo: f64, hi: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("barrier constraint cannot be satisfied by any input at step {step}")]
    BarrierUnsatisfiable { step: usize },

    #[error("state became non-finite at step {step}")]
    NonFiniteState { step: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroInputDirection
                | Error::NotControllable
                | Error::NotStabilizing
                | Error::RiccatiNotConverged { .. }
                | Error::DegenerateReference
                | Error::NoFeasibleLambda { .. }
                | Error::BarrierUnsatisfiable { .. }
                | Error::NonFiniteState { .. }
        )
    }
}
