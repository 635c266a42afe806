use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum SldgError {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A run configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    /// The characteristic tracer produced a non-finite state.
    #[error("tracer diverged: non-finite state while tracing from t={t_from} to t={t_to}")]
    TracerDiverged { t_from: f64, t_to: f64 },

    /// Traced cell endpoints crossed: the upstream interval collapsed or
    /// reversed orientation, so the horizon exceeded the first
    /// characteristic-crossing time.
    #[error(
        "characteristic crossing: upstream interval of cell {cell} has \
         non-positive length ({x_left} >= {x_right})"
    )]
    CharacteristicCrossing { cell: usize, x_left: f64, x_right: f64 },

    /// A dense matrix that must be invertible was numerically singular.
    #[error("internal error: singular matrix in {context}")]
    SingularMatrix { context: &'static str },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SldgError>;

impl SldgError {
    /// Process exit code used by the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SldgError::InvalidArgument(_) | SldgError::Config(_) => 2,
            SldgError::TracerDiverged { .. }
            | SldgError::CharacteristicCrossing { .. }
            | SldgError::SingularMatrix { .. } => 3,
            SldgError::Io(_) => 1,
        }
    }
}
