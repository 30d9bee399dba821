use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the simulator and fitting routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("static field magnitude is zero; the angle to the defect axis is undefined")]
    DegenerateField,

    #[error("grid point {index} at ({x:e}, {y:e}, {z:e}) m lies on the current loop")]
    Singularity { index: usize, x: f64, y: f64, z: f64 },

    #[error("sample region does not contain any field-map cell")]
    EmptyRegion,

    #[error("no polarized spins in the sample region (zero steady-state polarization)")]
    NoPolarization,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("parameters are not identifiable: {0}")]
    Identifiability(String),

    #[error("sensitivity diverges for zero thermal polarization")]
    DivergentSensitivity,

    #[error("weak-nonlinearity expansion is undefined at zero detuning; evaluate the full ensemble shift instead")]
    ZeroDetuning,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code: 1 for bad input or configuration, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::InvalidArgument(_)
            | Error::Parse { .. }
            | Error::Validation(_)
            | Error::Identifiability(_)
            | Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive, got {value}")))
    }
}
