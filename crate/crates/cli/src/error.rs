use std::path::PathBuf;
use thiserror::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_SIZE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration value; `field` names the offending key.
    #[error("config field `{field}`: {message}")]
    Field { field: &'static str, message: String },

    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: cvmaxcut::Error,
    },
}

impl CliError {
    pub fn core(context: impl Into<String>) -> impl FnOnce(cvmaxcut::Error) -> Self {
        let context = context.into();
        move |source| CliError::Core { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } => core_exit_code(source),
            _ => EXIT_CONFIG,
        }
    }
}

/// Maps library errors onto the process exit codes.
pub fn core_exit_code(e: &cvmaxcut::Error) -> i32 {
    use cvmaxcut::Error as E;
    match e {
        E::Sizing { .. } | E::TooLarge { .. } => EXIT_SIZE,
        E::Singular(_) | E::ScalingNotFound { .. } | E::Domain(_) | E::NotUnitary(_) | E::Divergence { .. } => {
            EXIT_NUMERICAL
        }
        // A gate leaving its stable range mid-training is a numerical failure,
        // not a bad input.
        E::Objective { source, .. } => match **source {
            E::OutOfRange { .. } => EXIT_NUMERICAL,
            ref inner => core_exit_code(inner),
        },
        E::InvalidArgument(_)
        | E::DimensionMismatch(_)
        | E::OutOfRange { .. }
        | E::UnsupportedKind(_)
        | E::Degenerate(_)
        | E::NotSymmetric(_)
        | E::InvalidGraph(_) => EXIT_CONFIG,
    }
}
