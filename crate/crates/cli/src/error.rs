use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid run configuration; `line` is 1-based when known.
    #[error("{}: {message}", location(.path, *.line))]
    Config {
        path: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Core(#[from] supint_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn location(path: &std::path::Path, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("{}:{l}", path.display()),
        None => path.display().to_string(),
    }
}

impl CliError {
    /// Process exit code: 2 validation, 3 unsupported regime, 4 numerical
    /// failure, 1 for I/O and anything else.
    pub fn exit_code(&self) -> i32 {
        use supint_core::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(e) => match e {
                E::InvalidParams(_)
                | E::DimensionMismatch { .. }
                | E::SingularState { .. }
                | E::SingularityProximity { .. }
                | E::IndexOutOfRange { .. }
                | E::InvalidArgument(_)
                | E::Domain(_) => 2,
                E::UnsupportedEnergy { .. } | E::UnsupportedCoupling | E::Unsupported(_) => 3,
                E::NonConvergence { .. }
                | E::SingularityCrossing { .. }
                | E::InconsistentState(_)
                | E::TrajectoryTooShort(_) => 4,
            },
            CliError::Io { .. } | CliError::Serialize(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
