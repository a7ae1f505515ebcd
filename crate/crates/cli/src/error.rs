use std::path::Path;

use thiserror::Error;

/// Process exit status for a completed run.
pub const EXIT_OK: i32 = 0;
/// Bad flags, unreadable or malformed input files.
pub const EXIT_INPUT: i32 = 2;
/// The numerics failed (singular systems, every grid cell failed, ...).
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => EXIT_INPUT,
            Self::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    /// IO failure on `path`; always an input-side problem for this tool.
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Input(format!("{}: {err}", path.display()))
    }
}

impl From<tvnet::Error> for CliError {
    fn from(e: tvnet::Error) -> Self {
        use tvnet::Error as E;
        match e {
            E::DimensionMismatch(_)
            | E::ShapeMismatch(_)
            | E::DegenerateColumn { .. }
            | E::InvalidPair { .. }
            | E::InvalidKnots(_)
            | E::DegenerateMask
            | E::InvalidArgument(_) => Self::Input(e.to_string()),
            E::SingularBlock(_) | E::Singular | E::NotPositiveDefinite | E::NotPd(_) | E::ConstructionFailed(_) | E::AllCellsFailed => {
                Self::Numerical(e.to_string())
            }
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
