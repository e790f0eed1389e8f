//! Error classification for process exit codes and the machine-readable
//! error record printed to stderr.
//!
//! Exit codes: 0 success, 2 validation error (bad input or config), 3
//! numerical-contract failure (a computation refused to certify its result),
//! 4 I/O error.

use kolsphere::harmonics::HarmonicsError;
use kolsphere::numkernels::NumError;
use kolsphere::operators::OperatorsError;
use kolsphere::pseudospectrum::PsError;
use kolsphere::semigroup::SemiError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// One-line JSON record for stderr, so callers can dispatch on failures
    /// without scraping prose.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "message": self.to_string(),
                "exit_code": self.exit_code(),
            }
        })
        .to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<HarmonicsError> for CliError {
    fn from(e: HarmonicsError) -> Self {
        // Every harmonics precondition is an input-domain constraint.
        CliError::Validation(e.to_string())
    }
}

impl From<OperatorsError> for CliError {
    fn from(e: OperatorsError) -> Self {
        match e {
            OperatorsError::NonFinite | OperatorsError::Parse(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<NumError> for CliError {
    fn from(e: NumError) -> Self {
        match e {
            NumError::BadTolerance(_) => CliError::Validation(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<PsError> for CliError {
    fn from(e: PsError) -> Self {
        match e {
            PsError::ZeroAlpha | PsError::BadKappa(_) => CliError::Validation(e.to_string()),
            PsError::Operators(inner) => inner.into(),
            PsError::Num(inner) => inner.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<SemiError> for CliError {
    fn from(e: SemiError) -> Self {
        match e {
            SemiError::BadTimeGrid
            | SemiError::BadGridScales(_, _)
            | SemiError::BadScalingInput
            | SemiError::BadTransientInput
            | SemiError::ZetaAtKernel
            | SemiError::ZetaOutsideHalfPlane(_) => CliError::Validation(e.to_string()),
            SemiError::Operators(inner) => inner.into(),
            SemiError::Num(inner) => inner.into(),
            SemiError::Ps(inner) => inner.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
