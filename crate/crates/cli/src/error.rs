use std::fmt::Display;

use rpsquash::control::ControlError;
use rpsquash::oracle::OracleError;
use rpsquash::spectra::SpectraError;
use thiserror::Error;

/// Exit status for each failure class.
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_COMPARISON: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Config { path: String, message: String },
    #[error("[{section}] {message}")]
    Section { section: &'static str, message: String },
    #[error("`{0}` needs a [filter] section")]
    MissingFilter(&'static str),
    #[error("`{0}` needs a [simulation] section")]
    MissingSimulation(&'static str),
    #[error("unknown sweep parameter `{0}`; expected one of eta, kappa_out, kappa_loss, filter.gain")]
    UnknownParameter(String),
    #[error("squeeze factor must lie strictly between 0 and 1, got {0}")]
    InvalidSqueezeFactor(f64),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("feedback loop is unstable")]
    Unstable,
    #[error("oracle comparison failed: {0}")]
    ComparisonFailed(String),
}

impl CliError {
    pub fn section(section: &'static str, err: impl Display) -> Self {
        CliError::Section {
            section,
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Spectra(e) => spectra_code(e),
            CliError::Control(e) => control_code(e),
            CliError::Oracle(e) => match e {
                OracleError::UnstableLoop(_) | OracleError::DivergenceDetected { .. } => EXIT_NUMERICAL,
                OracleError::Control(e) => control_code(e),
                OracleError::Spectra(e) => spectra_code(e),
                _ => EXIT_VALIDATION,
            },
            CliError::Unstable => EXIT_NUMERICAL,
            CliError::ComparisonFailed(_) => EXIT_COMPARISON,
            _ => EXIT_VALIDATION,
        }
    }
}

fn spectra_code(e: &SpectraError) -> u8 {
    match e {
        SpectraError::DegenerateDenominator { .. } | SpectraError::GridMismatch => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

fn control_code(e: &ControlError) -> u8 {
    match e {
        ControlError::NumericalRootFailure { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}
