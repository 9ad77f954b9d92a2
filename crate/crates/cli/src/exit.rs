use std::process::ExitCode;

use strainmap_core::Error as CoreError;
use thiserror::Error;

/// Failures with a fixed exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// The inputs are well formed but outside the regime or fail validation.
    #[error("{0}")]
    Regime(String),
}

pub const OK: u8 = 0;
pub const USAGE: u8 = 2;
pub const REGIME: u8 = 3;
pub const NUMERIC: u8 = 4;

fn core_code(e: &CoreError) -> u8 {
    match e {
        CoreError::InvalidInput(_)
        | CoreError::Io(_)
        | CoreError::Json(_)
        | CoreError::DimensionMismatch { .. }
        | CoreError::IncompatibleModels
        | CoreError::OutOfDomain(_)
        | CoreError::NotInChart { .. } => USAGE,
        CoreError::Parse { .. } | CoreError::Validation(_) => REGIME,
        CoreError::DegenerateVertex
        | CoreError::NoTriangle { .. }
        | CoreError::EmptyDomain
        | CoreError::ZeroVector
        | CoreError::StrainerNotFound(_)
        | CoreError::TransportQualityFail { .. } => NUMERIC,
    }
}

pub fn code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CliError>() {
            return match e {
                CliError::Usage(_) => USAGE,
                CliError::Regime(_) => REGIME,
            };
        }
        if let Some(e) = cause.downcast_ref::<CoreError>() {
            return core_code(e);
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return USAGE;
        }
    }
    NUMERIC
}

pub fn report(err: &anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(code(err))
}
