use std::fmt::Display;
use std::path::Path;

/// Failure of a subcommand. The variant decides the exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input data, configuration or flags (exit 1).
    #[error("{0}")]
    Input(String),
    /// Failure that is not the caller's fault (exit 2).
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn internal(msg: impl Display) -> Self {
        CliError::Internal(msg.to_string())
    }

    pub fn read(path: &Path, err: impl Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Internal(_) => "internal",
        }
    }
}

macro_rules! input_errors {
    ($($t:ty),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        })*
    };
}

input_errors!(
    bld_core::datamodel::DataError,
    bld_core::beliefdyn::DynamicsError,
    bld_core::landscape::LandscapeError,
    bld_core::measures::MeasureError,
    bld_core::events::SpikeError,
    bld_core::comparative::ComparativeError,
    bld_core::synth::SynthError,
);

pub type Result<T, E = CliError> = std::result::Result<T, E>;
