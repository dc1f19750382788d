use thiserror::Error;

use crate::algebra::AlgebraError;
use crate::deltacalc::DeltaError;
use crate::devices::DeviceError;
use crate::network::{CaseError, NetworkError};
use crate::simulator::SimError;
use crate::strength::StrengthError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Strength(#[from] StrengthError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Delta(#[from] DeltaError),
    #[error("{0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code: 2 input, 3 numerical, 4 convergence, 1 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Case(CaseError::Io { .. }) | Error::Io { .. } => 1,
            Error::Case(_) | Error::Config(_) => 2,
            Error::Network(NetworkError::NonConvergence { .. })
            | Error::Sim(SimError::NewtonFailure { .. })
            | Error::Sim(SimError::NetworkNonConvergence { .. })
            | Error::Strength(StrengthError::FixedPointDivergence(_)) => 4,
            _ => 3,
        }
    }
}
