//! Case ingestion, admittance and impedance matrices, and power flow.
//!
//! The transmission network is a constant admittance matrix; every shunt
//! device (machine, converter, load) interfaces through an injected current,
//! positive into the network, so that `v = Z i_dev`.

mod admittance;
mod case;
mod powerflow;

use thiserror::Error;

use crate::algebra::AlgebraError;

pub use admittance::{admittance_matrix, build_admittance, impedance, Admittance};
pub use case::{parse_case, Base, Branch, Bus, BusKind, CaseError, DeviceSpec, SystemCase};
pub use powerflow::{max_mismatch, scheduled, solve_powerflow, PowerFlowSolution, MAX_ITER, MISMATCH_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error(
        "admittance matrix is singular (condition estimate {condition_estimate:.3e}); \
         the network has no shunt path to ground. Set `embed_zloads` to fold \
         constant-impedance loads into the admittance matrix"
    )]
    SingularNetwork { condition_estimate: f64 },
    #[error("power flow did not converge after {iterations} iterations (max mismatch {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
