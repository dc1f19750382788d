//! Time-domain simulation of the network and device equations, complex
//! frequency at buses, and jump measurement.
//!
//! States are integrated with the implicit trapezoidal rule; the network
//! equations are solved at every evaluation. Voltage time derivatives are not
//! differentiated numerically: they follow from `Y v' = sum i_dev'` and
//! `Y v'' = sum i_dev''` with the device current derivatives written
//! analytically.

mod dae;
mod integrate;
mod measure;
mod validate;

use thiserror::Error;

pub use dae::{bus_complex_frequency, bus_second_order_cf, oriented_current_jacobian, Injection, Point, PowerSystem};
pub use integrate::{simulate, Event, SimOptions, Trajectory};
pub use measure::{forward_slope, jumps_between, measure_jump, post_event_slopes};
pub use validate::{validate, Row, ValidationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("implicit step to t = {t} did not converge (residual {residual:.3e})")]
    NewtonFailure { t: f64, residual: f64 },
    #[error("network equations are singular")]
    AlgebraicSingularity { t: f64 },
    #[error("network equations did not converge (residual {residual:.3e})")]
    NetworkNonConvergence { residual: f64 },
    #[error("no event recorded at t = {t}")]
    EventNotFound { t: f64 },
    #[error("zero voltage at bus index {bus}")]
    DegenerateVoltage { bus: usize },
    #[error("invalid simulation options: {0}")]
    InvalidOptions(String),
    #[error("jump measurement failed: {0}")]
    Jump(String),
}
