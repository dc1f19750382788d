//! Strength matrices and jump predictions.
//!
//! A step current `di_pq` injected at a bus, expressed in the frame of that
//! bus's post-event voltage, produces jumps of every bus voltage and of its
//! first and second order complex frequencies. The strength matrices map the
//! injection to those jumps:
//!
//! ```text
//! [dv/v~, 2 tan(dtheta/2)] = S   di_pq
//! [d rho, d omega]         = S'  di_pq
//! [d sigma, d gamma]       = S'' di_pq
//! ```
//!
//! The expressions are exact given the pre- and post-event operating points,
//! which [`solve_post_state`] computes without time-domain simulation.

mod chain;
mod post;
mod report;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{ClarkeVec, Mat2};
use crate::devices::{BlockForm, BusJump, DeviceError};
use crate::simulator::{Injection, Point, PowerSystem, SimError};

pub use chain::{assemble_device_blocks, strength_matrices, zeq_chain, DeviceBlockMatrices, ZeqChain};
pub use post::solve_post_state;
pub use report::{normalize_report, sweep, NormalizedReport, OrderTable, ORDER_NAMES, INDICATOR_NAMES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrengthError {
    #[error("resolvent of order {0} is singular")]
    SingularResolvent(u8),
    #[error("post-event operating point not found: {0}")]
    FixedPointDivergence(String),
    #[error("network equations are singular at the post-event point")]
    SingularAlgebraicSystem,
    #[error("zero mean voltage at bus index {bus}")]
    DegenerateVoltage { bus: usize },
    #[error("jump outside the representable range: {0}")]
    JumpTooLarge(String),
    #[error("bus index {0} out of range")]
    UnknownBus(usize),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

impl From<SimError> for StrengthError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::AlgebraicSingularity { .. } => StrengthError::SingularAlgebraicSystem,
            SimError::DegenerateVoltage { bus } => StrengthError::DegenerateVoltage { bus },
            other => StrengthError::FixedPointDivergence(other.to_string()),
        }
    }
}

/// Step current at a bus, in the frame of the bus voltage right after the step.
/// `i_pq` is positive into the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    /// Bus index in case ordering.
    pub bus: usize,
    pub i_pq: Complex64,
}

impl Disturbance {
    pub fn injected(bus: usize, ip: f64, iq: f64) -> Self {
        Self {
            bus,
            i_pq: Complex64::new(ip, iq),
        }
    }

    /// Current drawn from the bus: active `ip` and reactive `iq`.
    pub fn drawn(bus: usize, ip: f64, iq: f64) -> Self {
        Self {
            bus,
            i_pq: -Complex64::new(ip, iq),
        }
    }

    pub fn vector(&self) -> ClarkeVec<f64> {
        ClarkeVec::from_complex(self.i_pq)
    }
}

/// Operating points on both sides of a step injection. States are shared.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub minus: Point,
    pub plus: Point,
    pub disturbance: Disturbance,
    /// The disturbance as a fixed phasor after the step.
    pub injected: Complex64,
}

impl Snapshot {
    pub fn n(&self) -> usize {
        self.minus.v.len()
    }

    pub fn bus_jump(&self, k: usize) -> BusJump {
        use crate::deltacalc::Jump;
        BusJump {
            v: Jump::new(self.minus.v[k], self.plus.v[k]),
            vd: Jump::new(self.minus.vd[k], self.plus.vd[k]),
            vdd: Jump::new(self.minus.vdd[k], self.plus.vdd[k]),
        }
    }

    pub fn states(&self) -> &[f64] {
        &self.minus.x
    }
}

/// Jumps at one bus: `[dv/v~, 2 tan(dtheta/2)]`, `[d rho, d omega]`, `[d sigma, d gamma]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JumpSet {
    pub v_theta: ClarkeVec<f64>,
    pub eta1: ClarkeVec<f64>,
    pub eta2: ClarkeVec<f64>,
}

impl JumpSet {
    /// `(dv, dtheta)` given the pre-event magnitude.
    pub fn voltage_jumps(&self, v_minus: f64) -> (f64, f64) {
        crate::deltacalc::jumps_from_coords(v_minus, self.v_theta)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        (self.v_theta - o.v_theta)
            .max_abs()
            .max((self.eta1 - o.eta1).max_abs())
            .max((self.eta2 - o.eta2).max_abs())
    }
}

/// Diagonal blocks of the three strength matrices at one bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusIndicators {
    pub bus: u32,
    /// `[[S_vip, S_viq], [S_thetaip, S_thetaiq]]`.
    pub zero: Mat2<f64>,
    /// `[[S_rhoip, S_rhoiq], [S_omegaip, S_omegaiq]]`.
    pub first: Mat2<f64>,
    /// `[[S_sigmaip, S_sigmaiq], [S_gammaip, S_gammaiq]]`.
    pub second: Mat2<f64>,
}

impl BusIndicators {
    pub fn order(&self, order: usize) -> [f64; 4] {
        let m = match order {
            0 => self.zero,
            1 => self.first,
            _ => self.second,
        };
        [m.m11, m.m12, m.m21, m.m22]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrengthResult {
    pub bus_ids: Vec<u32>,
    pub s: crate::algebra::BlockMatrix<f64>,
    pub s1: crate::algebra::BlockMatrix<f64>,
    pub s2: crate::algebra::BlockMatrix<f64>,
}

impl StrengthResult {
    pub fn indicators(&self, k: usize) -> BusIndicators {
        BusIndicators {
            bus: self.bus_ids[k],
            zero: self.s.block(k, k),
            first: self.s1.block(k, k),
            second: self.s2.block(k, k),
        }
    }

    pub fn all_indicators(&self) -> Vec<BusIndicators> {
        (0..self.bus_ids.len()).map(|k| self.indicators(k)).collect()
    }
}

/// Predicted jumps at every bus for an injection `i_pq` at bus `bus`.
pub fn predict_jump(result: &StrengthResult, bus: usize, i_pq: Complex64) -> Result<Vec<JumpSet>, StrengthError> {
    let n = result.bus_ids.len();
    if bus >= n {
        return Err(StrengthError::UnknownBus(bus));
    }
    let i = ClarkeVec::from_complex(i_pq);
    Ok((0..n)
        .map(|k| JumpSet {
            v_theta: result.s.block(k, bus) * i,
            eta1: result.s1.block(k, bus) * i,
            eta2: result.s2.block(k, bus) * i,
        })
        .collect())
}

/// Everything computed for one disturbance.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub snapshot: Snapshot,
    pub blocks: DeviceBlockMatrices,
    pub chain: ZeqChain,
    pub result: StrengthResult,
}

impl Analysis {
    pub fn predict(&self) -> Result<Vec<JumpSet>, StrengthError> {
        predict_jump(&self.result, self.snapshot.disturbance.bus, self.snapshot.disturbance.i_pq)
    }
}

/// Strength matrices for a disturbance applied at the initial equilibrium.
pub fn analyze(sys: &PowerSystem, dist: Disturbance, form: BlockForm) -> Result<Analysis, StrengthError> {
    if dist.bus >= sys.n() {
        return Err(StrengthError::UnknownBus(dist.bus));
    }
    let pre = sys.point(0.0, &sys.x0, &sys.v0)?;
    analyze_from(sys, &pre, &[], dist, form)
}

/// Strength matrices for a disturbance applied at an arbitrary point, with
/// `existing` injections already acting on the network.
pub fn analyze_from(
    sys: &PowerSystem,
    pre: &Point,
    existing: &[Injection],
    dist: Disturbance,
    form: BlockForm,
) -> Result<Analysis, StrengthError> {
    let snapshot = solve_post_state(sys, pre, existing, dist)?;
    let blocks = assemble_device_blocks(sys, &snapshot, form)?;
    let chain = zeq_chain(&sys.z, &blocks)?;
    let result = strength_matrices(sys, &snapshot, &chain)?;
    Ok(Analysis {
        snapshot,
        blocks,
        chain,
        result,
    })
}
