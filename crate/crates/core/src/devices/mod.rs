//! Shunt device models.
//!
//! Each device injects a current into its bus (positive into the network)
//! and provides:
//! - state derivatives for time-domain simulation,
//! - the injected current and its first two time derivatives,
//! - the six jump blocks relating jumps of the current and its derivatives
//!   to jumps of the bus voltage and its derivatives:
//!
//! ```text
//! di    = a  dv
//! di'   = a1 dv + b1 dv'
//! di''  = a2 dv + b2 dv' + c2 dv''
//! ```

mod gfl;
mod sm;
mod zload;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::Mat2;
use crate::deltacalc::{DeltaError, Jump, JumpForm};
use crate::network::{DeviceSpec, PowerFlowSolution, SystemCase};

pub use gfl::Gfl;
pub use sm::SynMachine;
pub use zload::ZLoad;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("power flow is inconsistent with the attached devices at bus {bus} (residual {residual:.3e})")]
    InconsistentPowerFlow { bus: u32, residual: f64 },
    #[error("zero voltage at bus index {bus}")]
    DegenerateVoltage { bus: usize },
    #[error("zero converter current at bus index {bus}")]
    DegenerateCurrent { bus: usize },
    #[error("impedance load at bus {bus} has no load power to size it")]
    ZeroLoad { bus: u32 },
    #[error(transparent)]
    Delta(#[from] DeltaError),
}

/// Which expressions to use for converter jump blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockForm {
    /// Closed-form expressions with the small terms neglected.
    #[default]
    Boxed,
    /// Blocks traced through the full model equations.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StrengthBlocks {
    pub a: Mat2<f64>,
    pub a1: Mat2<f64>,
    pub a2: Mat2<f64>,
    pub b1: Mat2<f64>,
    pub b2: Mat2<f64>,
    pub c2: Mat2<f64>,
}

impl StrengthBlocks {
    pub fn from_jump_forms(f: &[JumpForm<f64>; 3]) -> Self {
        Self {
            a: f[0].l[0],
            a1: f[1].l[0],
            b1: f[1].l[1],
            a2: f[2].l[0],
            b2: f[2].l[1],
            c2: f[2].l[2],
        }
    }

    pub fn as_array(&self) -> [Mat2<f64>; 6] {
        [self.a, self.a1, self.a2, self.b1, self.b2, self.c2]
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.as_array()
            .iter()
            .zip(o.as_array())
            .map(|(x, y)| (*x - y).max_abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Add for StrengthBlocks {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            a: self.a + o.a,
            a1: self.a1 + o.a1,
            a2: self.a2 + o.a2,
            b1: self.b1 + o.b1,
            b2: self.b2 + o.b2,
            c2: self.c2 + o.c2,
        }
    }
}

/// Bus voltage and its first two time derivatives on both sides of an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusJump {
    pub v: Jump<Complex64>,
    pub vd: Jump<Complex64>,
    pub vdd: Jump<Complex64>,
}

impl BusJump {
    /// No jump at a point with the given voltage and derivatives.
    pub fn at(v: Complex64, vd: Complex64, vdd: Complex64) -> Self {
        Self {
            v: Jump::constant(v),
            vd: Jump::constant(vd),
            vdd: Jump::constant(vdd),
        }
    }

    pub fn deltas(&self) -> [Complex64; 3] {
        [self.v.delta(), self.vd.delta(), self.vdd.delta()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Device {
    Sm(SynMachine),
    Gfl(Gfl),
    ZLoad(ZLoad),
}

impl Device {
    pub fn bus(&self) -> usize {
        match self {
            Device::Sm(d) => d.bus,
            Device::Gfl(d) => d.bus,
            Device::ZLoad(d) => d.bus,
        }
    }

    pub fn n_states(&self) -> usize {
        match self {
            Device::Sm(_) => SynMachine::N_STATES,
            Device::Gfl(_) => Gfl::N_STATES,
            Device::ZLoad(_) => 0,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Device::Sm(_) => "sm2",
            Device::Gfl(_) => "gfl",
            Device::ZLoad(_) => "zload",
        }
    }

    pub fn current(&self, x: &[f64], v: Complex64) -> Complex64 {
        match self {
            Device::Sm(d) => d.current(x, v),
            Device::Gfl(d) => d.current(x, v),
            Device::ZLoad(d) => d.current(v),
        }
    }

    /// State derivatives given the bus voltage and its time derivative.
    pub fn rhs(&self, x: &[f64], v: Complex64, vd: Complex64, out: &mut [f64]) {
        match self {
            Device::Sm(d) => d.rhs(x, v, out),
            Device::Gfl(d) => d.rhs(x, v, vd, out),
            Device::ZLoad(_) => {}
        }
    }

    pub fn current_dot(&self, x: &[f64], v: Complex64, vd: Complex64) -> Complex64 {
        match self {
            Device::Sm(d) => d.current_dot(x, v, vd),
            Device::Gfl(d) => d.current_dot(x, v, vd),
            Device::ZLoad(d) => -vd / d.z,
        }
    }

    pub fn current_ddot(&self, x: &[f64], v: Complex64, vd: Complex64, vdd: Complex64) -> Complex64 {
        match self {
            Device::Sm(d) => d.current_ddot(x, v, vd, vdd),
            Device::Gfl(d) => d.current_ddot(x, v, vd, vdd),
            Device::ZLoad(d) => -vdd / d.z,
        }
    }

    /// `G` such that `i_dev' = G v' + f(x, v)` and `i_dev'' = G v'' + g(x, v, v')`.
    pub fn rate_gain(&self, x: &[f64], v: Complex64) -> Mat2<f64> {
        match self {
            Device::Sm(d) => d.rate_gain(),
            Device::Gfl(d) => d.rate_gain(x, v),
            Device::ZLoad(d) => d.rate_gain(),
        }
    }

    pub fn jump_forms(&self, x: &[f64], bus: &BusJump) -> Result<[JumpForm<f64>; 3], DeviceError> {
        Ok(match self {
            Device::Sm(d) => d.jump_forms(x, bus)?,
            Device::Gfl(d) => d.jump_forms(x, bus)?,
            Device::ZLoad(d) => d.jump_forms(bus),
        })
    }

    pub fn blocks(&self, x: &[f64], bus: &BusJump, form: BlockForm) -> Result<StrengthBlocks, DeviceError> {
        match (self, form) {
            (Device::Sm(d), _) => Ok(d.blocks(x)),
            (Device::ZLoad(d), _) => Ok(d.blocks()),
            (Device::Gfl(d), BlockForm::Boxed) => d.boxed_blocks(x, bus),
            (Device::Gfl(d), BlockForm::Exact) => {
                Ok(StrengthBlocks::from_jump_forms(&d.jump_forms(x, bus)?))
            }
        }
    }
}

/// Devices with their state layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSet {
    pub devices: Vec<Device>,
    pub offsets: Vec<usize>,
    pub n_states: usize,
}

impl DeviceSet {
    pub fn new(devices: Vec<Device>) -> Self {
        let mut offsets = Vec::with_capacity(devices.len());
        let mut n = 0;
        for d in &devices {
            offsets.push(n);
            n += d.n_states();
        }
        Self {
            devices,
            offsets,
            n_states: n,
        }
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Device, std::ops::Range<usize>)> {
        self.devices
            .iter()
            .zip(&self.offsets)
            .map(|(d, &o)| (d, o..o + d.n_states()))
    }

    pub fn has_converters(&self) -> bool {
        self.devices.iter().any(|d| matches!(d, Device::Gfl(_)))
    }
}

/// Devices sized from a power flow solution.
#[derive(Debug, Clone, PartialEq)]
pub struct InitializedDevices {
    pub set: DeviceSet,
    pub x0: Vec<f64>,
    /// Loads folded into the admittance matrix: `(bus index, admittance)`.
    pub embedded: Vec<(usize, Complex64)>,
}

/// Sizes every device so that the power flow operating point is an equilibrium.
/// Generation at a bus is the net injection plus the bus load; loads become
/// impedances drawing the scheduled load at the solved voltage.
pub fn init_devices(case: &SystemCase, pf: &PowerFlowSolution) -> Result<InitializedDevices, DeviceError> {
    let omega_b = case.omega_b();
    let v = pf.voltages();
    let mut devices = Vec::new();
    let mut x0 = Vec::new();
    let mut embedded = Vec::new();
    for spec in &case.devices {
        let k = case.bus_index(spec.bus()).expect("validated device bus");
        let bus = &case.buses[k];
        let s_load = Complex64::new(bus.p_load, bus.q_load);
        let s_gen = pf.injection(k) + s_load;
        let i_gen = (s_gen / v[k]).conj();
        match spec {
            DeviceSpec::Sm2 { m, d, ra, xd1, .. } => {
                let mut sm = SynMachine {
                    bus: k,
                    m: *m,
                    d: *d,
                    ra: *ra,
                    xd1: *xd1,
                    omega_b,
                    p_m: 0.0,
                    e_q: 0.0,
                };
                let e = v[k] + sm.z_source() * i_gen;
                sm.e_q = e.norm();
                sm.p_m = (e * i_gen.conj()).re;
                x0.extend([e.arg(), 1.0]);
                devices.push(Device::Sm(sm));
            }
            DeviceSpec::Gfl {
                t, tf, r, omega_ref, ..
            } => {
                let i = s_gen.conj() / v[k].norm();
                let xp = (1.0 - omega_ref) / r;
                x0.extend([i.re, i.im, xp]);
                devices.push(Device::Gfl(Gfl {
                    bus: k,
                    t: *t,
                    tf: *tf,
                    r: *r,
                    omega_ref: *omega_ref,
                    omega_b,
                    s_ref0: s_gen - xp,
                }));
            }
            DeviceSpec::Zload { bus: id } => {
                if s_load.norm() == 0.0 {
                    return Err(DeviceError::ZeroLoad { bus: *id });
                }
                let zl = ZLoad::sized(k, v[k].norm(), s_load);
                if case.embed_zloads {
                    embedded.push((k, zl.admittance()));
                } else {
                    devices.push(Device::ZLoad(zl));
                }
            }
        }
    }
    let set = DeviceSet::new(devices);

    let mut y = crate::network::admittance_matrix(case);
    for (k, ysh) in &embedded {
        y.add_shunt(*k, *ysh);
    }
    let mut resid = y.currents(&v);
    for (d, r) in set.iter() {
        resid[d.bus()] -= d.current(&x0[r], v[d.bus()]);
    }
    for (k, r) in resid.iter().enumerate() {
        if r.norm() > 1e-8 {
            return Err(DeviceError::InconsistentPowerFlow {
                bus: case.buses[k].id,
                residual: r.norm(),
            });
        }
    }
    Ok(InitializedDevices { set, x0, embedded })
}
