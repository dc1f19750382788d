use num_complex::Complex64;

use super::{BusJump, StrengthBlocks};
use crate::algebra::{mat2_of_complex, projector_re, Mat2};
use crate::deltacalc::{DeltaError, JumpForm};

/// Classical synchronous machine: constant EMF magnitude behind transient
/// reactance, swing equation on the rotor. States `[delta, omega_r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynMachine {
    pub bus: usize,
    /// Mechanical starting time `2H`, s.
    pub m: f64,
    pub d: f64,
    pub ra: f64,
    pub xd1: f64,
    /// Base angular frequency, rad/s.
    pub omega_b: f64,
    pub p_m: f64,
    pub e_q: f64,
}

pub const J: Complex64 = Complex64::new(0.0, 1.0);

impl SynMachine {
    pub const N_STATES: usize = 2;

    pub fn z_source(&self) -> Complex64 {
        Complex64::new(self.ra, self.xd1)
    }

    pub fn emf(&self, x: &[f64]) -> Complex64 {
        Complex64::from_polar(self.e_q, x[0])
    }

    pub fn current(&self, x: &[f64], v: Complex64) -> Complex64 {
        (self.emf(x) - v) / self.z_source()
    }

    pub fn p_e(&self, x: &[f64], v: Complex64) -> f64 {
        (self.emf(x) * self.current(x, v).conj()).re
    }

    pub fn rhs(&self, x: &[f64], v: Complex64, out: &mut [f64]) {
        let slip = x[1] - 1.0;
        out[0] = self.omega_b * slip;
        out[1] = (self.p_m - self.p_e(x, v) - self.d * slip) / self.m;
    }

    pub fn emf_dot(&self, x: &[f64]) -> Complex64 {
        J * self.omega_b * (x[1] - 1.0) * self.emf(x)
    }

    pub fn emf_ddot(&self, x: &[f64], v: Complex64) -> Complex64 {
        let slip = x[1] - 1.0;
        let mut d = [0.0; 2];
        self.rhs(x, v, &mut d);
        self.emf(x) * Complex64::new(-(self.omega_b * slip).powi(2), self.omega_b * d[1])
    }

    pub fn current_dot(&self, x: &[f64], _v: Complex64, vd: Complex64) -> Complex64 {
        (self.emf_dot(x) - vd) / self.z_source()
    }

    pub fn current_ddot(&self, x: &[f64], v: Complex64, _vd: Complex64, vdd: Complex64) -> Complex64 {
        (self.emf_ddot(x, v) - vdd) / self.z_source()
    }

    /// Coefficient of the bus voltage derivatives in the current derivatives.
    pub fn rate_gain(&self) -> Mat2<f64> {
        mat2_of_complex(-self.z_source().inv())
    }

    /// Jump blocks. They do not depend on the snapshot: every relation between
    /// current and voltage of this model is affine with constant coefficients
    /// apart from the electrical power, whose jump is linear in the current jump.
    pub fn blocks(&self, x: &[f64]) -> StrengthBlocks {
        let a = self.rate_gain();
        let e = mat2_of_complex(self.emf(x));
        let e_conj = mat2_of_complex(self.emf(x).conj());
        let a2 = mat2_of_complex(J) * a * e.scale(self.omega_b / self.m) * projector_re() * e_conj * a;
        StrengthBlocks {
            a,
            a1: Mat2::zero(),
            a2,
            b1: a,
            b2: Mat2::zero(),
            c2: a,
        }
    }

    /// Jump of the device current and its derivatives, traced through the
    /// model equations.
    pub fn jump_forms(&self, x: &[f64], bus: &BusJump) -> Result<[JumpForm<f64>; 3], DeltaError> {
        let v = JumpForm::var(0, bus.v);
        let vd = JumpForm::var(1, bus.vd);
        let vdd = JumpForm::var(2, bus.vdd);
        let e = JumpForm::constant(self.emf(x));
        let y = Complex64::new(1.0, 0.0) / self.z_source();
        let i = e.sub(&v).scale(y);
        let slip = x[1] - 1.0;
        let i_dot = JumpForm::constant(self.emf_dot(x)).sub(&vd).scale(y);
        let p_e = e.conj().mul(&i).re();
        let wdot = JumpForm::real(self.p_m - self.d * slip)
            .sub(&p_e)
            .scale(Complex64::new(1.0 / self.m, 0.0));
        let e_ddot = wdot
            .scale(J * self.omega_b)
            .add(&JumpForm::real(-(self.omega_b * slip).powi(2)))
            .mul(&e);
        let i_ddot = e_ddot.sub(&vdd).scale(y);
        Ok([i, i_dot, i_ddot])
    }
}
