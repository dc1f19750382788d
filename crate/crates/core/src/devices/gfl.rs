use num_complex::Complex64;

use super::{BusJump, DeviceError, StrengthBlocks};
use crate::algebra::{mat2_of_complex, projector_im, projector_re, Mat2};
use crate::deltacalc::{DeltaError, JumpForm};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Grid-following converter. The current `i` is held in a frame aligned with
/// the bus voltage and tracks `conj(s_ref)/|v|` with time constant `t`; a
/// frequency droop state `x_p` adds to the active power reference.
/// States `[i_d, i_q, x_p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gfl {
    pub bus: usize,
    pub t: f64,
    pub tf: f64,
    pub r: f64,
    /// Frequency reference, pu.
    pub omega_ref: f64,
    pub omega_b: f64,
    pub s_ref0: Complex64,
}

impl Gfl {
    pub const N_STATES: usize = 3;

    pub fn i_dq(&self, x: &[f64]) -> Complex64 {
        Complex64::new(x[0], x[1])
    }

    pub fn s_ref(&self, x: &[f64]) -> Complex64 {
        self.s_ref0 + x[2]
    }

    pub fn current(&self, x: &[f64], v: Complex64) -> Complex64 {
        self.i_dq(x) * v / v.norm()
    }

    pub fn i_ref(&self, x: &[f64], v: Complex64) -> Complex64 {
        self.s_ref(x).conj() / v.norm()
    }

    fn i_dot(&self, x: &[f64], v: Complex64) -> Complex64 {
        (self.i_ref(x, v) - self.i_dq(x)) / self.t
    }

    fn xp_dot(&self, x: &[f64], theta_dot: f64) -> f64 {
        let w = 1.0 + theta_dot / self.omega_b;
        ((w - self.omega_ref) / self.r - x[2]) / self.tf
    }

    pub fn rhs(&self, x: &[f64], v: Complex64, vd: Complex64, out: &mut [f64]) {
        let id = self.i_dot(x, v);
        out[0] = id.re;
        out[1] = id.im;
        out[2] = self.xp_dot(x, (vd / v).im);
    }

    pub fn current_dot(&self, x: &[f64], v: Complex64, vd: Complex64) -> Complex64 {
        let u = v / v.norm();
        let thd = (vd / v).im;
        u * (self.i_dot(x, v) + J * thd * self.i_dq(x))
    }

    pub fn current_ddot(&self, x: &[f64], v: Complex64, vd: Complex64, vdd: Complex64) -> Complex64 {
        let u = v / v.norm();
        let eta1 = vd / v;
        let (rho, thd) = (eta1.re, eta1.im);
        let thdd = (vdd / v - eta1 * eta1).im;
        let i = self.i_dq(x);
        let idot = self.i_dot(x, v);
        let iref_dot = (self.xp_dot(x, thd) - self.s_ref(x).conj() * rho) / v.norm();
        let iddot = (iref_dot - idot) / self.t;
        u * (iddot + J * thdd * i + 2.0 * J * thd * idot - thd * thd * i)
    }

    /// Coefficient of the bus voltage derivatives in the current derivatives.
    pub fn rate_gain(&self, x: &[f64], v: Complex64) -> Mat2<f64> {
        let u = v / v.norm();
        mat2_of_complex(J * self.i_dq(x) * u) * projector_im() * mat2_of_complex(v.inv())
    }

    /// The closed-form blocks obtained after neglecting the terms proportional
    /// to the tracking error and to the mean first-order complex frequency.
    pub fn boxed_blocks(&self, x: &[f64], bus: &BusJump) -> Result<StrengthBlocks, DeviceError> {
        let mag = bus.v.map(|z| Complex64::new(z.norm(), 0.0));
        let (vm, vp) = (mag.minus.re, mag.plus.re);
        if vm == 0.0 || vp == 0.0 {
            return Err(DeviceError::DegenerateVoltage { bus: self.bus });
        }
        let v_tilde = 0.5 * (vm + vp);
        let v_hat2 = vm * vp;
        let e_mean = 0.5 * (bus.v.minus / vm + bus.v.plus / vp);
        let e = mat2_of_complex(e_mean);
        let e_inv = e.try_inverse().map_err(|_| DeviceError::DegenerateVoltage { bus: self.bus })?;
        let v_vec_inv = mat2_of_complex(bus.v.arith_mean())
            .try_inverse()
            .map_err(|_| DeviceError::DegenerateVoltage { bus: self.bus })?;
        let i = self.i_dq(x);
        let im = mat2_of_complex(i);
        let s = self.s_ref(x);
        let q = Mat2::diag(0.0, 1.0);
        let p_re = projector_re();

        let a = im * e * q * e_inv.scale(1.0 / v_tilde);
        let b1 = im * e * q * v_vec_inv;
        let a1 = (e * Mat2::diag(-1.0, 1.0) * e_inv * mat2_of_complex(s) * p_re * e_inv)
            .scale(1.0 / (self.t * v_hat2));
        let s_conj2 = mat2_of_complex(s.conj() * s.conj());
        let a2 = if s == Complex64::new(0.0, 0.0) {
            Mat2::zero()
        } else {
            let i_inv = im
                .try_inverse()
                .map_err(|_| DeviceError::DegenerateCurrent { bus: self.bus })?;
            (e * i_inv * s_conj2 * p_re * e_inv)
                .scale(v_tilde / (self.t * self.t * v_hat2 * v_hat2))
        };
        // droop acts on omega in pu, hence 1/omega_b
        let b2 = (e
            * (projector_im().scale(1.0 / (self.tf * self.r * self.omega_b)) - mat2_of_complex(s.conj()) * p_re)
            * e_inv)
            .scale(1.0 / (self.t * v_hat2));
        Ok(StrengthBlocks {
            a,
            a1,
            a2,
            b1,
            b2,
            c2: b1,
        })
    }

    /// Jump of the device current and its derivatives, traced through the
    /// model equations without simplification.
    pub fn jump_forms(&self, x: &[f64], bus: &BusJump) -> Result<[JumpForm<f64>; 3], DeltaError> {
        let one = Complex64::new(1.0, 0.0);
        let v = JumpForm::var(0, bus.v);
        let vd = JumpForm::var(1, bus.vd);
        let vdd = JumpForm::var(2, bus.vdd);
        let i = JumpForm::constant(self.i_dq(x));
        let s_conj = JumpForm::constant(self.s_ref(x).conj());
        let inv_mag = v.abs()?.recip()?;
        let u = v.mul(&inv_mag);
        let i_dev = i.mul(&u);

        let inv_v = v.recip()?;
        let eta1 = vd.mul(&inv_v);
        let thd = eta1.im();
        let rho = eta1.re();
        let i_ref = s_conj.mul(&inv_mag);
        let idot = i_ref.sub(&i).scale(one / self.t);
        let i_dev_dot = u.mul(&idot.add(&thd.mul(&i).scale(J)));

        let eta2 = vdd.mul(&inv_v);
        let thdd = eta2.sub(&eta1.mul(&eta1)).im();
        let xp_dot = JumpForm::real(1.0 - self.omega_ref)
            .add(&thd.scale(one / self.omega_b))
            .scale(one / self.r)
            .sub(&JumpForm::real(x[2]))
            .scale(one / self.tf);
        let i_ref_dot = xp_dot.sub(&s_conj.mul(&rho)).mul(&inv_mag);
        let iddot = i_ref_dot.sub(&idot).scale(one / self.t);
        let inner = iddot
            .add(&thdd.mul(&i).scale(J))
            .add(&thd.mul(&idot).scale(2.0 * J))
            .sub(&thd.mul(&thd).mul(&i));
        let i_dev_ddot = u.mul(&inner);
        Ok([i_dev, i_dev_dot, i_dev_ddot])
    }
}
