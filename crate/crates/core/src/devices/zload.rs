use num_complex::Complex64;

use super::{BusJump, StrengthBlocks};
use crate::algebra::{mat2_of_complex, Mat2};
use crate::deltacalc::JumpForm;

/// Constant shunt impedance, `v + z i_dev = 0`. Stateless.
#[derive(Debug, Clone, PartialEq)]
pub struct ZLoad {
    pub bus: usize,
    pub z: Complex64,
}

impl ZLoad {
    /// Impedance drawing `s_load` at voltage magnitude `v`.
    pub fn sized(bus: usize, v: f64, s_load: Complex64) -> Self {
        Self {
            bus,
            z: Complex64::new(v * v, 0.0) / s_load.conj(),
        }
    }

    pub fn admittance(&self) -> Complex64 {
        self.z.inv()
    }

    pub fn current(&self, v: Complex64) -> Complex64 {
        -v / self.z
    }

    pub fn rate_gain(&self) -> Mat2<f64> {
        mat2_of_complex(-self.admittance())
    }

    pub fn blocks(&self) -> StrengthBlocks {
        let a = self.rate_gain();
        StrengthBlocks {
            a,
            a1: Mat2::zero(),
            a2: Mat2::zero(),
            b1: a,
            b2: Mat2::zero(),
            c2: a,
        }
    }

    pub fn jump_forms(&self, bus: &BusJump) -> [JumpForm<f64>; 3] {
        let y = -self.admittance();
        [
            JumpForm::var(0, bus.v).scale(y),
            JumpForm::var(1, bus.vd).scale(y),
            JumpForm::var(2, bus.vdd).scale(y),
        ]
    }
}
