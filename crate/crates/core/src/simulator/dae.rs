use num_complex::Complex64;

use super::SimError;
use crate::algebra::{mat2_of_complex, projector_re, BlockMatrix, ComplexFrequency, ComplexFrequency2, Lu, Mat2};
use crate::devices::{init_devices, Device, DeviceSet};
use crate::network::{admittance_matrix, impedance, solve_powerflow, Admittance, PowerFlowSolution, SystemCase};
use crate::Error;

const NET_TOL: f64 = 1e-13;
const NET_FAIL_TOL: f64 = 1e-10;
const NET_MAX_ITER: usize = 30;

/// A current injected at a bus. When `oriented`, `current` is expressed in a
/// frame aligned with the bus voltage; otherwise it is a fixed phasor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Injection {
    pub bus: usize,
    pub current: Complex64,
    pub oriented: bool,
}

impl Injection {
    pub fn value(&self, v: &[Complex64]) -> Complex64 {
        if self.oriented {
            let vk = v[self.bus];
            self.current * vk / vk.norm()
        } else {
            self.current
        }
    }

    /// The equivalent fixed phasor at voltage `v`.
    pub fn frozen(&self, v: &[Complex64]) -> Injection {
        Injection {
            bus: self.bus,
            current: self.value(v),
            oriented: false,
        }
    }

    fn jacobian(&self, v: &[Complex64]) -> Mat2<f64> {
        if !self.oriented {
            return Mat2::zero();
        }
        oriented_current_jacobian(self.current, v[self.bus])
    }
}

/// Derivative of `c v/|v|` with respect to `v`.
pub fn oriented_current_jacobian(c: Complex64, v: Complex64) -> Mat2<f64> {
    let m = v.norm();
    mat2_of_complex(c / m) - mat2_of_complex(c * v / (m * m * m)) * projector_re() * mat2_of_complex(v.conj())
}

fn device_jacobian(d: &Device, x: &[f64], v: Complex64) -> Mat2<f64> {
    match d {
        Device::Gfl(g) => oriented_current_jacobian(g.i_dq(x), v),
        _ => d.rate_gain(x, v),
    }
}

/// Bus voltages and their first two time derivatives at an instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<Complex64>,
    pub vd: Vec<Complex64>,
    pub vdd: Vec<Complex64>,
}

impl Point {
    /// `v'/v` at bus `k`: `rho` in 1/s, `omega` as deviation from the fundamental in rad/s.
    pub fn eta1(&self, k: usize) -> ComplexFrequency<f64> {
        ComplexFrequency::from_complex(self.vd[k] / self.v[k])
    }

    /// `v''/v` at bus `k`.
    pub fn eta2(&self, k: usize) -> ComplexFrequency2<f64> {
        ComplexFrequency2::from_complex(self.vdd[k] / self.v[k])
    }

    pub fn magnitude(&self, k: usize) -> f64 {
        self.v[k].norm()
    }

    pub fn angle(&self, k: usize) -> f64 {
        self.v[k].arg()
    }
}

/// Network, devices and the equilibrium they start from.
#[derive(Debug, Clone)]
pub struct PowerSystem {
    pub case: SystemCase,
    pub powerflow: PowerFlowSolution,
    pub y: Admittance,
    pub y_blocks: BlockMatrix<f64>,
    pub z: BlockMatrix<f64>,
    pub devices: DeviceSet,
    pub x0: Vec<f64>,
    pub v0: Vec<Complex64>,
    /// Constant factorization of `Y - sum G` when no device has a voltage-dependent gain.
    rate_lu: Option<Lu<f64>>,
}

impl PowerSystem {
    /// Runs the power flow, sizes the devices and settles the initial point to
    /// an exact equilibrium of the device and network equations.
    pub fn from_case(case: &SystemCase) -> Result<Self, Error> {
        let pf = solve_powerflow(case)?;
        let init = init_devices(case, &pf)?;
        let mut y = admittance_matrix(case);
        for (k, ysh) in &init.embedded {
            y.add_shunt(*k, *ysh);
        }
        let y_blocks = y.to_block();
        let z = impedance(&y_blocks)?;
        let mut sys = PowerSystem {
            case: case.clone(),
            v0: pf.voltages(),
            powerflow: pf,
            y,
            y_blocks,
            z,
            devices: init.set,
            x0: init.x0,
            rate_lu: None,
        };
        if !sys.devices.has_converters() {
            let m = sys.rate_matrix(&sys.x0, &sys.v0);
            sys.rate_lu = Some(m.lu().map_err(|_| SimError::AlgebraicSingularity { t: 0.0 })?);
        }
        let v = sys.solve_network(&sys.x0, &[], &sys.v0)?;
        sys.settle(&v);
        sys.v0 = v;
        Ok(sys)
    }

    /// Resets constant inputs so that every state derivative vanishes at `v`.
    fn settle(&mut self, v: &[Complex64]) {
        let x0 = self.x0.clone();
        let offsets = self.devices.offsets.clone();
        for (d, off) in self.devices.devices.iter_mut().zip(offsets) {
            match d {
                Device::Sm(sm) => {
                    let x = &x0[off..off + 2];
                    sm.p_m = sm.p_e(x, v[sm.bus]);
                }
                Device::Gfl(g) => {
                    let x = &x0[off..off + 3];
                    g.s_ref0 = g.i_dq(x).conj() * v[g.bus].norm() - x[2];
                }
                Device::ZLoad(_) => {}
            }
        }
    }

    pub fn n(&self) -> usize {
        self.y.n
    }

    pub fn omega_b(&self) -> f64 {
        self.case.omega_b()
    }

    pub fn bus_ids(&self) -> Vec<u32> {
        self.case.bus_ids()
    }

    pub fn has_converters(&self) -> bool {
        self.devices.has_converters()
    }

    /// `Y v - sum i_dev - sum i_inj` per bus.
    pub fn network_residual(&self, x: &[f64], inj: &[Injection], v: &[Complex64]) -> Vec<Complex64> {
        let mut r = self.y.currents(v);
        for (d, range) in self.devices.iter() {
            r[d.bus()] -= d.current(&x[range], v[d.bus()]);
        }
        for s in inj {
            r[s.bus] -= s.value(v);
        }
        r
    }

    /// Device current injection per bus.
    pub fn device_currents(&self, x: &[f64], v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.n()];
        for (d, range) in self.devices.iter() {
            out[d.bus()] += d.current(&x[range], v[d.bus()]);
        }
        out
    }

    fn network_jacobian(&self, x: &[f64], inj: &[Injection], v: &[Complex64]) -> BlockMatrix<f64> {
        let mut m = self.y_blocks.clone();
        for (d, range) in self.devices.iter() {
            let k = d.bus();
            m.add_to_block(k, k, -device_jacobian(d, &x[range], v[k]));
        }
        for s in inj {
            m.add_to_block(s.bus, s.bus, -s.jacobian(v));
        }
        m
    }

    /// `Y - sum G`, the matrix mapping voltage derivatives to the part of the
    /// current derivatives that is proportional to them.
    pub fn rate_matrix(&self, x: &[f64], v: &[Complex64]) -> BlockMatrix<f64> {
        let mut m = self.y_blocks.clone();
        for (d, range) in self.devices.iter() {
            let k = d.bus();
            m.add_to_block(k, k, -d.rate_gain(&x[range], v[k]));
        }
        m
    }

    /// Newton solve of the network equations with the states held fixed.
    pub fn solve_network(
        &self,
        x: &[f64],
        inj: &[Injection],
        guess: &[Complex64],
    ) -> Result<Vec<Complex64>, SimError> {
        let constant = self.rate_lu.is_some() && inj.iter().all(|s| !s.oriented);
        let mut v = guess.to_vec();
        let mut last = f64::INFINITY;
        for _ in 0..NET_MAX_ITER {
            let r = self.network_residual(x, inj, &v);
            let err = r.iter().fold(0.0f64, |m, z| m.max(z.re.abs()).max(z.im.abs()));
            if !err.is_finite() {
                return Err(SimError::AlgebraicSingularity { t: f64::NAN });
            }
            if err <= NET_TOL || (err <= NET_FAIL_TOL && err >= 0.5 * last) {
                return Ok(v);
            }
            last = err;
            let rhs: Vec<f64> = r.iter().flat_map(|z| [z.re, z.im]).collect();
            let step = if constant {
                self.rate_lu.as_ref().expect("constant factorization").solve(&rhs)
            } else {
                let jac = self.network_jacobian(x, inj, &v);
                jac.lu()
                    .map_err(|_| SimError::AlgebraicSingularity { t: f64::NAN })?
                    .solve(&rhs)
            };
            for (k, vk) in v.iter_mut().enumerate() {
                *vk -= Complex64::new(step[2 * k], step[2 * k + 1]);
            }
            if v.iter().any(|z| z.norm() == 0.0) {
                return Err(SimError::AlgebraicSingularity { t: f64::NAN });
            }
        }
        let r = self.network_residual(x, inj, &v);
        let err = r.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if err <= NET_FAIL_TOL {
            Ok(v)
        } else {
            Err(SimError::NetworkNonConvergence { residual: err })
        }
    }

    fn solve_rates(&self, x: &[f64], v: &[Complex64], rhs: &[Complex64], lu: &mut Option<Lu<f64>>) -> Result<Vec<Complex64>, SimError> {
        let flat: Vec<f64> = rhs.iter().flat_map(|z| [z.re, z.im]).collect();
        let sol = match &self.rate_lu {
            Some(f) => f.solve(&flat),
            None => {
                if lu.is_none() {
                    *lu = Some(
                        self.rate_matrix(x, v)
                            .lu()
                            .map_err(|_| SimError::AlgebraicSingularity { t: f64::NAN })?,
                    );
                }
                lu.as_ref().expect("factorized").solve(&flat)
            }
        };
        Ok(sol.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    /// First time derivative of the bus voltages, with every injection held fixed.
    pub fn voltage_rates(&self, x: &[f64], v: &[Complex64]) -> Result<Vec<Complex64>, SimError> {
        let zero = Complex64::new(0.0, 0.0);
        let mut f = vec![zero; self.n()];
        for (d, range) in self.devices.iter() {
            let k = d.bus();
            f[k] += d.current_dot(&x[range], v[k], zero);
        }
        self.solve_rates(x, v, &f, &mut None)
    }

    /// Bus voltages with their first and second derivatives at `(x, v)`.
    pub fn point(&self, t: f64, x: &[f64], v: &[Complex64]) -> Result<Point, SimError> {
        let zero = Complex64::new(0.0, 0.0);
        let n = self.n();
        if let Some(k) = v.iter().position(|z| z.norm() == 0.0) {
            return Err(SimError::DegenerateVoltage { bus: k });
        }
        let mut lu = None;
        let mut f = vec![zero; n];
        for (d, range) in self.devices.iter() {
            let k = d.bus();
            f[k] += d.current_dot(&x[range], v[k], zero);
        }
        let vd = self.solve_rates(x, v, &f, &mut lu)?;
        let mut g = vec![zero; n];
        for (d, range) in self.devices.iter() {
            let k = d.bus();
            g[k] += d.current_ddot(&x[range], v[k], vd[k], zero);
        }
        let vdd = self.solve_rates(x, v, &g, &mut lu)?;
        Ok(Point {
            t,
            x: x.to_vec(),
            v: v.to_vec(),
            vd,
            vdd,
        })
    }

    /// Device current derivatives per bus at a point.
    pub fn device_current_rates(&self, p: &Point) -> (Vec<Complex64>, Vec<Complex64>) {
        let zero = Complex64::new(0.0, 0.0);
        let mut d1 = vec![zero; self.n()];
        let mut d2 = vec![zero; self.n()];
        for (d, range) in self.devices.iter() {
            let k = d.bus();
            d1[k] += d.current_dot(&p.x[range.clone()], p.v[k], p.vd[k]);
            d2[k] += d.current_ddot(&p.x[range], p.v[k], p.vd[k], p.vdd[k]);
        }
        (d1, d2)
    }

    /// State derivatives at `(x, v)`.
    pub fn state_rates(&self, x: &[f64], v: &[Complex64]) -> Result<Vec<f64>, SimError> {
        let vd = if self.has_converters() {
            self.voltage_rates(x, v)?
        } else {
            vec![Complex64::new(0.0, 0.0); self.n()]
        };
        let mut out = vec![0.0; x.len()];
        for (d, range) in self.devices.iter() {
            let k = d.bus();
            d.rhs(&x[range.clone()], v[k], vd[k], &mut out[range]);
        }
        Ok(out)
    }
}

/// Per-bus first-order complex frequency from device current rates through the
/// impedance matrix: `eta' = (Z i_dev')_k / v_k`.
pub fn bus_complex_frequency(sys: &PowerSystem, p: &Point) -> Result<Vec<ComplexFrequency<f64>>, SimError> {
    let (d1, _) = sys.device_current_rates(p);
    complex_frequency_from(sys, &p.v, &d1).map(|z| z.into_iter().map(ComplexFrequency::from_complex).collect())
}

/// Per-bus second-order complex frequency, `eta'' = (Z i_dev'')_k / v_k`.
pub fn bus_second_order_cf(sys: &PowerSystem, p: &Point) -> Result<Vec<ComplexFrequency2<f64>>, SimError> {
    let (_, d2) = sys.device_current_rates(p);
    complex_frequency_from(sys, &p.v, &d2).map(|z| z.into_iter().map(ComplexFrequency2::from_complex).collect())
}

fn complex_frequency_from(sys: &PowerSystem, v: &[Complex64], di: &[Complex64]) -> Result<Vec<Complex64>, SimError> {
    let flat: Vec<f64> = di.iter().flat_map(|z| [z.re, z.im]).collect();
    let vd = sys.z.apply_flat(&flat);
    v.iter()
        .enumerate()
        .map(|(k, vk)| {
            if vk.norm() == 0.0 {
                Err(SimError::DegenerateVoltage { bus: k })
            } else {
                Ok(Complex64::new(vd[2 * k], vd[2 * k + 1]) / vk)
            }
        })
        .collect()
}
