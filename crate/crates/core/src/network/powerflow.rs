use num_complex::Complex64;
use serde::Serialize;

use super::admittance::{admittance_matrix, Admittance};
use super::case::{BusKind, SystemCase};
use super::NetworkError;
use crate::algebra::Lu;

pub const MISMATCH_TOL: f64 = 1e-8;
pub const MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerFlowSolution {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Net active injection into the network, pu.
    pub p: Vec<f64>,
    /// Net reactive injection into the network, pu.
    pub q: Vec<f64>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

impl PowerFlowSolution {
    pub fn voltages(&self) -> Vec<Complex64> {
        self.v
            .iter()
            .zip(&self.theta)
            .map(|(m, a)| Complex64::from_polar(*m, *a))
            .collect()
    }

    pub fn injection(&self, k: usize) -> Complex64 {
        Complex64::new(self.p[k], self.q[k])
    }
}

fn power(y: &Admittance, v: &[Complex64]) -> Vec<Complex64> {
    y.currents(v)
        .iter()
        .zip(v)
        .map(|(i, vk)| vk * i.conj())
        .collect()
}

/// Scheduled net injections, `(p, q)` per bus.
pub fn scheduled(case: &SystemCase) -> Vec<Complex64> {
    case.buses
        .iter()
        .map(|b| Complex64::new(b.p_gen - b.p_load, b.q_gen - b.q_load))
        .collect()
}

/// Largest active/reactive mismatch over the equations a power flow enforces
/// (P at PV and PQ buses, Q at PQ buses).
pub fn max_mismatch(case: &SystemCase, y: &Admittance, v: &[Complex64]) -> f64 {
    let s = power(y, v);
    let sched = scheduled(case);
    case.buses
        .iter()
        .enumerate()
        .map(|(k, b)| match b.kind {
            BusKind::Slack => 0.0,
            BusKind::Pv => (s[k].re - sched[k].re).abs(),
            BusKind::Pq => (s[k].re - sched[k].re).abs().max((s[k].im - sched[k].im).abs()),
        })
        .fold(0.0, f64::max)
}

/// Newton-Raphson power flow in polar coordinates from a flat start.
pub fn solve_powerflow(case: &SystemCase) -> Result<PowerFlowSolution, NetworkError> {
    let y = admittance_matrix(case);
    let n = case.n_buses();
    let sched = scheduled(case);
    let mut vm: Vec<f64> = case
        .buses
        .iter()
        .map(|b| if b.kind == BusKind::Pq { 1.0 } else { b.v })
        .collect();
    let slack = case.slack_index();
    let mut va = vec![case.buses[slack].theta; n];

    let ang: Vec<usize> = (0..n).filter(|&k| case.buses[k].kind != BusKind::Slack).collect();
    let mag: Vec<usize> = (0..n).filter(|&k| case.buses[k].kind == BusKind::Pq).collect();
    let m = ang.len() + mag.len();

    let volts = |vm: &[f64], va: &[f64]| -> Vec<Complex64> {
        vm.iter().zip(va).map(|(m, a)| Complex64::from_polar(*m, *a)).collect()
    };

    let mut iterations = 0;
    loop {
        let v = volts(&vm, &va);
        let s = power(&y, &v);
        let mut f = Vec::with_capacity(m);
        for &k in &ang {
            f.push(s[k].re - sched[k].re);
        }
        for &k in &mag {
            f.push(s[k].im - sched[k].im);
        }
        let err = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !err.is_finite() {
            return Err(NetworkError::NonConvergence {
                iterations,
                residual: err,
            });
        }
        if err < MISMATCH_TOL * 1e-4 || (err < MISMATCH_TOL && iterations >= MAX_ITER) {
            return Ok(finish(case, &y, vm, va, iterations));
        }
        if iterations >= MAX_ITER {
            return Err(NetworkError::NonConvergence {
                iterations,
                residual: err,
            });
        }
        let jac = jacobian(&y, &v, &ang, &mag);
        let lu = Lu::factor(m, jac).map_err(|_| NetworkError::NonConvergence {
            iterations,
            residual: err,
        })?;
        let dx = lu.solve(&f);
        for (r, &k) in ang.iter().enumerate() {
            va[k] -= dx[r];
        }
        for (r, &k) in mag.iter().enumerate() {
            vm[k] -= dx[ang.len() + r];
        }
        iterations += 1;
        // a further step cannot improve on roundoff
        if err < MISMATCH_TOL {
            let v2 = volts(&vm, &va);
            let s2 = power(&y, &v2);
            let e2 = ang
                .iter()
                .map(|&k| (s2[k].re - sched[k].re).abs())
                .chain(mag.iter().map(|&k| (s2[k].im - sched[k].im).abs()))
                .fold(0.0f64, f64::max);
            if e2 >= err * 0.5 {
                return Ok(finish(case, &y, vm, va, iterations));
            }
        }
    }
}

fn finish(case: &SystemCase, y: &Admittance, vm: Vec<f64>, va: Vec<f64>, iterations: usize) -> PowerFlowSolution {
    let v: Vec<Complex64> = vm.iter().zip(&va).map(|(m, a)| Complex64::from_polar(*m, *a)).collect();
    let s = power(y, &v);
    PowerFlowSolution {
        max_mismatch: max_mismatch(case, y, &v),
        p: s.iter().map(|x| x.re).collect(),
        q: s.iter().map(|x| x.im).collect(),
        v: vm,
        theta: va,
        iterations,
    }
}

/// Jacobian of `[P(ang); Q(mag)]` with respect to `[theta(ang); |v|(mag)]`.
fn jacobian(y: &Admittance, v: &[Complex64], ang: &[usize], mag: &[usize]) -> Vec<f64> {
    let i = y.currents(v);
    let j = Complex64::new(0.0, 1.0);
    // dS_k/dtheta_l and dS_k/d|v_l|
    let ds_dva = |k: usize, l: usize| -> Complex64 {
        let mut d = -j * v[k] * (y.get(k, l) * v[l]).conj();
        if k == l {
            d += j * v[k] * i[k].conj();
        }
        d
    };
    let ds_dvm = |k: usize, l: usize| -> Complex64 {
        let u = v[l] / v[l].norm();
        let mut d = v[k] * (y.get(k, l) * u).conj();
        if k == l {
            d += i[k].conj() * u;
        }
        d
    };
    let m = ang.len() + mag.len();
    let mut jac = vec![0.0; m * m];
    let rows = ang.iter().map(|&k| (k, true)).chain(mag.iter().map(|&k| (k, false)));
    for (r, (k, is_p)) in rows.enumerate() {
        let cols = ang.iter().map(|&l| (l, true)).chain(mag.iter().map(|&l| (l, false)));
        for (c, (l, is_a)) in cols.enumerate() {
            let d = if is_a { ds_dva(k, l) } else { ds_dvm(k, l) };
            jac[r * m + c] = if is_p { d.re } else { d.im };
        }
    }
    jac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::case::parse_case;

    fn two_bus(load: f64) -> SystemCase {
        parse_case(&format!(
            r#"{{"base": {{"mva": 100, "f0": 60}},
            "buses": [{{"id": 1, "kind": "slack"}}, {{"id": 2, "kind": "pq", "p_load": {load}}}],
            "branches": [{{"from":1,"to":2,"r":0,"x":0.1}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn no_flow_fixed_point() {
        let pf = solve_powerflow(&two_bus(0.0)).unwrap();
        for k in 0..2 {
            assert!((pf.v[k] - 1.0).abs() < 1e-12);
            assert!(pf.theta[k].abs() < 1e-12);
        }
    }

    #[test]
    fn transfer_angle_satisfies_line_equation() {
        let pf = solve_powerflow(&two_bus(0.5)).unwrap();
        let lhs = pf.v[0] * pf.v[1] * (pf.theta[0] - pf.theta[1]).sin() / 0.1;
        assert!((lhs - 0.5).abs() < 1e-8);
        assert!(pf.max_mismatch < 1e-8);
    }

    #[test]
    fn divergence_is_reported() {
        match solve_powerflow(&two_bus(20.0)) {
            Err(NetworkError::NonConvergence { .. }) => {}
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
