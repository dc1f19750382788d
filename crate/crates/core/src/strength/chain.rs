use num_complex::Complex64;

use super::{Snapshot, StrengthError, StrengthResult};
use crate::algebra::{mat2_of_complex, BlockMatrix};
use crate::devices::BlockForm;
use crate::simulator::PowerSystem;

/// Block-diagonal device jump matrices: `k`-th diagonal block is the sum over
/// the devices at bus `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceBlockMatrices {
    pub a: BlockMatrix<f64>,
    pub a1: BlockMatrix<f64>,
    pub a2: BlockMatrix<f64>,
    pub b1: BlockMatrix<f64>,
    pub b2: BlockMatrix<f64>,
    pub c2: BlockMatrix<f64>,
}

pub fn assemble_device_blocks(
    sys: &PowerSystem,
    snap: &Snapshot,
    form: BlockForm,
) -> Result<DeviceBlockMatrices, StrengthError> {
    let n = sys.n();
    let mut m = DeviceBlockMatrices {
        a: BlockMatrix::zeros(n),
        a1: BlockMatrix::zeros(n),
        a2: BlockMatrix::zeros(n),
        b1: BlockMatrix::zeros(n),
        b2: BlockMatrix::zeros(n),
        c2: BlockMatrix::zeros(n),
    };
    let x = snap.states();
    for (d, range) in sys.devices.iter() {
        let k = d.bus();
        let b = d.blocks(&x[range], &snap.bus_jump(k), form)?;
        m.a.add_to_block(k, k, b.a);
        m.a1.add_to_block(k, k, b.a1);
        m.a2.add_to_block(k, k, b.a2);
        m.b1.add_to_block(k, k, b.b1);
        m.b2.add_to_block(k, k, b.b2);
        m.c2.add_to_block(k, k, b.c2);
    }
    Ok(m)
}

/// Equivalent impedances of zero, first and second order:
///
/// ```text
/// Z_eq   = (I - Z A)^-1 Z
/// Z_eq'  = (I - Z B')^-1 Z A' Z_eq
/// Z_eq'' = (I - Z C'')^-1 Z (A'' Z_eq + B'' Z_eq')
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ZeqChain {
    pub zeq: BlockMatrix<f64>,
    pub zeq1: BlockMatrix<f64>,
    pub zeq2: BlockMatrix<f64>,
}

fn resolvent_solve(
    z: &BlockMatrix<f64>,
    x: &BlockMatrix<f64>,
    rhs: &BlockMatrix<f64>,
    order: u8,
) -> Result<BlockMatrix<f64>, StrengthError> {
    let n = z.n();
    let m = &BlockMatrix::identity(n) - &z.matmul(x);
    let sol = m.solve(rhs).map_err(|_| StrengthError::SingularResolvent(order))?;
    let resid = (&m.matmul(&sol) - rhs).max_abs();
    if !(resid <= 1e-10 * (1.0 + rhs.max_abs())) {
        return Err(StrengthError::SingularResolvent(order));
    }
    Ok(sol)
}

pub fn zeq_chain(z: &BlockMatrix<f64>, d: &DeviceBlockMatrices) -> Result<ZeqChain, StrengthError> {
    let zeq = resolvent_solve(z, &d.a, z, 0)?;
    let zeq1 = resolvent_solve(z, &d.b1, &z.matmul(&d.a1).matmul(&zeq), 1)?;
    let inner = &d.a2.matmul(&zeq) + &d.b2.matmul(&zeq1);
    let zeq2 = resolvent_solve(z, &d.c2, &z.matmul(&inner), 2)?;
    Ok(ZeqChain { zeq, zeq1, zeq2 })
}

/// `S = v~^-1 e~^-1 Z_eq E+`, `S' = V~^-1 (Z_eq' - H' Z_eq) E+`,
/// `S'' = V~^-1 (Z_eq'' - H'' Z_eq) E+`, where `v~` is the mean voltage
/// magnitude, `e~` the mean of `exp(j theta)`, `V~` the mean voltage vector,
/// `H', H''` the mean complex frequencies, and `E+` the post-event rotations.
pub fn strength_matrices(sys: &PowerSystem, snap: &Snapshot, chain: &ZeqChain) -> Result<StrengthResult, StrengthError> {
    let n = sys.n();
    let (m, p) = (&snap.minus, &snap.plus);
    let mut row0 = Vec::with_capacity(n);
    let mut row12 = Vec::with_capacity(n);
    let mut h1 = Vec::with_capacity(n);
    let mut h2 = Vec::with_capacity(n);
    let mut rot = Vec::with_capacity(n);
    for k in 0..n {
        let (vm, vp) = (m.v[k].norm(), p.v[k].norm());
        if vm == 0.0 || vp == 0.0 {
            return Err(StrengthError::DegenerateVoltage { bus: k });
        }
        let v_mean_mag = 0.5 * (vm + vp);
        let e_mean = 0.5 * (m.v[k] / vm + p.v[k] / vp);
        let v_mean = 0.5 * (m.v[k] + p.v[k]);
        if e_mean.norm() == 0.0 || v_mean.norm() == 0.0 {
            return Err(StrengthError::DegenerateVoltage { bus: k });
        }
        row0.push(mat2_of_complex(e_mean.inv() / v_mean_mag));
        row12.push(mat2_of_complex(v_mean.inv()));
        h1.push(0.5 * (m.vd[k] / m.v[k] + p.vd[k] / p.v[k]));
        h2.push(0.5 * (m.vdd[k] / m.v[k] + p.vdd[k] / p.v[k]));
        rot.push(mat2_of_complex(p.v[k] / vp));
    }
    let scale = |lhs: &dyn Fn(usize) -> crate::algebra::Mat2<f64>, x: &BlockMatrix<f64>| {
        let mut out = BlockMatrix::zeros(n);
        for i in 0..n {
            let l = lhs(i);
            for j in 0..n {
                out.set_block(i, j, l * x.block(i, j) * rot[j]);
            }
        }
        out
    };
    let shifted = |h: &[Complex64], zk: &BlockMatrix<f64>| {
        let mut out = zk.clone();
        for i in 0..n {
            let hi = mat2_of_complex(h[i]);
            for j in 0..n {
                out.set_block(i, j, zk.block(i, j) - hi * chain.zeq.block(i, j));
            }
        }
        out
    };
    let s = scale(&|i| row0[i], &chain.zeq);
    let s1 = scale(&|i| row12[i], &shifted(&h1, &chain.zeq1));
    let s2 = scale(&|i| row12[i], &shifted(&h2, &chain.zeq2));
    Ok(StrengthResult {
        bus_ids: sys.bus_ids(),
        s,
        s1,
        s2,
    })
}
