use serde::Serialize;

use super::integrate::{simulate, Event, SimOptions, Trajectory};
use super::measure::{measure_jump, post_event_slopes};
use super::{Injection, PowerSystem};
use crate::devices::BlockForm;
use crate::strength::{analyze, Analysis, Disturbance, JumpSet};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub quantity: &'static str,
    pub predicted: f64,
    pub measured: f64,
    /// `predicted - measured`.
    pub error: f64,
}

impl Row {
    fn new(quantity: &'static str, predicted: f64, measured: f64) -> Self {
        Self {
            quantity,
            predicted,
            measured,
            error: predicted - measured,
        }
    }

    pub fn relative_error(&self) -> f64 {
        if self.measured == 0.0 {
            self.error.abs()
        } else {
            (self.error / self.measured).abs()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub bus: u32,
    pub i_pq: [f64; 2],
    pub t_event: f64,
    pub dt: f64,
    pub block_form: BlockForm,
    /// Jumps at the disturbed bus: `dv` (pu), `dtheta` (rad), `drho` (1/s),
    /// `domega` (rad/s), `dsigma`, `dgamma` (1/s^2).
    pub jumps: Vec<Row>,
    /// Initial rates of change of `rho` and `omega` after the event, predicted
    /// from the jumps and measured as one-sided slopes of the trajectory.
    pub proc: Vec<Row>,
    /// Largest prediction error over all buses and all six jump coordinates.
    pub max_error_all_buses: f64,
}

impl ValidationReport {
    pub fn row(&self, q: &str) -> Option<&Row> {
        self.jumps.iter().chain(&self.proc).find(|r| r.quantity == q)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "bus {}  di_pq = {:+.6}{:+.6}j  t_event = {} s  dt = {} s  blocks = {:?}\n",
            self.bus, self.i_pq[0], self.i_pq[1], self.t_event, self.dt, self.block_form
        );
        s.push_str(&format!("{:<14}{:>20}{:>20}{:>14}\n", "quantity", "predicted", "measured", "error"));
        for r in self.jumps.iter().chain(&self.proc) {
            s.push_str(&format!(
                "{:<14}{:>20.10e}{:>20.10e}{:>14.3e}\n",
                r.quantity, r.predicted, r.measured, r.error
            ));
        }
        s.push_str(&format!("max error over all buses: {:.3e}\n", self.max_error_all_buses));
        s
    }
}

/// Predicted rates `(rho', omega')` right after the event from the
/// complex frequencies on both sides.
fn proc_from(eta1: num_complex::Complex64, eta2: num_complex::Complex64) -> (f64, f64) {
    let (rho, om) = (eta1.re, eta1.im);
    (eta2.re - rho * rho + om * om, eta2.im - 2.0 * rho * om)
}

/// Runs the analytical prediction and a time-domain simulation of the same
/// step and compares them.
pub fn validate(
    sys: &PowerSystem,
    dist: Disturbance,
    t_event: f64,
    opts: SimOptions,
    form: BlockForm,
) -> Result<(ValidationReport, Analysis, Trajectory), Error> {
    let analysis = analyze(sys, dist, form)?;
    let predicted = analysis.predict()?;
    let event = Event {
        t: t_event,
        injection: Injection {
            bus: dist.bus,
            current: dist.i_pq,
            oriented: true,
        },
    };
    let traj = simulate(sys, &[event], opts)?;
    let measured = measure_jump(&traj, t_event)?;
    let k = dist.bus;
    let ev = traj.event_index(t_event).expect("event recorded");
    let pre = &traj.points[ev];

    let max_error_all_buses = predicted
        .iter()
        .zip(&measured)
        .map(|(p, m)| p.max_abs_diff(m))
        .fold(0.0, f64::max);

    let v_minus = pre.magnitude(k);
    let (dv_p, dth_p) = predicted[k].voltage_jumps(v_minus);
    let (dv_m, dth_m) = measured[k].voltage_jumps(v_minus);
    let (p, m): (&JumpSet, &JumpSet) = (&predicted[k], &measured[k]);
    let jumps = vec![
        Row::new("dv", dv_p, dv_m),
        Row::new("dtheta", dth_p, dth_m),
        Row::new("drho", p.eta1.d, m.eta1.d),
        Row::new("domega", p.eta1.q, m.eta1.q),
        Row::new("dsigma", p.eta2.d, m.eta2.d),
        Row::new("dgamma", p.eta2.q, m.eta2.q),
    ];

    let e1 = pre.eta1(k).to_complex() + p.eta1.to_complex();
    let e2 = pre.eta2(k).to_complex() + p.eta2.to_complex();
    let (rho_rate, om_rate) = proc_from(e1, e2);
    let (rho_slope, om_slope) = post_event_slopes(&traj, t_event, k)?;
    let proc = vec![Row::new("rho_rate", rho_rate, rho_slope), Row::new("omega_rate", om_rate, om_slope)];

    Ok((
        ValidationReport {
            bus: sys.bus_ids()[k],
            i_pq: [dist.i_pq.re, dist.i_pq.im],
            t_event,
            dt: opts.dt,
            block_form: form,
            jumps,
            proc,
            max_error_all_buses,
        },
        analysis,
        traj,
    ))
}
