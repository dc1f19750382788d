use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dae::{Injection, Point, PowerSystem};
use super::SimError;
use crate::algebra::Lu;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Largest acceptable residual of the implicit step equations.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 5.0,
            tol: 1e-10,
            max_iter: 20,
        }
    }
}

/// A step current injection applied at `t` and held afterwards. The
/// injection's orientation, if any, refers to the bus voltage just after the
/// step; from then on the phasor is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub t: f64,
    pub injection: Injection,
}

/// Recorded simulation. An event appears as two consecutive points with the
/// same time stamp, before and after the step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub bus_ids: Vec<u32>,
    pub points: Vec<Point>,
    /// Index of the pre-event point of each event.
    pub events: Vec<usize>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    /// Index of the pre-event point of the event at `t`.
    pub fn event_index(&self, t: f64) -> Option<usize> {
        self.events
            .iter()
            .copied()
            .find(|&i| (self.points[i].t - t).abs() <= 1e-9)
    }
}

/// Implicit trapezoidal step solver with a finite-difference Jacobian kept
/// across steps and refreshed when convergence slows.
struct Stepper<'a> {
    sys: &'a PowerSystem,
    inj: Vec<Injection>,
    v: Vec<Complex64>,
    jac: Option<Vec<f64>>,
    lu: Option<(f64, Lu<f64>)>,
    opts: SimOptions,
}

impl<'a> Stepper<'a> {
    fn rates(&mut self, x: &[f64]) -> Result<Vec<f64>, SimError> {
        self.v = self.sys.solve_network(x, &self.inj, &self.v)?;
        self.sys.state_rates(x, &self.v)
    }

    fn jacobian(&mut self, x: &[f64], f0: &[f64]) -> Result<Vec<f64>, SimError> {
        let n = x.len();
        let v_keep = self.v.clone();
        let mut jac = vec![0.0; n * n];
        let mut xp = x.to_vec();
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            xp[j] = x[j] + h;
            let fp = self.rates(&xp)?;
            xp[j] = x[j];
            for i in 0..n {
                jac[i * n + j] = (fp[i] - f0[i]) / h;
            }
        }
        self.v = v_keep;
        Ok(jac)
    }

    fn factor(&mut self, h: f64) -> Result<(), SimError> {
        let jac = self.jac.as_ref().expect("jacobian present");
        let n = (jac.len() as f64).sqrt() as usize;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = if i == j { 1.0 } else { 0.0 } - 0.5 * h * jac[i * n + j];
            }
        }
        let lu = Lu::factor(n, m).map_err(|_| SimError::AlgebraicSingularity { t: f64::NAN })?;
        self.lu = Some((h, lu));
        Ok(())
    }

    /// Advances `x` over `h` given `f0 = x'(t)`. Returns the new state and its rates.
    fn step(&mut self, t: f64, x0: &[f64], f0: &[f64], h: f64) -> Result<(Vec<f64>, Vec<f64>), SimError> {
        let n = x0.len();
        if n == 0 {
            let f = self.rates(x0)?;
            return Ok((x0.to_vec(), f));
        }
        let v_start = self.v.clone();
        let mut refreshed = false;
        let mut x: Vec<f64> = x0.iter().zip(f0).map(|(a, b)| a + h * b).collect();
        let mut best = f64::INFINITY;
        for iter in 0..self.opts.max_iter {
            let f = self.rates(&x)?;
            let r: Vec<f64> = (0..n).map(|i| x[i] - x0[i] - 0.5 * h * (f0[i] + f[i])).collect();
            let err = r.iter().fold(0.0f64, |m, z| m.max(z.abs()));
            if err <= 1e-14 * (1.0 + x.iter().fold(0.0f64, |m, z| m.max(z.abs()))) {
                return Ok((x, f));
            }
            let slow = iter > 0 && err > 0.05 * best;
            best = best.min(err);
            if self.jac.is_none() || (slow && !refreshed) {
                self.jac = Some(self.jacobian(&x, &f)?);
                self.lu = None;
                refreshed = true;
            }
            if self.lu.as_ref().map(|(hh, _)| *hh != h).unwrap_or(true) {
                self.factor(h)?;
            }
            let dx = self.lu.as_ref().expect("factored").1.solve(&r);
            let dmax = dx.iter().fold(0.0f64, |m, z| m.max(z.abs()));
            for i in 0..n {
                x[i] -= dx[i];
            }
            if dmax <= 1e-15 * (1.0 + x.iter().fold(0.0f64, |m, z| m.max(z.abs()))) && err <= self.opts.tol {
                let f = self.rates(&x)?;
                return Ok((x, f));
            }
        }
        let f = self.rates(&x)?;
        let r = (0..n)
            .map(|i| (x[i] - x0[i] - 0.5 * h * (f0[i] + f[i])).abs())
            .fold(0.0f64, f64::max);
        if r <= self.opts.tol {
            return Ok((x, f));
        }
        self.v = v_start;
        Err(SimError::NewtonFailure { t: t + h, residual: r })
    }
}

/// Integrates from the initial equilibrium with step current events.
pub fn simulate(sys: &PowerSystem, events: &[Event], opts: SimOptions) -> Result<Trajectory, SimError> {
    if !(opts.dt > 0.0) || !(opts.t_end >= 0.0) {
        return Err(SimError::InvalidOptions(format!("dt = {}, t_end = {}", opts.dt, opts.t_end)));
    }
    let mut events: Vec<Event> = events.to_vec();
    events.sort_by(|a, b| a.t.total_cmp(&b.t));
    if let Some(e) = events.iter().find(|e| e.t < 0.0 || e.t > opts.t_end) {
        return Err(SimError::InvalidOptions(format!("event time {} outside [0, {}]", e.t, opts.t_end)));
    }

    let mut st = Stepper {
        sys,
        inj: Vec::new(),
        v: sys.v0.clone(),
        jac: None,
        lu: None,
        opts,
    };
    let mut x = sys.x0.clone();
    let mut f = st.rates(&x)?;
    let mut points = vec![sys.point(0.0, &x, &st.v)?];
    let mut marks = Vec::new();

    let mut boundaries: Vec<f64> = events.iter().map(|e| e.t).collect();
    boundaries.push(opts.t_end);
    let mut t_seg = 0.0;
    let mut ev = 0;
    for &t_b in &boundaries {
        let span = t_b - t_seg;
        let n_steps = if span <= 0.0 { 0 } else { (span / opts.dt - 1e-9).ceil() as usize };
        for k in 0..n_steps {
            let t = t_seg + k as f64 * opts.dt;
            let t_next = if k + 1 == n_steps { t_b } else { t_seg + (k + 1) as f64 * opts.dt };
            let (xn, fnew) = st.step(t, &x, &f, t_next - t)?;
            x = xn;
            f = fnew;
            points.push(sys.point(t_next, &x, &st.v)?);
        }
        t_seg = t_b;
        while ev < events.len() && events[ev].t == t_b {
            marks.push(points.len() - 1);
            let mut with_new = st.inj.clone();
            with_new.push(events[ev].injection);
            let v_plus = sys.solve_network(&x, &with_new, &st.v)?;
            st.inj.push(events[ev].injection.frozen(&v_plus));
            st.v = sys.solve_network(&x, &st.inj, &v_plus)?;
            f = sys.state_rates(&x, &st.v)?;
            points.push(sys.point(t_b, &x, &st.v)?);
            ev += 1;
        }
    }
    Ok(Trajectory {
        bus_ids: sys.bus_ids(),
        points,
        events: marks,
    })
}
