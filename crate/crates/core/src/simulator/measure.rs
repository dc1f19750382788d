use super::dae::Point;
use super::integrate::Trajectory;
use super::SimError;
use crate::algebra::ClarkeVec;
use crate::deltacalc::{magnitude_angle_coords, Jump};
use crate::strength::JumpSet;

/// Jumps at bus `k` between two points, in the coordinates used by the
/// strength predictions.
pub fn jumps_between(minus: &Point, plus: &Point, k: usize) -> Result<JumpSet, SimError> {
    let v = Jump::new(minus.magnitude(k), plus.magnitude(k));
    let th = Jump::new(minus.angle(k), plus.angle(k));
    // the angle jump is taken on the shortest arc
    let dth = crate::algebra::wrap_angle(th.delta());
    let th = Jump::new(th.minus, th.minus + dth);
    let v_theta = magnitude_angle_coords(v, th).map_err(|e| SimError::Jump(e.to_string()))?;
    let e1 = ClarkeVec::from_complex(plus.eta1(k).to_complex() - minus.eta1(k).to_complex());
    let e2 = ClarkeVec::from_complex(plus.eta2(k).to_complex() - minus.eta2(k).to_complex());
    Ok(JumpSet {
        v_theta,
        eta1: e1,
        eta2: e2,
    })
}

/// Measured jumps at every bus across the event at `t_event`.
pub fn measure_jump(traj: &Trajectory, t_event: f64) -> Result<Vec<JumpSet>, SimError> {
    let i = traj
        .event_index(t_event)
        .ok_or(SimError::EventNotFound { t: t_event })?;
    let (m, p) = (&traj.points[i], &traj.points[i + 1]);
    (0..m.v.len()).map(|k| jumps_between(m, p, k)).collect()
}

/// One-sided second-order slope at the first of three equally spaced samples.
pub fn forward_slope(f0: f64, f1: f64, f2: f64, h: f64) -> f64 {
    (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
}

/// Post-event slopes of `rho` and `omega` at bus `k`, from the first three
/// points recorded after the event at `t_event`.
pub fn post_event_slopes(traj: &Trajectory, t_event: f64, k: usize) -> Result<(f64, f64), SimError> {
    let i = traj
        .event_index(t_event)
        .ok_or(SimError::EventNotFound { t: t_event })?;
    let pts = traj.points.get(i + 1..i + 4).ok_or(SimError::EventNotFound { t: t_event })?;
    let h = pts[1].t - pts[0].t;
    if (pts[2].t - pts[1].t - h).abs() > 1e-9 * h.max(1e-300) || h <= 0.0 {
        return Err(SimError::InvalidOptions("post-event samples are not equally spaced".into()));
    }
    let e: Vec<_> = pts.iter().map(|p| p.eta1(k)).collect();
    Ok((
        forward_slope(e[0].rho, e[1].rho, e[2].rho, h),
        forward_slope(e[0].omega, e[1].omega, e[2].omega, h),
    ))
}

#[cfg(test)]
mod tests {
    use super::forward_slope;

    #[test]
    fn stencil_exact_on_quadratics() {
        let f = |t: f64| 3.0 - 2.0 * t + 5.0 * t * t;
        let h = 0.1;
        assert!((forward_slope(f(1.0), f(1.1), f(1.2), h) - (-2.0 + 10.0)).abs() < 1e-12);
    }
}
