use super::{Disturbance, Snapshot, StrengthError};
use crate::simulator::{Injection, Point, PowerSystem};

/// Post-event operating point for a step injection at `pre`. States are held;
/// the network equations are solved jointly with the injection oriented on the
/// post-event voltage angle of its bus. `existing` are injections already
/// present (fixed phasors).
pub fn solve_post_state(
    sys: &PowerSystem,
    pre: &Point,
    existing: &[Injection],
    dist: Disturbance,
) -> Result<Snapshot, StrengthError> {
    if dist.bus >= sys.n() {
        return Err(StrengthError::UnknownBus(dist.bus));
    }
    let step = Injection {
        bus: dist.bus,
        current: dist.i_pq,
        oriented: true,
    };
    let mut all = existing.to_vec();
    all.push(step);
    let v_plus = sys.solve_network(&pre.x, &all, &pre.v)?;
    let frozen = step.frozen(&v_plus);
    let mut fixed = existing.to_vec();
    fixed.push(frozen);
    let v_plus = sys.solve_network(&pre.x, &fixed, &v_plus)?;
    let plus = sys.point(pre.t, &pre.x, &v_plus)?;
    Ok(Snapshot {
        minus: pre.clone(),
        plus,
        disturbance: dist,
        injected: frozen.current,
    })
}
