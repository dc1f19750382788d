mod common;

use common::{bus, case, system};
use gridstrength::devices::Device;
use gridstrength::network::DeviceSpec;
use gridstrength::simulator::{
    bus_complex_frequency, measure_jump, simulate, Event, Injection, PowerSystem, SimError, SimOptions, Trajectory,
};
use num_complex::Complex64;

fn step(bus: usize, re: f64, im: f64, t: f64) -> Event {
    Event {
        t,
        injection: Injection {
            bus,
            current: Complex64::new(re, im),
            oriented: true,
        },
    }
}

fn opts(dt: f64, t_end: f64) -> SimOptions {
    SimOptions {
        dt,
        t_end,
        ..SimOptions::default()
    }
}

fn sm_offsets(sys: &PowerSystem) -> Vec<usize> {
    sys.devices
        .iter()
        .filter(|(d, _)| matches!(d, Device::Sm(_)))
        .map(|(_, r)| r.start)
        .collect()
}

#[test]
fn equilibrium_is_preserved() {
    for name in ["four_bus.json", "four_bus_gfl.json"] {
        let sys = system(name);
        let tr = simulate(&sys, &[], opts(1e-2, 5.0)).unwrap();
        let last = tr.points.last().unwrap();
        assert!((last.t - 5.0).abs() < 1e-9);
        for p in &tr.points {
            for k in 0..sys.n() {
                assert!((p.v[k] - sys.v0[k]).norm() < 1e-10, "{name}");
                assert!(p.vd[k].norm() < 1e-10);
            }
            let dx = p.x.iter().zip(&sys.x0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(dx < 1e-10, "{name}: {dx:e}");
        }
    }
}

/// Two lossless undamped machines: the relative rotor mode of the linearized
/// swing equations.
#[test]
fn swing_mode_frequency() {
    let mut c = case("four_bus.json");
    for d in &mut c.devices {
        if let DeviceSpec::Sm2 { d, ra, .. } = d {
            *d = 0.0;
            *ra = 0.0;
        }
    }
    let sys = PowerSystem::from_case(&c).unwrap();
    let offs = sm_offsets(&sys);
    let wb = sys.omega_b();
    let ms: Vec<f64> = sys
        .devices
        .iter()
        .filter_map(|(d, _)| if let Device::Sm(s) = d { Some(s.m) } else { None })
        .collect();

    // synchronizing coefficients dP_i/d delta_j by central differences
    let pe = |x: &[f64]| -> Vec<f64> {
        let v = sys.solve_network(x, &[], &sys.v0).unwrap();
        sys.devices
            .iter()
            .filter_map(|(d, r)| if let Device::Sm(s) = d { Some(s.p_e(&x[r], v[s.bus])) } else { None })
            .collect()
    };
    let h = 1e-6;
    let mut k = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut xp = sys.x0.clone();
        let mut xm = sys.x0.clone();
        xp[offs[j]] += h;
        xm[offs[j]] -= h;
        let (p, m) = (pe(&xp), pe(&xm));
        for i in 0..2 {
            k[i][j] = (p[i] - m[i]) / (2.0 * h);
        }
    }
    // eigenvalues of wb M^-1 K; the nonzero one gives the mode
    let a = [[wb * k[0][0] / ms[0], wb * k[0][1] / ms[0]], [wb * k[1][0] / ms[1], wb * k[1][1] / ms[1]]];
    let tr = a[0][0] + a[1][1];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let lam = 0.5 * (tr + (tr * tr - 4.0 * det).sqrt());
    let f_lin = lam.sqrt() / (2.0 * std::f64::consts::PI);

    let traj = simulate(&sys, &[step(bus(&sys, 3), -0.01, 0.0, 0.1)], opts(1e-3, 5.0)).unwrap();
    let s: Vec<(f64, f64)> = traj
        .points
        .iter()
        .filter(|p| p.t > 0.1)
        .map(|p| (p.t, p.x[offs[0] + 1] - p.x[offs[1] + 1]))
        .collect();
    let crossings: Vec<f64> = s
        .windows(2)
        .filter(|w| w[0].1 * w[1].1 < 0.0)
        .map(|w| w[0].0 - w[0].1 * (w[1].0 - w[0].0) / (w[1].1 - w[0].1))
        .collect();
    assert!(crossings.len() >= 6, "{}", crossings.len());
    let half = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
    let f_sim = 1.0 / (2.0 * half);
    assert!((f_sim / f_lin - 1.0).abs() < 0.01, "sim {f_sim} vs linear {f_lin}");
}

#[test]
fn ieee39_runs_through_the_event() {
    let sys = system("ieee39.json");
    let traj = simulate(&sys, &[step(bus(&sys, 15), -1.0, 0.0, 1.0)], SimOptions::default()).unwrap();
    assert!((traj.points.last().unwrap().t - 5.0).abs() < 1e-9);
    check_trajectory(&traj);
}

fn check_trajectory(traj: &Trajectory) {
    for w in traj.points.windows(2) {
        assert!(w[1].t >= w[0].t);
    }
    for (i, w) in traj.points.windows(2).enumerate() {
        if w[1].t == w[0].t {
            assert!(traj.events.contains(&i));
        }
    }
    assert!(traj.points.iter().all(|p| p.v.iter().all(|v| v.norm() > 0.0)));
}

#[test]
fn events_keep_states_and_machines_keep_frequency() {
    let sys = system("four_bus.json");
    let traj = simulate(&sys, &[step(2, -0.4, 0.2, 0.5)], opts(1e-3, 0.8)).unwrap();
    check_trajectory(&traj);
    let i = traj.event_index(0.5).unwrap();
    assert_eq!(traj.points[i].x, traj.points[i + 1].x);
    assert_eq!(traj.points[i].t, traj.points[i + 1].t);
    for j in measure_jump(&traj, 0.5).unwrap() {
        assert!(j.eta1.max_abs() < 1e-9);
    }
    assert!(matches!(measure_jump(&traj, 0.3), Err(SimError::EventNotFound { .. })));
}

#[test]
fn zero_step_has_no_jump() {
    let sys = system("four_bus_gfl.json");
    let traj = simulate(&sys, &[step(1, 0.0, 0.0, 0.2)], opts(1e-3, 0.3)).unwrap();
    for j in measure_jump(&traj, 0.2).unwrap() {
        assert!(j.max_abs_diff(&Default::default()) < 1e-12);
    }
}

#[test]
fn network_residual_at_every_point() {
    let sys = system("four_bus_gfl.json");
    let ev = step(2, -0.3, 0.1, 0.2);
    let traj = simulate(&sys, &[ev], opts(1e-3, 0.6)).unwrap();
    let i = traj.event_index(0.2).unwrap();
    let frozen = ev.injection.frozen(&traj.points[i + 1].v);
    for (n, p) in traj.points.iter().enumerate() {
        let inj = if n > i { vec![frozen] } else { vec![] };
        let r = sys.network_residual(&p.x, &inj, &p.v);
        assert!(r.iter().all(|z| z.norm() < 1e-10), "point {n}");
    }
}

#[test]
fn converters_make_frequency_jump() {
    let sys = system("ieee39_gfl.json");
    let traj = simulate(&sys, &[step(bus(&sys, 15), -1.0, 0.0, 0.1)], opts(1e-3, 0.2)).unwrap();
    let j = measure_jump(&traj, 0.1).unwrap()[bus(&sys, 15)];
    assert!(j.eta1.d.abs() > 1e-4 && j.eta1.q.abs() > 1e-4, "{j:?}");
}

#[test]
fn trapezoidal_rule_is_second_order() {
    let sys = system("four_bus_gfl.json");
    let run = |dt: f64| simulate(&sys, &[step(2, -0.3, 0.1, 0.2)], opts(dt, 1.0)).unwrap();
    let (coarse, fine, reference) = (run(4e-3), run(2e-3), run(1e-3));
    let at = |tr: &Trajectory, t: f64| -> Vec<f64> {
        // last point at t, i.e. post-event side for duplicates
        tr.points.iter().rev().find(|p| (p.t - t).abs() < 1e-9).unwrap().x.clone()
    };
    let dev = |tr: &Trajectory| -> f64 {
        (1..=200)
            .map(|k| 0.2 + 4e-3 * k as f64)
            .filter(|t| *t <= 1.0 + 1e-9)
            .map(|t| {
                at(tr, t)
                    .iter()
                    .zip(at(&reference, t))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let ratio = dev(&coarse) / dev(&fine);
    // against a dt/4 reference the ideal ratio is (1 - 1/16) / (1/4 - 1/16) = 5
    assert!((3.5..6.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn complex_frequency_is_frame_independent() {
    let sys = system("four_bus.json");
    let traj = simulate(&sys, &[step(2, -0.3, 0.1, 0.1)], opts(1e-3, 0.3)).unwrap();
    let p = traj.points.last().unwrap();
    let phi = 0.7;
    let rot = Complex64::from_polar(1.0, phi);
    let mut x = p.x.clone();
    for o in sm_offsets(&sys) {
        x[o] += phi;
    }
    let v: Vec<Complex64> = p.v.iter().map(|v| v * rot).collect();
    let a = bus_complex_frequency(&sys, &sys.point(p.t, &p.x, &p.v).unwrap()).unwrap();
    let b = bus_complex_frequency(&sys, &sys.point(p.t, &x, &v).unwrap()).unwrap();
    for (a, b) in a.iter().zip(&b) {
        assert!((a.rho - b.rho).abs() < 1e-10 && (a.omega - b.omega).abs() < 1e-10);
    }
}

/// rho, omega against central differences of ln v and theta along the
/// recorded trajectory; sigma, gamma against second differences of v.
#[test]
fn complex_frequency_matches_trajectory_differences() {
    let sys = system("four_bus.json");
    let k = bus(&sys, 4);
    let err = |dt: f64| -> (f64, f64) {
        let traj = simulate(&sys, &[step(2, -0.5, 0.2, 0.0)], opts(dt, 0.5)).unwrap();
        let pts = &traj.points;
        let n = pts.iter().position(|p| (p.t - 0.3).abs() < 1e-9).unwrap();
        let (a, b, c) = (&pts[n - 1], &pts[n], &pts[n + 1]);
        let lnv = |p: &gridstrength::simulator::Point| p.v[k].norm().ln();
        let th = |p: &gridstrength::simulator::Point| p.v[k].arg();
        let rho = (lnv(c) - lnv(a)) / (2.0 * dt);
        let om = (th(c) - th(a)) / (2.0 * dt);
        let e1 = b.eta1(k);
        let e1_err = (rho - e1.rho).abs().max((om - e1.omega).abs());
        let vdd = (c.v[k] - 2.0 * b.v[k] + a.v[k]) / (dt * dt);
        let e2_err = (vdd / b.v[k] - b.eta2(k).to_complex()).norm();
        (e1_err, e2_err)
    };
    let (a1, a2) = err(2e-3);
    let (b1, b2) = err(1e-3);
    assert!(a1 / b1 > 3.0, "{a1:e} {b1:e}");
    assert!(a2 / b2 > 3.0, "{a2:e} {b2:e}");
    assert!(b1 < 1e-5 && b2 < 1e-3);
}
