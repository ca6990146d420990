use std::f64::consts::TAU;

use j2lambert_core::elements::{
    elements_to_state, kepler_propagate, orbital_period, OrbitalElements,
};
use j2lambert_core::lambert::{solve_kepler_lambert, LambertQuery};
use j2lambert_core::propagator::{propagate, PropagatorConfig};
use j2lambert_core::shooting::{finite_diff_jacobian, shoot, ShootingConfig};
use j2lambert_core::{BodyParams, StateCartesian, Vec3};
use nalgebra::Matrix3;

const RJ: f64 = 71_492.0;

fn orbit(k: u32) -> OrbitalElements {
    let t = k as f64;
    let rp = (6.0 + 3.0 * (t * 0.37).fract()) * RJ;
    let ra = rp + 8.0 * RJ * (t * 0.61).fract();
    OrbitalElements {
        a: 0.5 * (ra + rp),
        e: (ra - rp) / (ra + rp),
        i: 0.2 + 0.7 * (t * 0.29).fract(),
        raan: TAU * (t * 0.13).fract(),
        argp: TAU * (t * 0.71).fract(),
        mean_anomaly: TAU * (t * 0.43).fract(),
    }
}

/// A J2 transfer together with its Keplerian guess.
fn transfer(k: u32, tof_frac: f64) -> (Vec3, Vec3, Vec3, f64, Vec3) {
    let body = BodyParams::JUPITER;
    let oe = orbit(k);
    let s0 = elements_to_state(&oe, body.mu).unwrap();
    let tof = tof_frac * orbital_period(oe.a, body.mu).unwrap();
    let sf = propagate(&s0, tof, &body, &PropagatorConfig::default()).unwrap();
    let revs = tof_frac.floor() as u32;
    let q = LambertQuery::new(s0.position, sf.position, tof, body.mu, revs)
        .with_plane_hint(oe.plane_normal());
    let vd = solve_kepler_lambert(&q)
        .unwrap()
        .into_iter()
        .map(|s| s.v0)
        .min_by(|a, b| {
            (a - s0.velocity)
                .norm()
                .partial_cmp(&(b - s0.velocity).norm())
                .unwrap()
        })
        .unwrap();
    (s0.position, s0.velocity, sf.position, tof, vd)
}

#[test]
fn short_flight_jacobian_is_tof_times_identity() {
    let body = BodyParams::JUPITER;
    let r0 = Vec3::new(10.0 * RJ, 0.0, 0.0);
    let v = Vec3::new(0.0, 11.0, 3.0);
    let tof = 1.0;
    let h = finite_diff_jacobian(&r0, &v, tof, &body, 1e-6, &PropagatorConfig::default()).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                assert!((h[(i, j)] - tof).abs() < 1e-3 * tof, "{h}");
            } else {
                assert!(h[(i, j)].abs() < 1e-6 * tof, "{h}");
            }
        }
    }
}

fn central_kepler_jacobian(r0: &Vec3, v: &Vec3, tof: f64, mu: f64, step: f64) -> Matrix3<f64> {
    let mut h = Matrix3::zeros();
    for j in 0..3 {
        let mut vp = *v;
        let mut vm = *v;
        vp[j] += step;
        vm[j] -= step;
        let rp = kepler_propagate(&StateCartesian::new(*r0, vp), tof, mu)
            .unwrap()
            .position;
        let rm = kepler_propagate(&StateCartesian::new(*r0, vm), tof, mu)
            .unwrap()
            .position;
        h.set_column(j, &((rp - rm) / (2.0 * step)));
    }
    h
}

#[test]
fn two_body_jacobian_matches_central_differences() {
    let body = BodyParams::JUPITER.two_body();
    let cfg = PropagatorConfig::default();
    for k in 0..5 {
        let oe = orbit(k);
        let s0 = elements_to_state(&oe, body.mu).unwrap();
        let tof = 0.3 * orbital_period(oe.a, body.mu).unwrap();
        let h = finite_diff_jacobian(&s0.position, &s0.velocity, tof, &body, 1e-6, &cfg).unwrap();
        let oracle = central_kepler_jacobian(&s0.position, &s0.velocity, tof, body.mu, 1e-7);
        let scale = oracle.abs().max();
        for (a, b) in h.iter().zip(oracle.iter()) {
            assert!(
                (a - b).abs() <= 1e-4 * b.abs().max(1e-3 * scale),
                "{h}\n{oracle}"
            );
        }
    }
}

#[test]
fn jacobian_is_insensitive_to_halving_the_step() {
    let body = BodyParams::JUPITER;
    let cfg = PropagatorConfig::default();
    let oe = orbit(3);
    let s0 = elements_to_state(&oe, body.mu).unwrap();
    let tof = 0.4 * orbital_period(oe.a, body.mu).unwrap();
    let h1 = finite_diff_jacobian(&s0.position, &s0.velocity, tof, &body, 1e-6, &cfg).unwrap();
    let h2 = finite_diff_jacobian(&s0.position, &s0.velocity, tof, &body, 5e-7, &cfg).unwrap();
    let scale = h1.abs().max();
    for (a, b) in h1.iter().zip(h2.iter()) {
        assert!((a - b).abs() <= 1e-4 * a.abs().max(1e-3 * scale));
    }
}

#[test]
fn exact_velocity_is_a_fixed_point() {
    let (r0, v0, rf, tof, _) = transfer(1, 0.6);
    let res = shoot(
        &r0,
        &v0,
        &rf,
        tof,
        &BodyParams::JUPITER,
        &ShootingConfig::default(),
    )
    .unwrap();
    assert!(res.converged);
    assert!(res.iterations <= 1);
    assert!((res.v0 - v0).norm() < 1e-12);
    assert_eq!(res.propagations, 4 * res.iterations + 1);
}

#[test]
fn zero_budget_reports_initial_error() {
    let (r0, _, rf, tof, vd) = transfer(2, 0.7);
    let cfg = ShootingConfig {
        max_iter: 0,
        ..ShootingConfig::default()
    };
    let body = BodyParams::JUPITER;
    let res = shoot(&r0, &vd, &rf, tof, &body, &cfg).unwrap();
    assert!(!res.converged);
    assert_eq!(res.iterations, 0);
    assert_eq!(res.propagations, 1);
    let end = propagate(&StateCartesian::new(r0, vd), tof, &body, &cfg.propagator).unwrap();
    assert_eq!(res.terminal_error, (rf - end.position).norm());
    assert_eq!(res.terminal_error, res.initial_error);
}

#[test]
fn converges_from_keplerian_guess() {
    let body = BodyParams::JUPITER;
    let cfg = ShootingConfig::default();
    for k in 0..10 {
        let (r0, v0, rf, tof, vd) = transfer(k, 0.05 + 0.9 * (k as f64 * 0.53).fract());
        let res = shoot(&r0, &vd, &rf, tof, &body, &cfg).unwrap();
        assert!(res.converged, "case {k}: {res:?}");
        assert!(res.terminal_error <= cfg.tol);
        assert!(res.terminal_error <= res.initial_error);
        assert_eq!(res.propagations, 4 * res.iterations + 1);
        assert!((res.v0 - v0).norm() < 1e-5);
    }
}

#[test]
fn best_iterate_never_worse_than_start() {
    let body = BodyParams::JUPITER;
    for k in 0..6 {
        let (r0, _, rf, tof, vd) = transfer(k, 3.3 + k as f64);
        let cfg = ShootingConfig {
            max_iter: 4,
            ..ShootingConfig::default()
        };
        let res = shoot(&r0, &vd, &rf, tof, &body, &cfg).unwrap();
        assert!(res.terminal_error <= res.initial_error);
        assert!(res.iterations <= 4);
    }
}

#[test]
fn shooting_is_deterministic() {
    let body = BodyParams::JUPITER;
    let (r0, _, rf, tof, vd) = transfer(4, 2.5);
    let a = shoot(&r0, &vd, &rf, tof, &body, &ShootingConfig::default()).unwrap();
    let b = shoot(&r0, &vd, &rf, tof, &body, &ShootingConfig::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn step_limit_caps_each_correction() {
    let body = BodyParams::JUPITER;
    let (r0, _, rf, tof, vd) = transfer(5, 0.8);
    let cfg = ShootingConfig {
        max_iter: 1,
        step_limit: Some(1e-4),
        ..ShootingConfig::default()
    };
    let res = shoot(&r0, &vd, &rf, tof, &body, &cfg).unwrap();
    // Slack covers rounding of v + dv at 10 km/s.
    assert!((res.v0 - vd).norm() <= 1e-4 * (1.0 + 1e-9));
}
