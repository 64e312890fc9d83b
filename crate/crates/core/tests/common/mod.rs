#![allow(dead_code)]

use aeroarm_core::arm::{ArmParams, Interval, JointState};
use proptest::prelude::*;

/// Physically plausible arm parameters: every link carries at least a
/// quarter of a uniform rod's own inertia on top of the point-mass term
/// `m * lc^2`, and its center of mass sits away from the joint.
pub fn arm_params() -> impl Strategy<Value = ArmParams> {
    (
        (0.2..1.5f64, 0.2..1.5f64),
        (0.2..1.0f64, 0.2..1.0f64),
        (0.05..3.0f64, 0.05..3.0f64),
        (0.25..2.0f64, 0.25..2.0f64),
        0.5..20.0f64,
        (1.0..std::f64::consts::PI, 1.0..std::f64::consts::PI),
    )
        .prop_map(|((l1, l2), (f1, f2), (m1, m2), (k1, k2), g, (w1, w2))| {
            let (lc1, lc2) = (f1 * l1, f2 * l2);
            ArmParams {
                l1,
                l2,
                lc1,
                lc2,
                m1,
                m2,
                i1: m1 * lc1 * lc1 + k1 * m1 * l1 * l1 / 12.0,
                i2: m2 * lc2 * lc2 + k2 * m2 * l2 * l2 / 12.0,
                g,
                q1_limits: Interval::new(-w1, w1),
                q2_limits: Interval::new(-w2, w2),
                tau_max: 5.0,
            }
        })
}

/// Joint state inside the limits with moderate rates.
pub fn state_in(p: &ArmParams) -> impl Strategy<Value = JointState> {
    (
        p.q1_limits.lo..=p.q1_limits.hi,
        p.q2_limits.lo..=p.q2_limits.hi,
        -3.0..3.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(q1, q2, dq1, dq2)| JointState { q1, q2, dq1, dq2 })
}

pub fn arm_and_state() -> impl Strategy<Value = (ArmParams, JointState)> {
    arm_params().prop_flat_map(|p| (Just(p), state_in(&p)))
}

/// Limits wide enough that a free swing of a few seconds never reaches them.
pub fn unlimited(p: ArmParams) -> ArmParams {
    ArmParams { q1_limits: Interval::new(-1e3, 1e3), q2_limits: Interval::new(-1e3, 1e3), ..p }
}

/// Whether some configuration inside the joint limits puts the tip at `rel`
/// (relative to the base), found by scanning the shoulder angle for roots of
/// `|rel - elbow(q1)|^2 - l2^2` and checking the elbow angle each root
/// implies. Does not use the crate's inverse kinematics.
pub fn reachable_by_scan(p: &ArmParams, rel: [f64; 2]) -> bool {
    let elbow = |q1: f64| [p.l1 * q1.sin(), p.l1 * q1.cos()];
    let f = |q1: f64| {
        let e = elbow(q1);
        (rel[0] - e[0]).powi(2) + (rel[1] - e[1]).powi(2) - p.l2 * p.l2
    };
    let elbow_ok = |q1: f64| {
        let e = elbow(q1);
        let absolute = (rel[0] - e[0]).atan2(rel[1] - e[1]);
        let mut q2 = absolute - q1;
        while q2 > std::f64::consts::PI {
            q2 -= 2.0 * std::f64::consts::PI;
        }
        while q2 <= -std::f64::consts::PI {
            q2 += 2.0 * std::f64::consts::PI;
        }
        p.q2_limits.contains(q2)
    };
    let n = 20_000;
    let (lo, hi) = (p.q1_limits.lo, p.q1_limits.hi);
    let at = |k: usize| lo + (hi - lo) * k as f64 / n as f64;
    for k in 0..n {
        let (mut a, mut b) = (at(k), at(k + 1));
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 && elbow_ok(a) {
            return true;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if f(m).signum() == f(a).signum() {
                a = m;
            } else {
                b = m;
            }
        }
        if elbow_ok(0.5 * (a + b)) {
            return true;
        }
    }
    f(hi) == 0.0 && elbow_ok(hi)
}

/// Closest approach over `[0, horizon]` between a point moving from `p` with
/// velocity `v` and a disc center moving from `c` with velocity `w`.
pub fn closest_approach(p: [f64; 2], v: [f64; 2], c: [f64; 2], w: [f64; 2], horizon: f64) -> f64 {
    let d = [p[0] - c[0], p[1] - c[1]];
    let u = [v[0] - w[0], v[1] - w[1]];
    let uu = u[0] * u[0] + u[1] * u[1];
    let t = if uu == 0.0 { 0.0 } else { (-(d[0] * u[0] + d[1] * u[1]) / uu).clamp(0.0, horizon) };
    ((d[0] + u[0] * t).powi(2) + (d[1] + u[1] * t).powi(2)).sqrt()
}
