mod common;

use aeroarm_core::arm::ArmParams;
use aeroarm_core::quad::{
    dynamic_moment, moment_report, quad_step, reactive_thrust_control, static_moment, PdGains, QuadParams, QuadState,
    Reference,
};
use aeroarm_core::Vec2;
use common::arm_params;
use proptest::prelude::*;

#[test]
fn hover_is_a_fixed_point_for_any_step() {
    let p = QuadParams::default();
    let u = p.hover_thrust();
    for dt in [1e-4, 1e-3, 0.01, 0.1, 1.0] {
        let start = QuadState::at_rest(Vec2::new(0.3, 2.0));
        let mut s = start;
        for _ in 0..100 {
            s = quad_step(&p, &s, u, u, 0.0, dt).unwrap();
        }
        assert_eq!(s, start, "dt {dt}");
    }
}

#[test]
fn free_fall_loses_g_dt_per_step() {
    let p = QuadParams::default();
    let s = quad_step(&p, &QuadState::default(), 0.0, 0.0, 0.0, 0.01).unwrap();
    assert!((s.vy + p.g * 0.01).abs() < 1e-15);
    assert_eq!((s.x, s.alpha), (0.0, 0.0));
}

#[test]
fn differential_thrust_tilt_matches_constant_torque_closed_form() {
    let p = QuadParams::default();
    let (u1, u2) = (8.0, 6.5);
    let dt = 1e-3;
    let mut s = QuadState::default();
    for k in 1..=100 {
        s = quad_step(&p, &s, u1, u2, 0.0, dt).unwrap();
        let t = k as f64 * dt;
        let expect = p.r_arm * (u1 - u2) * t * t / (2.0 * p.i_o);
        assert!((s.alpha - expect).abs() < 1e-9, "t {t}: {} vs {expect}", s.alpha);
    }
}

#[test]
fn weight_moments_cancel_for_mirrored_links() {
    let arm = ArmParams { l1: 1.0, l2: 1.0, m1: 1.0, m2: 1.0, g: 9.81, ..ArmParams::default() };
    assert_eq!(static_moment(&arm, core::f64::consts::FRAC_PI_2, 0.0, 0.0), 0.0);
}

#[test]
fn reaction_moment_example() {
    let arm = ArmParams { i1: 0.1, i2: 0.2, ..ArmParams::default() };
    assert!((dynamic_moment(&arm, 1.0, 2.0) - 0.5).abs() < 1e-15);
}

#[test]
fn tilt_error_produces_restoring_differential() {
    let p = QuadParams::default();
    let gains = PdGains::critically_damped(&p, 4.0, 25.0);
    let tilted = QuadState { alpha: 0.1, ..QuadState::default() };
    let (u1, u2) = reactive_thrust_control(&p, &tilted, &Reference::default(), &gains);
    assert!(u1 < u2);
}

proptest! {
    #[test]
    fn equal_thrust_without_moment_keeps_tilt(
        alpha in -0.4..0.4f64, u in 0.0..15.0f64, dt in 1e-4..0.05f64,
    ) {
        let p = QuadParams::default();
        let s = QuadState { alpha, vx: 0.3, vy: -0.2, ..QuadState::default() };
        let next = quad_step(&p, &s, u, u, 0.0, dt).unwrap();
        prop_assert_eq!(next.alpha, alpha);
        prop_assert_eq!(next.dalpha, 0.0);
    }

    #[test]
    fn total_moment_is_the_sum(
        p in arm_params(), q1 in -3.0..3.0f64, q2 in -3.0..3.0f64, alpha in -0.5..0.5f64,
        ddq1 in -50.0..50.0f64, ddq2 in -50.0..50.0f64,
    ) {
        let r = moment_report(&p, q1, q2, alpha, ddq1, ddq2);
        prop_assert_eq!(r.m_total, r.m_static + r.m_dynamic);
        prop_assert_eq!(r.m_static, static_moment(&p, q1, q2, alpha));
        prop_assert_eq!(r.m_dynamic, dynamic_moment(&p, ddq1, ddq2));
    }

    #[test]
    fn weight_moment_scales_linearly(
        p in arm_params(), q1 in -3.0..3.0f64, q2 in -3.0..3.0f64, alpha in -0.5..0.5f64, k in 0.1..10.0f64,
    ) {
        let base = static_moment(&p, q1, q2, alpha);
        let tol = 1e-12 * (1.0 + base.abs() * k);
        let scaled_g = ArmParams { g: p.g * k, ..p };
        prop_assert!((static_moment(&scaled_g, q1, q2, alpha) - k * base).abs() < tol);
        // Each mass contributes its own term.
        let only1 = static_moment(&ArmParams { m2: 0.0, ..p }, q1, q2, alpha);
        let only2 = static_moment(&ArmParams { m1: 0.0, ..p }, q1, q2, alpha);
        prop_assert!((only1 + only2 - base).abs() < tol);
        let heavier1 = static_moment(&ArmParams { m1: p.m1 * k, ..p }, q1, q2, alpha);
        prop_assert!((heavier1 - (k * only1 + only2)).abs() < tol);
    }

    #[test]
    fn reaction_moment_is_linear_in_accelerations(
        p in arm_params(), a1 in -20.0..20.0f64, a2 in -20.0..20.0f64, b1 in -20.0..20.0f64, b2 in -20.0..20.0f64,
    ) {
        let sum = dynamic_moment(&p, a1 + b1, a2 + b2);
        let parts = dynamic_moment(&p, a1, a2) + dynamic_moment(&p, b1, b2);
        prop_assert!((sum - parts).abs() < 1e-12 * (1.0 + sum.abs()));
    }

    #[test]
    fn stepping_is_bit_deterministic(u1 in 0.0..15.0f64, u2 in 0.0..15.0f64, m in -1.0..1.0f64) {
        let p = QuadParams::default();
        let run = || {
            let mut s = QuadState::at_rest(Vec2::new(0.0, 1.0));
            for _ in 0..50 {
                s = quad_step(&p, &s, u1, u2, m, 1e-3).unwrap();
            }
            s
        };
        let (a, b) = (run(), run());
        prop_assert_eq!(a.alpha.to_bits(), b.alpha.to_bits());
        prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
    }
}
