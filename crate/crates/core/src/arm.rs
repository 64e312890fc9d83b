//! Two-link planar manipulator mounted on top of the vehicle body.
//!
//! Angles are measured from the body-vertical axis, positive towards +x, with
//! `q2` relative to link 1. In this convention the end effector sits at
//! `(l1 sin q1 + l2 sin(q1+q2), l1 cos q1 + l2 cos(q1+q2))` and the equations
//! of motion are
//!
//! ```text
//! M(q) q'' + C(q, q') q' = tau_applied + tau_gravity(q) + tau_base(q, a_base)
//! ```
//!
//! where `tau_gravity` is the generalized gravity torque returned in
//! [`ArmMatrices::grav`] and `tau_base` is the d'Alembert torque from the
//! base acceleration.

use core::fmt;

use crate::error::{require, InvalidParameter, NumericalBlowUp};
use crate::math::{rk4_step, solve2, wrap_angle, Vec2};

/// Closed angle interval in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// The whole circle; used when a joint is effectively unlimited.
    pub const FULL: Interval = Interval::new(-core::f64::consts::PI, core::f64::consts::PI);

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Physical constants of the two-link arm.
///
/// `i1` and `i2` are moments of inertia about each link's own joint, so they
/// include the parallel-axis term `m * lc^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
    pub g: f64,
    pub q1_limits: Interval,
    pub q2_limits: Interval,
    pub tau_max: f64,
}

impl Default for ArmParams {
    fn default() -> Self {
        let (l, m) = (0.5, 0.2);
        Self {
            l1: l,
            l2: l,
            lc1: l / 2.0,
            lc2: l / 2.0,
            m1: m,
            m2: m,
            i1: m * l * l / 3.0,
            i2: m * l * l / 3.0,
            g: 9.81,
            q1_limits: Interval::new(-1.6, 1.6),
            q2_limits: Interval::new(-2.6, 2.6),
            tau_max: 3.0,
        }
    }
}

impl ArmParams {
    pub fn validate(&self) -> Result<(), InvalidParameter> {
        let all = [
            self.l1, self.l2, self.lc1, self.lc2, self.m1, self.m2, self.i1, self.i2, self.g,
            self.tau_max, self.q1_limits.lo, self.q1_limits.hi, self.q2_limits.lo, self.q2_limits.hi,
        ];
        require(all.iter().all(|v| v.is_finite()), "arm", "all fields must be finite")?;
        require(self.l1 > 0.0, "l1", "must be > 0")?;
        require(self.l2 > 0.0, "l2", "must be > 0")?;
        require(self.lc1 > 0.0 && self.lc1 <= self.l1, "lc1", "must lie in (0, l1]")?;
        require(self.lc2 > 0.0 && self.lc2 <= self.l2, "lc2", "must lie in (0, l2]")?;
        require(self.m1 > 0.0, "m1", "must be > 0")?;
        require(self.m2 > 0.0, "m2", "must be > 0")?;
        // Joint-axis inertia can never be below the point-mass contribution.
        require(self.i1 >= self.m1 * self.lc1 * self.lc1, "i1", "must be >= m1 * lc1^2")?;
        require(self.i2 >= self.m2 * self.lc2 * self.lc2, "i2", "must be >= m2 * lc2^2")?;
        require(self.g >= 0.0 && self.g.is_finite(), "g", "must be >= 0")?;
        require(self.tau_max > 0.0, "tau_max", "must be > 0")?;
        require(self.q1_limits.lo <= self.q1_limits.hi, "q1_limits", "interval is empty")?;
        require(self.q2_limits.lo <= self.q2_limits.hi, "q2_limits", "interval is empty")?;
        Ok(())
    }

    pub fn reach(&self) -> f64 {
        self.l1 + self.l2
    }

    /// Returns a copy with both link masses and inertias multiplied by `factor`.
    pub fn with_mass_scale(&self, factor: f64) -> Self {
        Self {
            m1: self.m1 * factor,
            m2: self.m2 * factor,
            i1: self.i1 * factor,
            i2: self.i2 * factor,
            ..*self
        }
    }
}

/// Joint angles (rad) and rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointState {
    pub q1: f64,
    pub q2: f64,
    pub dq1: f64,
    pub dq2: f64,
}

impl JointState {
    pub const fn at_rest(q1: f64, q2: f64) -> Self {
        Self { q1, q2, dq1: 0.0, dq2: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.q1.is_finite() && self.q2.is_finite() && self.dq1.is_finite() && self.dq2.is_finite()
    }

    fn to_array(self) -> [f64; 4] {
        [self.q1, self.q2, self.dq1, self.dq2]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self { q1: a[0], q2: a[1], dq1: a[2], dq2: a[3] }
    }
}

/// Mass matrix, Coriolis matrix and gravity torque at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmMatrices {
    pub m: [[f64; 2]; 2],
    pub c: [[f64; 2]; 2],
    pub grav: [f64; 2],
}

/// Kinetic and potential energy in joules. Potential is measured from the
/// arm base, positive upwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub kinetic: f64,
    pub potential: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unreachable {
    /// The target lies outside the annulus `|l1 - l2| <= r <= l1 + l2`.
    OutOfReach { distance: f64 },
    /// Both elbow solutions violate the joint limits.
    JointLimits { q1: f64, q2: f64 },
}

impl fmt::Display for Unreachable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Unreachable::OutOfReach { distance } => {
                write!(f, "target at distance {distance} m is outside the arm workspace")
            }
            Unreachable::JointLimits { q1, q2 } => {
                write!(f, "IK solution (q1 = {q1}, q2 = {q2}) violates joint limits")
            }
        }
    }
}

impl core::error::Error for Unreachable {}

const REACH_EPS: f64 = 1e-12;

/// End-effector position relative to the arm base.
pub fn forward_kinematics(params: &ArmParams, q1: f64, q2: f64) -> Vec2 {
    let (s1, c1) = libm::sincos(q1);
    let (s12, c12) = libm::sincos(q1 + q2);
    Vec2::new(params.l1 * s1 + params.l2 * s12, params.l1 * c1 + params.l2 * c12)
}

/// Joint angles that put the end effector at `target` (relative to the base).
///
/// The elbow-positive branch (`q2 >= 0`) is preferred; the mirror branch is
/// used only when the first one violates the joint limits.
pub fn inverse_kinematics(params: &ArmParams, target: Vec2) -> Result<(f64, f64), Unreachable> {
    let (l1, l2) = (params.l1, params.l2);
    let r = target.norm();
    if r > l1 + l2 + REACH_EPS || r < (l1 - l2).abs() - REACH_EPS || !r.is_finite() {
        return Err(Unreachable::OutOfReach { distance: r });
    }
    let cos_q2 = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    let elbow = libm::acos(cos_q2);
    let heading = libm::atan2(target.x, target.y);

    let solve = |q2: f64| {
        let (s2, c2) = libm::sincos(q2);
        let q1 = wrap_angle(heading - libm::atan2(l2 * s2, l1 + l2 * c2));
        (q1, q2)
    };
    let within = |(q1, q2): (f64, f64)| params.q1_limits.contains(q1) && params.q2_limits.contains(q2);

    let primary = solve(elbow);
    if within(primary) {
        return Ok(primary);
    }
    let mirror = solve(-elbow);
    if within(mirror) {
        return Ok(mirror);
    }
    Err(Unreachable::JointLimits { q1: primary.0, q2: primary.1 })
}

/// `M(q)`, the Christoffel-consistent `C(q, q')` and the gravity torque.
pub fn arm_matrices(params: &ArmParams, state: &JointState) -> ArmMatrices {
    let (s1, _) = libm::sincos(state.q1);
    let (s2, c2) = libm::sincos(state.q2);
    let s12 = libm::sin(state.q1 + state.q2);
    matrices_from_trig(params, s1, s2, c2, s12, state.dq1, state.dq2)
}

#[inline]
fn matrices_from_trig(p: &ArmParams, s1: f64, s2: f64, c2: f64, s12: f64, dq1: f64, dq2: f64) -> ArmMatrices {
    let coupling = p.m2 * p.l1 * p.lc2;
    let m12 = p.i2 + coupling * c2;
    let m = [[p.i1 + p.i2 + p.m2 * p.l1 * p.l1 + 2.0 * coupling * c2, m12], [m12, p.i2]];
    let h = coupling * s2;
    let c = [[-h * dq2, -h * (dq1 + dq2)], [h * dq1, 0.0]];
    let grav = [
        p.m1 * p.g * p.lc1 * s1 + p.m2 * p.g * (p.l1 * s1 + p.lc2 * s12),
        p.m2 * p.g * p.lc2 * s12,
    ];
    ArmMatrices { m, c, grav }
}

/// Torque that exactly cancels gravity at the given configuration.
pub fn gravity_compensation(params: &ArmParams, q1: f64, q2: f64) -> [f64; 2] {
    let g = arm_matrices(params, &JointState::at_rest(q1, q2)).grav;
    [-g[0], -g[1]]
}

/// Inertial joint torque caused by accelerating the arm base with
/// `base_accel` (expressed in the arm frame): each link's mass times the
/// negated base acceleration, mapped through its center-of-mass Jacobian.
pub fn disturbance_torque(params: &ArmParams, q1: f64, q2: f64, base_accel: Vec2) -> [f64; 2] {
    let (s1, c1) = libm::sincos(q1);
    let (s12, c12) = libm::sincos(q1 + q2);
    disturbance_from_trig(params, s1, c1, s12, c12, base_accel)
}

#[inline]
fn disturbance_from_trig(p: &ArmParams, s1: f64, c1: f64, s12: f64, c12: f64, a: Vec2) -> [f64; 2] {
    let f1 = -a * p.m1;
    let f2 = -a * p.m2;
    // Columns of the center-of-mass Jacobians.
    let j1_q1 = Vec2::new(p.lc1 * c1, -p.lc1 * s1);
    let j2_q1 = Vec2::new(p.l1 * c1 + p.lc2 * c12, -p.l1 * s1 - p.lc2 * s12);
    let j2_q2 = Vec2::new(p.lc2 * c12, -p.lc2 * s12);
    [j1_q1.dot(f1) + j2_q1.dot(f2), j2_q2.dot(f2)]
}

/// Joint accelerations for the given state, applied torque and base acceleration.
pub fn joint_accelerations(params: &ArmParams, state: &JointState, torque: [f64; 2], base_accel: Vec2) -> [f64; 2] {
    let y = state.to_array();
    let d = derivative(params, &y, torque, base_accel);
    [d[2], d[3]]
}

#[inline]
fn derivative(p: &ArmParams, y: &[f64; 4], torque: [f64; 2], base_accel: Vec2) -> [f64; 4] {
    let (s1, c1) = libm::sincos(y[0]);
    let (s2, c2) = libm::sincos(y[1]);
    let (s12, c12) = libm::sincos(y[0] + y[1]);
    let mats = matrices_from_trig(p, s1, s2, c2, s12, y[2], y[3]);
    let dist = disturbance_from_trig(p, s1, c1, s12, c12, base_accel);
    let cq = [
        mats.c[0][0] * y[2] + mats.c[0][1] * y[3],
        mats.c[1][0] * y[2] + mats.c[1][1] * y[3],
    ];
    let rhs = [
        torque[0] + mats.grav[0] + dist[0] - cq[0],
        torque[1] + mats.grav[1] + dist[1] - cq[1],
    ];
    let ddq = solve2(&mats.m, rhs);
    [y[2], y[3], ddq[0], ddq[1]]
}

/// Clamps each torque component to `[-tau_max, tau_max]`.
pub fn clamp_torque(params: &ArmParams, torque: [f64; 2]) -> [f64; 2] {
    [
        torque[0].clamp(-params.tau_max, params.tau_max),
        torque[1].clamp(-params.tau_max, params.tau_max),
    ]
}

/// Advances the arm by one RK4 step of length `dt`.
///
/// Torques are clamped to `tau_max`; a joint that ends the step outside its
/// limits is clamped to the limit and its rate zeroed.
pub fn arm_step(
    params: &ArmParams,
    state: &JointState,
    torque: [f64; 2],
    base_accel: Vec2,
    dt: f64,
) -> Result<JointState, NumericalBlowUp> {
    let torque = clamp_torque(params, torque);
    let y = rk4_step(|s| derivative(params, s, torque, base_accel), &state.to_array(), dt);
    let mut next = JointState::from_array(y);
    if !next.is_finite() {
        return Err(NumericalBlowUp);
    }
    if !params.q1_limits.contains(next.q1) {
        next.q1 = params.q1_limits.clamp(next.q1);
        next.dq1 = 0.0;
    }
    if !params.q2_limits.contains(next.q2) {
        next.q2 = params.q2_limits.clamp(next.q2);
        next.dq2 = 0.0;
    }
    Ok(next)
}

/// Holds `torque` and `base_accel` constant for `duration` seconds, splitting
/// it into equal RK4 steps no longer than `max_dt`.
pub fn arm_advance(
    params: &ArmParams,
    state: &JointState,
    torque: [f64; 2],
    base_accel: Vec2,
    duration: f64,
    max_dt: f64,
) -> Result<JointState, NumericalBlowUp> {
    let steps = libm::ceil(duration / max_dt - 1e-9).max(1.0) as usize;
    let h = duration / steps as f64;
    let mut s = *state;
    for _ in 0..steps {
        s = arm_step(params, &s, torque, base_accel, h)?;
    }
    Ok(s)
}

/// Kinetic energy `1/2 q'^T M q'` and potential energy of both links.
pub fn mechanical_energy(params: &ArmParams, state: &JointState) -> Energy {
    let mats = arm_matrices(params, state);
    let v = [state.dq1, state.dq2];
    let kinetic = 0.5
        * (v[0] * (mats.m[0][0] * v[0] + mats.m[0][1] * v[1]) + v[1] * (mats.m[1][0] * v[0] + mats.m[1][1] * v[1]));
    let c1 = libm::cos(state.q1);
    let c12 = libm::cos(state.q1 + state.q2);
    let p = params;
    let potential = p.m1 * p.g * p.lc1 * c1 + p.m2 * p.g * (p.l1 * c1 + p.lc2 * c12);
    Energy { kinetic, potential }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn unit_arm() -> ArmParams {
        ArmParams {
            l1: 1.0,
            l2: 1.0,
            lc1: 0.5,
            lc2: 0.5,
            m1: 1.0,
            m2: 1.0,
            i1: 1.0 / 3.0,
            i2: 1.0 / 3.0,
            g: 9.81,
            q1_limits: Interval::FULL,
            q2_limits: Interval::FULL,
            tau_max: 100.0,
        }
    }

    #[test]
    fn fk_vertical_and_horizontal() {
        let p = unit_arm();
        let up = forward_kinematics(&p, 0.0, 0.0);
        assert!(up.x.abs() < 1e-15 && (up.y - 2.0).abs() < 1e-15);
        let side = forward_kinematics(&p, FRAC_PI_2, 0.0);
        assert!((side.x - 2.0).abs() < 1e-15 && side.y.abs() < 1e-15);
    }

    #[test]
    fn ik_full_extension_and_out_of_reach() {
        let p = unit_arm();
        let (q1, q2) = inverse_kinematics(&p, Vec2::new(0.0, 2.0)).unwrap();
        assert!(q1.abs() < 1e-7 && q2.abs() < 1e-7);
        assert!(matches!(
            inverse_kinematics(&p, Vec2::new(0.0, 3.0)),
            Err(Unreachable::OutOfReach { .. })
        ));
    }

    #[test]
    fn ik_prefers_elbow_positive_then_mirror() {
        let mut p = unit_arm();
        let target = Vec2::new(0.4, 1.2);
        let (_, q2) = inverse_kinematics(&p, target).unwrap();
        assert!(q2 > 0.0);
        p.q2_limits = Interval::new(-PI, 0.0);
        let (q1, q2) = inverse_kinematics(&p, target).unwrap();
        assert!(q2 < 0.0);
        assert!(forward_kinematics(&p, q1, q2).distance(target) < 1e-9);
        p.q2_limits = Interval::new(-0.01, 0.01);
        assert!(matches!(inverse_kinematics(&p, target), Err(Unreachable::JointLimits { .. })));
    }

    #[test]
    fn mass_matrix_with_right_angle_elbow() {
        let p = unit_arm();
        let m = arm_matrices(&p, &JointState::at_rest(0.3, FRAC_PI_2)).m;
        let c2_term = 2.0 * p.m2 * p.l1 * p.lc2 * libm::cos(FRAC_PI_2);
        assert!((m[0][0] - (p.i1 + p.i2 + p.m2 * p.l1 * p.l1) - c2_term).abs() < 1e-15);
        assert!((m[0][1] - p.i2).abs() < 1e-15);
        assert_eq!(m[1][1], p.i2);
    }

    #[test]
    fn gravity_vanishes_when_vertical_or_weightless() {
        let p = unit_arm();
        assert_eq!(arm_matrices(&p, &JointState::at_rest(0.0, 0.0)).grav, [0.0, 0.0]);
        let weightless = ArmParams { g: 0.0, ..p };
        assert_eq!(arm_matrices(&weightless, &JointState::at_rest(0.7, -0.4)).grav, [0.0, 0.0]);
    }

    #[test]
    fn gravity_compensation_holds_the_arm() {
        let p = unit_arm();
        let s = JointState::at_rest(0.6, -0.9);
        let tau = gravity_compensation(&p, s.q1, s.q2);
        let mut cur = s;
        for _ in 0..1000 {
            cur = arm_step(&p, &cur, tau, Vec2::ZERO, 1e-3).unwrap();
        }
        assert!((cur.q1 - s.q1).abs() < 1e-12 && (cur.q2 - s.q2).abs() < 1e-12);
        assert!(cur.dq1.abs() < 1e-12 && cur.dq2.abs() < 1e-12);
    }

    #[test]
    fn no_forces_means_no_motion() {
        let p = ArmParams { g: 0.0, ..unit_arm() };
        let s = JointState::at_rest(0.2, 1.1);
        let next = arm_step(&p, &s, [0.0, 0.0], Vec2::ZERO, 1e-3).unwrap();
        assert_eq!(next, s);
    }

    #[test]
    fn upward_base_acceleration_acts_like_extra_gravity() {
        let p = unit_arm();
        let (q1, q2) = (0.8, -0.3);
        let grav = arm_matrices(&p, &JointState::at_rest(q1, q2)).grav;
        let d = disturbance_torque(&p, q1, q2, Vec2::new(0.0, p.g));
        assert!((d[0] - grav[0]).abs() < 1e-12 && (d[1] - grav[1]).abs() < 1e-12);
    }

    #[test]
    fn joint_limit_clamps_and_zeroes_rate() {
        let mut p = unit_arm();
        p.q1_limits = Interval::new(-0.1, 0.1);
        let s = JointState { q1: 0.099, q2: 0.0, dq1: 5.0, dq2: 0.0 };
        let next = arm_step(&p, &s, [0.0, 0.0], Vec2::ZERO, 1e-2).unwrap();
        assert_eq!(next.q1, 0.1);
        assert_eq!(next.dq1, 0.0);
    }

    #[test]
    fn torque_is_clamped() {
        let p = ArmParams { g: 0.0, tau_max: 1.0, ..unit_arm() };
        let s = JointState::at_rest(0.3, 0.3);
        let a = arm_step(&p, &s, [50.0, -50.0], Vec2::ZERO, 1e-3).unwrap();
        let b = arm_step(&p, &s, [1.0, -1.0], Vec2::ZERO, 1e-3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn non_finite_state_is_reported() {
        let p = unit_arm();
        let s = JointState { q1: 0.0, q2: 0.0, dq1: f64::NAN, dq2: 0.0 };
        assert_eq!(arm_step(&p, &s, [0.0, 0.0], Vec2::ZERO, 1e-3), Err(NumericalBlowUp));
    }

    #[test]
    fn energy_edge_cases() {
        let p = unit_arm();
        assert_eq!(mechanical_energy(&p, &JointState::at_rest(0.4, 0.2)).kinetic, 0.0);
        let weightless = ArmParams { g: 0.0, ..p };
        let s = JointState { q1: 0.4, q2: 0.2, dq1: 1.0, dq2: -2.0 };
        assert_eq!(mechanical_energy(&weightless, &s).potential, 0.0);
    }

    #[test]
    fn validate_rejects_unphysical_inertia() {
        let p = ArmParams { i2: 0.01, ..unit_arm() };
        assert_eq!(p.validate().unwrap_err().name, "i2");
        assert!(unit_arm().validate().is_ok());
        assert!(ArmParams::default().validate().is_ok());
    }
}
