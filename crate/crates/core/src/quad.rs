//! Planar quadrotor body, the moments the arm exerts on it, and a reactive
//! PD thrust controller with an explicit observation delay.

use alloc::collections::VecDeque;

use crate::arm::ArmParams;
use crate::error::{require, InvalidParameter, NumericalBlowUp};
use crate::math::{rk4_step, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParams {
    /// Body mass (kg).
    pub m_o: f64,
    /// Body moment of inertia (kg m^2).
    pub i_o: f64,
    /// Center-of-mass to propeller distance (m).
    pub r_arm: f64,
    pub g: f64,
    /// Per-propeller thrust bound (N).
    pub u_max: f64,
    /// Angle-of-attack magnitude limit (rad).
    pub alpha_max: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self { m_o: 1.5, i_o: 0.02, r_arm: 0.2, g: 9.81, u_max: 15.0, alpha_max: 0.5 }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), InvalidParameter> {
        require(self.m_o > 0.0 && self.m_o.is_finite(), "m_o", "must be > 0")?;
        require(self.i_o > 0.0 && self.i_o.is_finite(), "i_o", "must be > 0")?;
        require(self.r_arm > 0.0 && self.r_arm.is_finite(), "r_arm", "must be > 0")?;
        require(self.g > 0.0 && self.g.is_finite(), "g", "must be > 0")?;
        require(self.u_max > 0.0 && self.u_max.is_finite(), "u_max", "must be > 0")?;
        require(
            self.alpha_max > 0.0 && self.alpha_max < core::f64::consts::FRAC_PI_2,
            "alpha_max",
            "must lie in (0, pi/2)",
        )
    }

    pub fn hover_thrust(&self) -> f64 {
        self.m_o * self.g / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub alpha: f64,
    pub dalpha: f64,
}

impl QuadState {
    pub fn at_rest(position: Vec2) -> Self {
        Self { x: position.x, y: position.y, ..Self::default() }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// True when the tilt exceeds the configured limit. Violations are
    /// reported, never clamped.
    pub fn alpha_violated(&self, params: &QuadParams) -> bool {
        self.alpha.abs() > params.alpha_max
    }

    fn to_array(self) -> [f64; 6] {
        [self.x, self.y, self.vx, self.vy, self.alpha, self.dalpha]
    }

    fn from_array(a: [f64; 6]) -> Self {
        Self { x: a[0], y: a[1], vx: a[2], vy: a[3], alpha: a[4], dalpha: a[5] }
    }
}

/// Translational and angular accelerations for the given thrusts.
pub fn quad_accelerations(params: &QuadParams, alpha: f64, u1: f64, u2: f64, external_moment: f64) -> [f64; 3] {
    let thrust = u1 + u2;
    let (s, c) = libm::sincos(alpha);
    [
        -thrust * s / params.m_o,
        (thrust * c - params.m_o * params.g) / params.m_o,
        (params.r_arm * (u1 - u2) + external_moment) / params.i_o,
    ]
}

/// One RK4 step of the planar rigid-body equations. Thrusts are clamped to
/// `[0, u_max]` and held constant over the step.
pub fn quad_step(
    params: &QuadParams,
    state: &QuadState,
    u1: f64,
    u2: f64,
    external_moment: f64,
    dt: f64,
) -> Result<QuadState, NumericalBlowUp> {
    let u1 = u1.clamp(0.0, params.u_max);
    let u2 = u2.clamp(0.0, params.u_max);
    let f = |s: &[f64; 6]| {
        let a = quad_accelerations(params, s[4], u1, u2, external_moment);
        [s[2], s[3], a[0], a[1], s[5], a[2]]
    };
    let next = QuadState::from_array(rk4_step(f, &state.to_array(), dt));
    if next.is_finite() {
        Ok(next)
    } else {
        Err(NumericalBlowUp)
    }
}

/// Moment from the weight of both links on the body, as a function of the
/// joint angles and the body tilt.
pub fn static_moment(arm: &ArmParams, q1: f64, q2: f64, alpha: f64) -> f64 {
    -(arm.l1 / 2.0) * arm.m1 * arm.g * libm::sin(q1 - alpha) + (arm.l2 / 2.0) * arm.m2 * arm.g * libm::sin(q1 + q2 - alpha)
}

/// Reaction moment from the links' angular accelerations.
pub fn dynamic_moment(arm: &ArmParams, ddq1: f64, ddq2: f64) -> f64 {
    -arm.i1 * ddq1 + arm.i2 * (ddq1 + ddq2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentReport {
    pub m_static: f64,
    pub m_dynamic: f64,
    pub m_total: f64,
}

pub fn moment_report(arm: &ArmParams, q1: f64, q2: f64, alpha: f64, ddq1: f64, ddq2: f64) -> MomentReport {
    let m_static = static_moment(arm, q1, q2, alpha);
    let m_dynamic = dynamic_moment(arm, ddq1, ddq2);
    MomentReport { m_static, m_dynamic, m_total: m_static + m_dynamic }
}

/// PD gains in force/torque units: `kp_pos` N/m, `kd_pos` N s/m,
/// `kp_att` N m/rad, `kd_att` N m s/rad.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdGains {
    pub kp_pos: f64,
    pub kd_pos: f64,
    pub kp_att: f64,
    pub kd_att: f64,
}

impl PdGains {
    /// Critically damped gains for the given closed-loop natural frequencies
    /// (rad/s) of the translational and attitude loops.
    pub fn critically_damped(params: &QuadParams, pos_bandwidth: f64, att_bandwidth: f64) -> Self {
        Self {
            kp_pos: params.m_o * pos_bandwidth * pos_bandwidth,
            kd_pos: 2.0 * params.m_o * pos_bandwidth,
            kp_att: params.i_o * att_bandwidth * att_bandwidth,
            kd_att: 2.0 * params.i_o * att_bandwidth,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidParameter> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        require(
            ok(self.kp_pos) && ok(self.kd_pos) && ok(self.kp_att) && ok(self.kd_att),
            "gains",
            "all PD gains must be > 0",
        )
    }
}

/// Desired position, velocity and heading for the controller.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
}

/// PD law on position and tilt with hover feed-forward.
///
/// `observed` is whatever state the controller currently sees; feed it
/// through a [`DelayLine`] to model response delay.
pub fn reactive_thrust_control(params: &QuadParams, observed: &QuadState, reference: &Reference, gains: &PdGains) -> (f64, f64) {
    let fx = gains.kp_pos * (reference.position.x - observed.x) + gains.kd_pos * (reference.velocity.x - observed.vx);
    let fy = gains.kp_pos * (reference.position.y - observed.y) + gains.kd_pos * (reference.velocity.y - observed.vy);
    let lift = params.m_o * params.g + fy;
    let (s, c) = libm::sincos(observed.alpha);
    // Collective thrust along the current body axis.
    let collective = (lift * c - fx * s).max(0.0);
    let tilt = (reference.heading + libm::atan2(-fx, lift)).clamp(-params.alpha_max, params.alpha_max);
    let moment = gains.kp_att * (tilt - observed.alpha) - gains.kd_att * observed.dalpha;
    let differential = moment / params.r_arm;
    let u1 = (collective / 2.0 + differential / 2.0).clamp(0.0, params.u_max);
    let u2 = (collective / 2.0 - differential / 2.0).clamp(0.0, params.u_max);
    (u1, u2)
}

/// Fixed-length observation delay owned by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    buffer: VecDeque<QuadState>,
    delay_steps: usize,
}

impl DelayLine {
    /// A delay of `delay_steps` ticks, pre-filled with `initial`.
    pub fn new(delay_steps: usize, initial: QuadState) -> Self {
        let mut buffer = VecDeque::with_capacity(delay_steps + 1);
        buffer.extend(core::iter::repeat_n(initial, delay_steps));
        Self { buffer, delay_steps }
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    /// Records the newest state and returns the one observed this tick.
    pub fn push(&mut self, state: QuadState) -> QuadState {
        self.buffer.push_back(state);
        self.buffer.pop_front().expect("buffer holds at least the pushed state")
    }
}

/// Reactive controller: a [`DelayLine`] in front of [`reactive_thrust_control`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReactiveController {
    pub gains: PdGains,
    delay: DelayLine,
}

impl ReactiveController {
    pub fn new(gains: PdGains, delay_steps: usize, initial: QuadState) -> Self {
        Self { gains, delay: DelayLine::new(delay_steps, initial) }
    }

    pub fn command(&mut self, params: &QuadParams, state: &QuadState, reference: &Reference) -> (f64, f64) {
        let observed = self.delay.push(*state);
        reactive_thrust_control(params, &observed, reference, &self.gains)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hover_is_exact_equilibrium() {
        let p = QuadParams::default();
        let s = QuadState::at_rest(Vec2::new(1.25, -3.5));
        let u = p.hover_thrust();
        for dt in [1e-4, 1e-3, 0.1, 1.0] {
            assert_eq!(quad_step(&p, &s, u, u, 0.0, dt).unwrap(), s);
        }
    }

    #[test]
    fn free_fall() {
        let p = QuadParams::default();
        let mut s = QuadState::at_rest(Vec2::ZERO);
        let dt = 0.01;
        for k in 1..=10 {
            s = quad_step(&p, &s, 0.0, 0.0, 0.0, dt).unwrap();
            assert!((s.vy + p.g * dt * k as f64).abs() < 1e-12);
            assert_eq!(s.x, 0.0);
            assert_eq!(s.alpha, 0.0);
        }
    }

    #[test]
    fn thrusts_are_clamped() {
        let p = QuadParams::default();
        let s = QuadState::at_rest(Vec2::ZERO);
        let a = quad_step(&p, &s, 1e6, -5.0, 0.0, 0.01).unwrap();
        let b = quad_step(&p, &s, p.u_max, 0.0, 0.0, 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_thrusts_keep_alpha() {
        let p = QuadParams::default();
        let mut s = QuadState { alpha: 0.2, ..QuadState::default() };
        for _ in 0..100 {
            s = quad_step(&p, &s, 6.0, 6.0, 0.0, 0.01).unwrap();
        }
        assert_eq!(s.alpha, 0.2);
    }

    #[test]
    fn static_moment_cases() {
        let arm = ArmParams { l1: 1.0, l2: 1.0, m1: 1.0, m2: 1.0, g: 9.81, ..ArmParams::default() };
        assert_eq!(static_moment(&arm, 0.3, 0.0, 0.3), 0.0);
        let m = static_moment(&arm, core::f64::consts::FRAC_PI_2, 0.0, 0.0);
        assert!(m.abs() < 1e-15);
    }

    #[test]
    fn dynamic_moment_cases() {
        let arm = ArmParams { i1: 0.1, i2: 0.2, ..ArmParams::default() };
        assert_eq!(dynamic_moment(&arm, 0.0, 0.0), 0.0);
        assert!((dynamic_moment(&arm, 1.0, 2.0) - 0.5).abs() < 1e-15);
        let equal = ArmParams { i1: 0.3, i2: 0.3, ..ArmParams::default() };
        assert_eq!(dynamic_moment(&equal, 7.5, 0.0), 0.0);
    }

    #[test]
    fn controller_hover_feed_forward() {
        let p = QuadParams::default();
        let gains = PdGains::critically_damped(&p, 3.0, 20.0);
        let s = QuadState::at_rest(Vec2::new(2.0, 1.0));
        let r = Reference { position: Vec2::new(2.0, 1.0), ..Reference::default() };
        let (u1, u2) = reactive_thrust_control(&p, &s, &r, &gains);
        assert_eq!(u1, p.hover_thrust());
        assert_eq!(u2, p.hover_thrust());
    }

    #[test]
    fn controller_restores_positive_tilt() {
        let p = QuadParams::default();
        let gains = PdGains::critically_damped(&p, 3.0, 20.0);
        let s = QuadState { alpha: 0.1, ..QuadState::default() };
        let (u1, u2) = reactive_thrust_control(&p, &s, &Reference::default(), &gains);
        assert!(u1 < u2);
    }

    #[test]
    fn delay_line_returns_old_states() {
        let s0 = QuadState::default();
        let mut line = DelayLine::new(2, s0);
        let a = QuadState { x: 1.0, ..s0 };
        let b = QuadState { x: 2.0, ..s0 };
        let c = QuadState { x: 3.0, ..s0 };
        assert_eq!(line.push(a), s0);
        assert_eq!(line.push(b), s0);
        assert_eq!(line.push(c), a);
        let mut none = DelayLine::new(0, s0);
        assert_eq!(none.push(b), b);
    }
}
