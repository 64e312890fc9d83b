//! Arm-on-body coupling: the learned arm motion drives the body through the
//! static and dynamic moments while the body's deviation from its plan feeds
//! back into the arm as a base acceleration.
//!
//! The body is simulated relative to its plan. The planned motion itself is
//! assumed to be tracked perfectly by a feed-forward the study does not
//! model, so the deviation starts at rest at the origin under hover thrust and
//! is driven only by the arm's moment.

use alloc::vec::Vec;

use crate::arm::{arm_step, clamp_torque, forward_kinematics, joint_accelerations, ArmParams};
use crate::error::{require, InvalidParameter};
use crate::math::Vec2;
use crate::qlearn::tracking::encode_state;
use crate::qlearn::{QTable, TrackingEnv};
use crate::quad::{moment_report, quad_accelerations, quad_step, PdGains, QuadParams, QuadState, ReactiveController, Reference};

/// Settings for the coupled simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceConfig {
    pub gains: PdGains,
    /// Observation delay of the reactive controller, in control ticks.
    pub delay_steps: usize,
    /// Control tick of the body simulation (s).
    pub control_dt: f64,
    /// Shared integration step of arm and body (s).
    pub sim_dt: f64,
}

impl DisturbanceConfig {
    /// Critically damped gains at 4 rad/s translation and 25 rad/s attitude.
    pub fn for_quad(quad: &QuadParams) -> Self {
        Self { gains: PdGains::critically_damped(quad, 4.0, 25.0), delay_steps: 0, control_dt: 0.01, sim_dt: 1e-3 }
    }

    pub fn validate(&self) -> Result<(), InvalidParameter> {
        self.gains.validate()?;
        require(self.sim_dt > 0.0 && self.sim_dt.is_finite(), "disturbance.sim_dt", "must be > 0")?;
        require(
            self.control_dt >= self.sim_dt && self.control_dt.is_finite(),
            "disturbance.control_dt",
            "must be >= sim_dt",
        )
    }
}

/// One run of the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisturbanceCase {
    /// Reactive thrust control on; otherwise both rotors hold hover thrust.
    pub control: bool,
    /// Arm masses and inertias scaled by the amplification factor.
    pub amplified: bool,
    pub delay_steps: usize,
}

impl DisturbanceCase {
    pub fn label(&self) -> &'static str {
        match (self.control, self.amplified) {
            (false, false) => "nominal_no_control",
            (true, false) => "nominal_control",
            (false, true) => "amplified_no_control",
            (true, true) => "amplified_control",
        }
    }

    /// `{no control, control} x {nominal, amplified}` at the given delay.
    pub fn grid(delay_steps: usize) -> [DisturbanceCase; 4] {
        let c = |control, amplified| DisturbanceCase { control, amplified, delay_steps };
        [c(false, false), c(true, false), c(false, true), c(true, true)]
    }
}

/// Sampled once per control tick and once at the end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub planned: Vec2,
    pub actual: Vec2,
    pub alpha: f64,
    /// Total arm moment on the body (N m).
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationTrace {
    pub case: DisturbanceCase,
    pub rows: Vec<TraceRow>,
    /// Largest distance between actual and planned base position over every
    /// integration step.
    pub max_deviation: f64,
    pub max_abs_alpha: f64,
    pub alpha_violated: bool,
    /// Mean end-effector distance to the target at the trajectory samples
    /// reached before any abort.
    pub tracking_ade: f64,
    /// Set when arm or body integration produced a non-finite state; the
    /// trace stops there.
    pub blow_up: bool,
}

/// Co-simulates arm and body for one case, with the greedy policy of `table`
/// choosing joint torques at every trajectory sample.
pub fn simulate(
    env: &TrackingEnv,
    table: &QTable,
    quad: &QuadParams,
    config: &DisturbanceConfig,
    mass_amplification: f64,
    case: &DisturbanceCase,
) -> DeviationTrace {
    let model = *env.arm();
    let arm = if case.amplified { model.with_mass_scale(mass_amplification) } else { model };
    let plan = env.base();
    let target = env.target();
    let disc = env.discretizer();
    let servo = env.servo();

    let dt = plan.dt();
    let per_sample = round_count(dt / config.sim_dt);
    let h = dt / per_sample as f64;
    let per_tick = round_count(config.control_dt / h);
    let total = (plan.len() - 1) * per_sample;

    let mut body = QuadState::default();
    let mut controller = ReactiveController::new(config.gains, case.delay_steps, body);
    let hover = quad.hover_thrust();
    let mut thrust = (hover, hover);
    let mut joint = env.initial_state();
    let mut command = [0.0; 2];
    let mut deviation_accel = Vec2::ZERO;
    let mut moment = 0.0;

    let mut rows = Vec::with_capacity(total / per_tick + 2);
    let mut max_deviation: f64 = 0.0;
    let mut max_abs_alpha: f64 = 0.0;
    let mut blow_up = false;
    let mut tracking_sum = 0.0;
    let mut tracking_count = 0usize;

    let planned_at = |k: usize| {
        let i = (k / per_sample).min(plan.len() - 1);
        let frac = (k % per_sample) as f64 / per_sample as f64;
        if i + 1 < plan.len() {
            plan.point(i).lerp(plan.point(i + 1), frac)
        } else {
            plan.point(i)
        }
    };

    let mut k = 0;
    while k < total {
        let i = k / per_sample;
        if k % per_sample == 0 {
            if i > 0 {
                tracking_sum += end_effector(&arm, &body, planned_at(k), &joint).distance(target.point(i));
                tracking_count += 1;
            }
            let s = encode_state(disc, &joint, i);
            command = disc.torque(table.greedy_action(s));
        }
        if k % per_tick == 0 {
            if case.control {
                thrust = controller.command(quad, &body, &Reference::default());
            }
            rows.push(row(k as f64 * h, planned_at(k), &body, moment));
        }

        let base_accel = arm_frame_accel(&arm, body.alpha, plan.acceleration(i) + deviation_accel);
        let torque = clamp_torque(&arm, servo.torque(&model, &joint, command));
        let ddq = joint_accelerations(&arm, &joint, torque, base_accel);
        moment = moment_report(&arm, joint.q1, joint.q2, body.alpha, ddq[0], ddq[1]).m_total;
        let a = quad_accelerations(quad, body.alpha, thrust.0.clamp(0.0, quad.u_max), thrust.1.clamp(0.0, quad.u_max), moment);
        deviation_accel = Vec2::new(a[0], a[1]);

        let next_joint = arm_step(&arm, &joint, torque, base_accel, h);
        let next_body = quad_step(quad, &body, thrust.0, thrust.1, moment, h);
        match (next_joint, next_body) {
            (Ok(j), Ok(b)) => {
                joint = j;
                body = b;
            }
            _ => {
                blow_up = true;
                break;
            }
        }
        k += 1;
        max_deviation = max_deviation.max(body.position().norm());
        max_abs_alpha = max_abs_alpha.max(body.alpha.abs());
    }
    if !blow_up {
        let last = plan.len() - 1;
        tracking_sum += end_effector(&arm, &body, plan.point(last), &joint).distance(target.point(last));
        tracking_count += 1;
    }
    rows.push(row(k as f64 * h, planned_at(k), &body, moment));

    DeviationTrace {
        case: *case,
        rows,
        max_deviation,
        max_abs_alpha,
        alpha_violated: max_abs_alpha > quad.alpha_max,
        tracking_ade: if tracking_count > 0 { tracking_sum / tracking_count as f64 } else { 0.0 },
        blow_up,
    }
}

/// Runs the four standard cases at the configured delay.
pub fn study(
    env: &TrackingEnv,
    table: &QTable,
    quad: &QuadParams,
    config: &DisturbanceConfig,
    mass_amplification: f64,
) -> Vec<DeviationTrace> {
    DisturbanceCase::grid(config.delay_steps)
        .iter()
        .map(|case| simulate(env, table, quad, config, mass_amplification, case))
        .collect()
}

fn round_count(ratio: f64) -> usize {
    (libm::round(ratio) as usize).max(1)
}

fn row(t: f64, planned: Vec2, body: &QuadState, moment: f64) -> TraceRow {
    TraceRow { t, planned, actual: planned + body.position(), alpha: body.alpha, moment }
}

/// World end-effector position of an arm mounted on a body tilted by
/// `body.alpha`.
fn end_effector(arm: &ArmParams, body: &QuadState, planned: Vec2, joint: &crate::arm::JointState) -> Vec2 {
    planned + body.position() + forward_kinematics(arm, joint.q1, joint.q2).rotated(body.alpha)
}

/// World base acceleration expressed as the equivalent acceleration input of
/// the upright arm model: rotated into the body frame, plus the part of
/// gravity that tilting moves off the body axis.
fn arm_frame_accel(arm: &ArmParams, alpha: f64, world: Vec2) -> Vec2 {
    let down = Vec2::new(0.0, -arm.g);
    world.rotated(-alpha) - (down.rotated(-alpha) - down)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upright_body_passes_acceleration_through() {
        let arm = ArmParams::default();
        let a = Vec2::new(0.3, -1.2);
        let out = arm_frame_accel(&arm, 0.0, a);
        assert_eq!(out, a);
    }

    #[test]
    fn tilted_body_at_rest_sees_sideways_gravity() {
        let arm = ArmParams::default();
        // Body axis leans toward -x: gravity gains a -x body component, the
        // same load as a base accelerating toward +x.
        let out = arm_frame_accel(&arm, 0.1, Vec2::ZERO);
        let expect = -(Vec2::new(0.0, -arm.g).rotated(-0.1) - Vec2::new(0.0, -arm.g));
        assert!((out.x - expect.x).abs() < 1e-15 && (out.y - expect.y).abs() < 1e-15);
        assert!(out.x > 0.0);
    }

    #[test]
    fn case_labels_are_distinct() {
        let grid = DisturbanceCase::grid(0);
        for (i, a) in grid.iter().enumerate() {
            for b in &grid[i + 1..] {
                assert_ne!(a.label(), b.label());
            }
        }
    }
}
