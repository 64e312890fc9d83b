//! End-effector tracking environment: the base follows its planned path
//! while the agent picks discretized joint torques so that the arm tip
//! follows the target trajectory.

use alloc::vec::Vec;
use core::fmt;

use super::{greedy_episode, run_episode, Environment, Mode, QTable, StepKind, Transition};
use crate::arm::{
    arm_advance, arm_step, forward_kinematics, gravity_compensation, inverse_kinematics, ArmParams, Interval, JointState,
    Unreachable,
};
use crate::error::{require, InvalidParameter, NumericalBlowUp};
use crate::math::Vec2;
use crate::trajectory::Trajectory;

/// Uniform bins over a closed interval; values outside are clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bins {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Bins {
    pub fn index(&self, v: f64) -> usize {
        let frac = (v - self.lo) / (self.hi - self.lo);
        let i = libm::floor(frac * self.count as f64);
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(self.count - 1)
        }
    }
}

/// State and action discretization.
///
/// State ids enumerate `(step bin, q1 bin, q2 bin)` in row-major order;
/// action ids enumerate `(joint-1 level, joint-2 level)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    pub q1: Bins,
    pub q2: Bins,
    pub step_bins: usize,
    /// Number of trajectory samples the step bins cover.
    pub horizon: usize,
    pub tau_levels: Vec<f64>,
}

impl Discretizer {
    /// `angle_bins` per joint over the joint limits, one step bin per
    /// trajectory sample, and `levels` evenly spaced torques in
    /// `[-tau_max, tau_max]`.
    pub fn uniform(arm: &ArmParams, angle_bins: usize, horizon: usize, levels: usize) -> Self {
        let bins = |i: Interval| Bins { lo: i.lo, hi: i.hi, count: angle_bins };
        let tau_levels = if levels < 2 {
            alloc::vec![0.0]
        } else {
            (0..levels)
                .map(|k| arm.tau_max * (2.0 * k as f64 / (levels - 1) as f64 - 1.0))
                .collect()
        };
        Self { q1: bins(arm.q1_limits), q2: bins(arm.q2_limits), step_bins: horizon, horizon, tau_levels }
    }

    pub fn validate(&self, tau_max: f64) -> Result<(), InvalidParameter> {
        require(self.q1.count >= 2 && self.q2.count >= 2, "angle_bins", "must be >= 2")?;
        require(self.q1.hi > self.q1.lo && self.q2.hi > self.q2.lo, "angle_bins", "bounds must be increasing")?;
        require(self.step_bins >= 2 && self.horizon >= 2, "step_bins", "must be >= 2")?;
        let l = &self.tau_levels;
        require(l.windows(2).all(|w| w[0] < w[1]), "tau_levels", "must be strictly increasing")?;
        require(l.iter().all(|t| t.abs() <= tau_max), "tau_levels", "must lie within +-tau_max")?;
        require(l.contains(&0.0), "tau_levels", "must include 0")?;
        let symmetric = l.iter().zip(l.iter().rev()).all(|(a, b)| (a + b).abs() <= 1e-12 * tau_max);
        require(symmetric, "tau_levels", "must be symmetric about 0")
    }

    pub fn n_states(&self) -> usize {
        self.q1.count * self.q2.count * self.step_bins
    }

    pub fn n_actions(&self) -> usize {
        self.tau_levels.len() * self.tau_levels.len()
    }

    pub fn step_bin(&self, step_index: usize) -> usize {
        if self.step_bins == self.horizon {
            return step_index.min(self.step_bins - 1);
        }
        (step_index * self.step_bins / self.horizon).min(self.step_bins - 1)
    }

    pub fn torque(&self, action: usize) -> [f64; 2] {
        let n = self.tau_levels.len();
        [self.tau_levels[action / n], self.tau_levels[action % n]]
    }
}

/// Deterministic state id for a joint state at trajectory index `step_index`.
pub fn encode_state(disc: &Discretizer, joint: &JointState, step_index: usize) -> usize {
    let b1 = disc.q1.index(joint.q1);
    let b2 = disc.q2.index(joint.q2);
    (disc.step_bin(step_index) * disc.q1.count + b1) * disc.q2.count + b2
}

/// Linear distance reward: 10 at the target, falling to 0 at `d_max`.
pub fn reward(ee_position: Vec2, target: Vec2, d_max: f64) -> f64 {
    let d = ee_position.distance(target);
    10.0 * (1.0 - d / d_max).max(0.0)
}

/// Joint-level inner loop between the agent and the actuators: every
/// integration step the applied torque is the agent's command plus optional
/// gravity feed-forward minus `damping * q'`, clamped to `tau_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointServo {
    /// Velocity feedback gain (N m s/rad).
    pub damping: f64,
    pub gravity_feedforward: bool,
}

impl JointServo {
    /// Raw torque pass-through.
    pub const OFF: JointServo = JointServo { damping: 0.0, gravity_feedforward: false };

    pub fn validate(&self) -> Result<(), InvalidParameter> {
        require(self.damping >= 0.0 && self.damping.is_finite(), "servo.damping", "must be >= 0")
    }

    pub fn torque(&self, arm: &ArmParams, state: &JointState, command: [f64; 2]) -> [f64; 2] {
        let mut tau = [command[0] - self.damping * state.dq1, command[1] - self.damping * state.dq2];
        if self.gravity_feedforward {
            let g = gravity_compensation(arm, state.q1, state.q2);
            tau[0] += g[0];
            tau[1] += g[1];
        }
        tau
    }

    /// Holds `command` for `duration` seconds in steps no longer than `max_dt`.
    pub fn advance(
        &self,
        arm: &ArmParams,
        state: &JointState,
        command: [f64; 2],
        base_accel: Vec2,
        duration: f64,
        max_dt: f64,
    ) -> Result<JointState, NumericalBlowUp> {
        if *self == JointServo::OFF {
            return arm_advance(arm, state, command, base_accel, duration, max_dt);
        }
        let steps = libm::ceil(duration / max_dt - 1e-9).max(1.0) as usize;
        let h = duration / steps as f64;
        let mut s = *state;
        for _ in 0..steps {
            s = arm_step(arm, &s, self.torque(arm, &s, command), base_accel, h)?;
        }
        Ok(s)
    }
}

/// Reward recorded for the step on which the dynamics blew up.
pub const BLOW_UP_PENALTY: f64 = -10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeReport {
    pub avg_reward: f64,
    pub rmse: f64,
    pub ade: f64,
    /// `100 * (1 - ade / (l1 + l2))`.
    pub accuracy_pct: f64,
    pub tracked_trajectory: Trajectory,
    /// Set when integration produced a non-finite state.
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvError {
    LengthMismatch { base: usize, target: usize },
    TimestepMismatch,
    InvalidParameter(InvalidParameter),
    /// The arm cannot reach the first target sample from the first base point.
    InitialUnreachable(Unreachable),
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::LengthMismatch { base, target } => {
                write!(f, "base plan has {base} samples but target has {target}")
            }
            EnvError::TimestepMismatch => f.write_str("base plan and target use different timesteps"),
            EnvError::InvalidParameter(e) => write!(f, "{e}"),
            EnvError::InitialUnreachable(e) => write!(f, "initial target unreachable: {e}"),
        }
    }
}

impl core::error::Error for EnvError {}

impl From<InvalidParameter> for EnvError {
    fn from(e: InvalidParameter) -> Self {
        EnvError::InvalidParameter(e)
    }
}

/// Episodic tracking task. Every episode starts with the arm at rest on the
/// inverse-kinematics solution for the first target sample; each step holds
/// one torque pair for one trajectory interval while the base accelerates
/// along its plan.
#[derive(Debug, Clone)]
pub struct TrackingEnv {
    arm: ArmParams,
    base: Trajectory,
    target: Trajectory,
    disc: Discretizer,
    servo: JointServo,
    d_max: f64,
    sim_dt: f64,
    initial: JointState,
    base_accel: Vec<Vec2>,
    joint: JointState,
    step: usize,
    path: Vec<Vec2>,
    aborted: bool,
}

impl TrackingEnv {
    pub fn new(
        arm: ArmParams,
        base: Trajectory,
        target: Trajectory,
        disc: Discretizer,
        servo: JointServo,
        d_max: f64,
        sim_dt: f64,
    ) -> Result<Self, EnvError> {
        arm.validate()?;
        servo.validate()?;
        disc.validate(arm.tau_max)?;
        require(d_max > 0.0 && d_max.is_finite(), "d_max", "must be > 0")?;
        require(sim_dt > 0.0 && sim_dt.is_finite(), "sim_dt", "must be > 0")?;
        if base.len() != target.len() {
            return Err(EnvError::LengthMismatch { base: base.len(), target: target.len() });
        }
        if (base.dt() - target.dt()).abs() > 1e-9 * target.dt() {
            return Err(EnvError::TimestepMismatch);
        }
        let (q1, q2) = inverse_kinematics(&arm, target.point(0) - base.point(0)).map_err(EnvError::InitialUnreachable)?;
        let initial = JointState::at_rest(q1, q2);
        let base_accel = (0..base.len()).map(|i| base.acceleration(i)).collect();
        let mut env = Self {
            arm,
            base,
            target,
            disc,
            servo,
            d_max,
            sim_dt,
            initial,
            base_accel,
            joint: initial,
            step: 0,
            path: Vec::new(),
            aborted: false,
        };
        env.reset();
        Ok(env)
    }

    pub fn arm(&self) -> &ArmParams {
        &self.arm
    }

    pub fn discretizer(&self) -> &Discretizer {
        &self.disc
    }

    pub fn base(&self) -> &Trajectory {
        &self.base
    }

    pub fn target(&self) -> &Trajectory {
        &self.target
    }

    pub fn initial_state(&self) -> JointState {
        self.initial
    }

    pub fn servo(&self) -> &JointServo {
        &self.servo
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn sim_dt(&self) -> f64 {
        self.sim_dt
    }

    pub fn horizon(&self) -> usize {
        self.target.len()
    }

    /// End-effector positions visited in the current episode.
    pub fn path(&self) -> &[Vec2] {
        &self.path
    }

    fn ee_at(&self, index: usize, joint: &JointState) -> Vec2 {
        self.base.point(index) + forward_kinematics(&self.arm, joint.q1, joint.q2)
    }

    /// Metrics of the episode that just finished.
    pub fn report(&self, avg_reward: f64) -> EpisodeReport {
        let n = self.target.len();
        let mut points = self.path.clone();
        let last = *points.last().expect("path holds the initial point");
        points.resize(n, last);
        let errors: Vec<f64> = (1..n).map(|i| points[i].distance(self.target.point(i))).collect();
        let count = errors.len() as f64;
        let ade = errors.iter().sum::<f64>() / count;
        let rmse = libm::sqrt(errors.iter().map(|e| e * e).sum::<f64>() / count);
        let accuracy_pct = 100.0 * (1.0 - ade / self.arm.reach());
        let tracked_trajectory =
            Trajectory::from_points(points, self.target.samples()[0].t, self.target.dt()).expect("same shape as target");
        EpisodeReport { avg_reward, rmse, ade, accuracy_pct, tracked_trajectory, aborted: self.aborted }
    }

    /// Runs one episode in the given mode and reports its metrics.
    pub fn run_episode(&mut self, table: &mut QTable, lr: f64, gamma: f64, mode: Mode<'_>) -> EpisodeReport {
        let stats = run_episode(self, table, lr, gamma, mode);
        self.report(stats.avg_reward())
    }

    /// Greedy rollout of `table`; the table is not modified.
    pub fn evaluate(&mut self, table: &QTable) -> EpisodeReport {
        let stats = greedy_episode(self, table);
        self.report(stats.avg_reward())
    }
}

impl Environment for TrackingEnv {
    fn n_states(&self) -> usize {
        self.disc.n_states()
    }

    fn n_actions(&self) -> usize {
        self.disc.n_actions()
    }

    fn reset(&mut self) -> usize {
        self.joint = self.initial;
        self.step = 0;
        self.aborted = false;
        self.path.clear();
        self.path.reserve(self.target.len());
        self.path.push(self.ee_at(0, &self.initial));
        encode_state(&self.disc, &self.joint, 0)
    }

    fn step(&mut self, action: usize) -> Transition {
        let torque = self.disc.torque(action);
        let accel = self.base_accel[self.step];
        let next = self.servo.advance(&self.arm, &self.joint, torque, accel, self.target.dt(), self.sim_dt);
        let state_here = encode_state(&self.disc, &self.joint, self.step);
        match next {
            Err(_) => {
                self.aborted = true;
                Transition { reward: BLOW_UP_PENALTY, next_state: state_here, kind: StepKind::Terminal }
            }
            Ok(joint) => {
                self.joint = joint;
                self.step += 1;
                let ee = self.ee_at(self.step, &joint);
                self.path.push(ee);
                let r = reward(ee, self.target.point(self.step), self.d_max);
                let kind = if self.step + 1 >= self.target.len() { StepKind::Terminal } else { StepKind::Continue };
                Transition { reward: r, next_state: encode_state(&self.disc, &joint, self.step), kind }
            }
        }
    }
}
