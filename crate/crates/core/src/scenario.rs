//! Reference scenario and the glue that runs the three pipeline stages on it.

use alloc::vec::Vec;
use core::fmt;

use crate::arm::ArmParams;
use crate::disturb::DisturbanceConfig;
use crate::corridor::{compute_corridor, Circle, CorridorError, FeasibleCorridor};
use crate::error::{require, InvalidParameter};
use crate::math::Vec2;
use crate::planner::{plan_base_path, BasePlan, Obstacle, PlanError, PlannerConfig};
use crate::qlearn::tracking::{EnvError, JointServo};
use crate::qlearn::{Discretizer, LearnConfig, TrackingEnv};
use crate::quad::QuadParams;
use crate::trajectory::{TargetShape, Trajectory, TrajectoryError};

/// Everything needed to run plan, train and disturbance experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub arm: ArmParams,
    pub quad: QuadParams,
    pub target: TargetSource,
    pub grid_resolution: f64,
    /// Reachability margin (m).
    pub margin: f64,
    /// Base start position; `None` picks the corridor cell nearest to the
    /// point `preferred_height` below the first target sample.
    pub start: Option<Vec2>,
    /// Vertical base-to-target offset used when `start` is `None`, as a
    /// fraction of the arm reach.
    pub preferred_height: f64,
    pub obstacles: Vec<Obstacle>,
    pub planner: PlannerConfig,
    pub learn: LearnConfig,
    pub angle_bins: usize,
    pub torque_levels: usize,
    pub servo: JointServo,
    /// Arm integration step (s).
    pub sim_dt: f64,
    pub mass_amplification: f64,
    pub disturbance: DisturbanceConfig,
}

/// Where the target end-effector trajectory comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSource {
    /// `samples` points of `shape`, `dt` seconds apart.
    Generated { shape: TargetShape, samples: usize, dt: f64 },
    Recorded(Trajectory),
}

impl TargetSource {
    /// Trajectory and control timestep (s).
    pub fn dt(&self) -> f64 {
        match self {
            TargetSource::Generated { dt, .. } => *dt,
            TargetSource::Recorded(t) => t.dt(),
        }
    }

    pub fn samples(&self) -> usize {
        match self {
            TargetSource::Generated { samples, .. } => *samples,
            TargetSource::Recorded(t) => t.len(),
        }
    }

    pub fn trajectory(&self) -> Result<Trajectory, TrajectoryError> {
        match self {
            TargetSource::Generated { shape, samples, dt } => shape.sample(*samples, *dt),
            TargetSource::Recorded(t) => Ok(t.clone()),
        }
    }
}

impl Default for Scenario {
    fn default() -> Self {
        let arm = ArmParams::default();
        let quad = QuadParams::default();
        let dt = 0.1;
        Self {
            arm,
            quad,
            target: TargetSource::Generated {
                shape: TargetShape::Sine { origin: Vec2::new(0.0, 2.0), length: 1.5, amplitude: 0.25, cycles: 1.0 },
                samples: 21,
                dt,
            },
            grid_resolution: 0.05,
            margin: 0.05 * arm.reach(),
            start: None,
            preferred_height: 0.7,
            obstacles: Vec::new(),
            planner: PlannerConfig { dt, smoothing_passes: 20, ..PlannerConfig::default() },
            learn: LearnConfig { d_max: 0.25 * arm.reach(), ..LearnConfig::default() },
            angle_bins: 25,
            torque_levels: 3,
            servo: JointServo { damping: 2.0, gravity_feedforward: true },
            sim_dt: 1e-3,
            mass_amplification: 4.0,
            disturbance: DisturbanceConfig::for_quad(&quad),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    Config(InvalidParameter),
    Trajectory(TrajectoryError),
    Corridor(CorridorError),
    Plan(PlanError),
    Env(EnvError),
}

impl PipelineError {
    /// Index of the target sample that made the mission infeasible, if any.
    pub fn blocking_index(&self) -> Option<usize> {
        match self {
            PipelineError::Corridor(CorridorError::Empty { index }) => Some(*index),
            PipelineError::Plan(PlanError::NoFeasiblePath { index }) => Some(*index),
            _ => None,
        }
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            PipelineError::Corridor(CorridorError::Empty { .. })
                | PipelineError::Plan(PlanError::NoFeasiblePath { .. } | PlanError::StartOutsideCorridor)
                | PipelineError::Env(EnvError::InitialUnreachable(_))
        )
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Config(e) => write!(f, "{e}"),
            PipelineError::Trajectory(e) => write!(f, "target trajectory: {e}"),
            PipelineError::Corridor(e) => write!(f, "corridor: {e}"),
            PipelineError::Plan(e) => write!(f, "planner: {e}"),
            PipelineError::Env(e) => write!(f, "learning environment: {e}"),
        }
    }
}

impl core::error::Error for PipelineError {}

/// Outputs of the first two pipeline stages.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanArtifacts {
    pub target: Trajectory,
    pub corridor: FeasibleCorridor,
    pub plan: BasePlan,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), InvalidParameter> {
        self.arm.validate()?;
        self.quad.validate()?;
        self.planner.validate()?;
        self.learn.validate()?;
        self.disturbance.validate()?;
        for o in &self.obstacles {
            o.validate()?;
        }
        let dt = self.target.dt();
        require(self.target.samples() >= 2, "target.samples", "must be >= 2")?;
        require(dt > 0.0 && dt.is_finite(), "target.dt", "must be > 0")?;
        require((self.planner.dt - dt).abs() <= 1e-9 * dt, "planner.dt", "must equal the trajectory dt")?;
        require(self.grid_resolution > 0.0, "grid_resolution", "must be > 0")?;
        let max_margin = (self.arm.reach() - (self.arm.l1 - self.arm.l2).abs()) / 2.0;
        require(self.margin >= 0.0 && self.margin < max_margin, "margin", "must lie in [0, (l1+l2-|l1-l2|)/2)")?;
        require(self.angle_bins >= 2, "angle_bins", "must be >= 2")?;
        require(self.torque_levels >= 3 && self.torque_levels % 2 == 1, "torque_levels", "must be odd and >= 3")?;
        require(self.sim_dt > 0.0 && self.sim_dt <= dt, "sim_dt", "must lie in (0, dt]")?;
        require(self.mass_amplification >= 1.0, "mass_amplification", "must be >= 1")
    }

    pub fn target_trajectory(&self) -> Result<Trajectory, PipelineError> {
        self.target.trajectory().map_err(PipelineError::Trajectory)
    }

    /// Static obstacles block corridor cells outright; moving ones are left
    /// to the planner's TTC check.
    pub fn static_circles(&self) -> Vec<Circle> {
        self.obstacles
            .iter()
            .filter(|o| o.is_static())
            .map(|o| Circle { center: o.center, radius: o.radius })
            .collect()
    }

    pub fn corridor(&self, target: &Trajectory) -> Result<FeasibleCorridor, PipelineError> {
        compute_corridor(target, &self.arm, self.grid_resolution, self.margin, &self.static_circles())
            .map_err(PipelineError::Corridor)
    }

    pub fn start_position(&self, target: &Trajectory, corridor: &FeasibleCorridor) -> Vec2 {
        if let Some(s) = self.start {
            return s;
        }
        let want = target.point(0) - Vec2::new(0.0, self.preferred_height * self.arm.reach());
        let grid = corridor.grid;
        corridor
            .cells(0)
            .iter()
            .map(|&c| grid.center(c))
            .min_by(|a, b| a.distance(want).total_cmp(&b.distance(want)))
            .expect("corridor sets are never empty")
    }

    /// Target sampling, corridor construction and base planning.
    pub fn plan(&self) -> Result<PlanArtifacts, PipelineError> {
        self.validate().map_err(PipelineError::Config)?;
        let target = self.target_trajectory()?;
        let corridor = self.corridor(&target)?;
        let start = self.start_position(&target, &corridor);
        let plan = plan_base_path(&corridor, start, &self.obstacles, &self.planner).map_err(PipelineError::Plan)?;
        Ok(PlanArtifacts { target, corridor, plan })
    }

    pub fn discretizer(&self) -> Discretizer {
        Discretizer::uniform(&self.arm, self.angle_bins, self.target.samples(), self.torque_levels)
    }

    pub fn tracking_env(&self, artifacts: &PlanArtifacts) -> Result<TrackingEnv, PipelineError> {
        TrackingEnv::new(
            self.arm,
            artifacts.plan.trajectory.clone(),
            artifacts.target.clone(),
            self.discretizer(),
            self.servo,
            self.learn.d_max,
            self.sim_dt,
        )
        .map_err(PipelineError::Env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_is_valid_and_plans() {
        let s = Scenario::default();
        s.validate().unwrap();
        let a = s.plan().unwrap();
        assert_eq!(a.plan.trajectory.len(), s.target.samples());
        assert_eq!(a.plan.min_ttc_along_path, None);
        s.tracking_env(&a).unwrap();
    }

    #[test]
    fn blocking_index_surfaces() {
        let e = PipelineError::Plan(PlanError::NoFeasiblePath { index: 4 });
        assert_eq!(e.blocking_index(), Some(4));
        assert!(e.is_infeasible());
        assert!(!PipelineError::Config(InvalidParameter::new("x", "y")).is_infeasible());
    }
}
