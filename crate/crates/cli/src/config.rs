//! Scenario configuration files: TOML with one section per subsystem. Every
//! key is optional and falls back to the reference scenario; unknown keys are
//! rejected.

use std::fs;
use std::path::{Path, PathBuf};

use aeroarm_core::arm::{ArmParams, Interval};
use aeroarm_core::disturb::DisturbanceConfig;
use aeroarm_core::planner::PlannerConfig;
use aeroarm_core::qlearn::tracking::JointServo;
use aeroarm_core::qlearn::{Decay, EpsilonSchedule, LearnConfig};
use aeroarm_core::quad::{PdGains, QuadParams};
use aeroarm_core::scenario::{Scenario, TargetSource};
use aeroarm_core::trajectory::TargetShape;
use aeroarm_core::Vec2;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Root seed for training and sweeps.
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Arm mass and inertia factor of the amplified disturbance runs.
    pub mass_amplification: f64,
    pub arm: ArmSection,
    pub quad: QuadSection,
    pub target: TargetSection,
    pub obstacles: ObstacleSection,
    pub corridor: CorridorSection,
    pub planner: PlannerSection,
    pub learn: LearnSection,
    pub disturbance: DisturbanceSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArmSection {
    pub l1: f64,
    pub l2: f64,
    pub lc1: f64,
    pub lc2: f64,
    pub m1: f64,
    pub m2: f64,
    pub i1: f64,
    pub i2: f64,
    pub g: f64,
    pub q1_limits: [f64; 2],
    pub q2_limits: [f64; 2],
    pub tau_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadSection {
    pub m_o: f64,
    pub i_o: f64,
    pub r_arm: f64,
    pub g: f64,
    pub u_max: f64,
    pub alpha_max: f64,
}

/// Built-in generator parameters are optional; a missing one takes the
/// reference value and one that belongs to another generator is an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    /// `sine`, `line`, `arc` or `file`.
    pub generator: String,
    pub samples: usize,
    pub dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub end: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObstacleSection {
    /// CSV with header `x,y,radius,vx,vy`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorridorSection {
    pub grid_resolution: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerSection {
    pub v_max: f64,
    pub ttc_threshold: f64,
    pub ttc_penalty: f64,
    pub smoothing_passes: usize,
    /// Fraction of the arm reach between the first target sample and the
    /// automatically chosen start cell.
    pub preferred_height: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnSection {
    pub episodes: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// `exponential` or `linear`.
    pub epsilon_decay: String,
    pub epsilon_decay_fraction: f64,
    pub d_max: f64,
    pub angle_bins: usize,
    pub torque_levels: usize,
    pub sim_dt: f64,
    pub servo_damping: f64,
    pub gravity_feedforward: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisturbanceSection {
    pub delay_steps: usize,
    pub control_dt: f64,
    pub sim_dt: f64,
    /// PD gains; any left out take the critically damped value for the
    /// configured quad.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kp_pos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kd_pos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kp_att: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kd_att: Option<f64>,
}

fn pair(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn vec2(p: [f64; 2]) -> Vec2 {
    Vec2::new(p[0], p[1])
}

impl Default for ArmSection {
    fn default() -> Self {
        Self::from_params(&Scenario::default().arm)
    }
}

impl ArmSection {
    fn from_params(a: &ArmParams) -> Self {
        Self {
            l1: a.l1,
            l2: a.l2,
            lc1: a.lc1,
            lc2: a.lc2,
            m1: a.m1,
            m2: a.m2,
            i1: a.i1,
            i2: a.i2,
            g: a.g,
            q1_limits: [a.q1_limits.lo, a.q1_limits.hi],
            q2_limits: [a.q2_limits.lo, a.q2_limits.hi],
            tau_max: a.tau_max,
        }
    }

    fn params(&self) -> ArmParams {
        ArmParams {
            l1: self.l1,
            l2: self.l2,
            lc1: self.lc1,
            lc2: self.lc2,
            m1: self.m1,
            m2: self.m2,
            i1: self.i1,
            i2: self.i2,
            g: self.g,
            q1_limits: Interval::new(self.q1_limits[0], self.q1_limits[1]),
            q2_limits: Interval::new(self.q2_limits[0], self.q2_limits[1]),
            tau_max: self.tau_max,
        }
    }
}

impl Default for QuadSection {
    fn default() -> Self {
        let q = Scenario::default().quad;
        Self { m_o: q.m_o, i_o: q.i_o, r_arm: q.r_arm, g: q.g, u_max: q.u_max, alpha_max: q.alpha_max }
    }
}

impl QuadSection {
    fn params(&self) -> QuadParams {
        QuadParams {
            m_o: self.m_o,
            i_o: self.i_o,
            r_arm: self.r_arm,
            g: self.g,
            u_max: self.u_max,
            alpha_max: self.alpha_max,
        }
    }
}

impl Default for TargetSection {
    fn default() -> Self {
        let s = Scenario::default();
        let TargetSource::Generated { samples, dt, .. } = s.target else {
            unreachable!("the reference target is generated")
        };
        Self {
            generator: "sine".into(),
            samples,
            dt,
            file: None,
            origin: None,
            length: None,
            amplitude: None,
            cycles: None,
            start: None,
            end: None,
            center: None,
            radius: None,
            from: None,
            to: None,
        }
    }
}

impl TargetSection {
    fn source(&self, base_dir: &Path) -> Result<TargetSource, CliError> {
        let reference = match Scenario::default().target {
            TargetSource::Generated { shape, .. } => shape,
            TargetSource::Recorded(_) => unreachable!("the reference target is generated"),
        };
        let TargetShape::Sine { origin: r_origin, length: r_length, amplitude: r_amplitude, cycles: r_cycles } = reference
        else {
            unreachable!("the reference target is a sine sweep")
        };
        let used: &[(&str, bool)] = &[
            ("file", self.file.is_some()),
            ("origin", self.origin.is_some()),
            ("length", self.length.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("cycles", self.cycles.is_some()),
            ("start", self.start.is_some()),
            ("end", self.end.is_some()),
            ("center", self.center.is_some()),
            ("radius", self.radius.is_some()),
            ("from", self.from.is_some()),
            ("to", self.to.is_some()),
        ];
        let allowed: &[&str] = match self.generator.as_str() {
            "sine" => &["origin", "length", "amplitude", "cycles"],
            "line" => &["start", "end"],
            "arc" => &["center", "radius", "from", "to"],
            "file" => &["file"],
            other => {
                return Err(CliError::Config(format!(
                    "target.generator: unknown generator {other:?} (expected sine, line, arc or file)"
                )))
            }
        };
        if let Some((key, _)) = used.iter().find(|(k, set)| *set && !allowed.contains(k)) {
            return Err(CliError::Config(format!(
                "target.{key} does not apply to generator {:?}",
                self.generator
            )));
        }
        let shape = match self.generator.as_str() {
            "sine" => TargetShape::Sine {
                origin: self.origin.map_or(r_origin, vec2),
                length: self.length.unwrap_or(r_length),
                amplitude: self.amplitude.unwrap_or(r_amplitude),
                cycles: self.cycles.unwrap_or(r_cycles),
            },
            "line" => TargetShape::Line {
                start: self.start.map_or(r_origin, vec2),
                end: self.end.map_or(r_origin + Vec2::new(r_length, 0.0), vec2),
            },
            "arc" => TargetShape::Arc {
                center: self.center.map_or(r_origin - Vec2::new(0.0, 0.5), vec2),
                radius: self.radius.unwrap_or(0.5),
                from: self.from.unwrap_or(0.0),
                to: self.to.unwrap_or(core::f64::consts::PI),
            },
            _ => {
                let file = self
                    .file
                    .as_ref()
                    .ok_or_else(|| CliError::Config("target.file is required for generator \"file\"".into()))?;
                return Ok(TargetSource::Recorded(io::read_target(&resolve(base_dir, file))?));
            }
        };
        Ok(TargetSource::Generated { shape, samples: self.samples, dt: self.dt })
    }
}

impl Default for CorridorSection {
    fn default() -> Self {
        let s = Scenario::default();
        Self { grid_resolution: s.grid_resolution, margin: s.margin }
    }
}

impl Default for PlannerSection {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            v_max: s.planner.v_max,
            ttc_threshold: s.planner.ttc_threshold,
            ttc_penalty: s.planner.ttc_penalty,
            smoothing_passes: s.planner.smoothing_passes,
            preferred_height: s.preferred_height,
            start: s.start.map(pair),
        }
    }
}

impl Default for LearnSection {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            episodes: s.learn.episodes,
            learning_rate: s.learn.learning_rate,
            discount: s.learn.discount,
            epsilon_start: s.learn.epsilon.start,
            epsilon_end: s.learn.epsilon.end,
            epsilon_decay: decay_name(s.learn.epsilon.decay).into(),
            epsilon_decay_fraction: s.learn.epsilon.decay_fraction,
            d_max: s.learn.d_max,
            angle_bins: s.angle_bins,
            torque_levels: s.torque_levels,
            sim_dt: s.sim_dt,
            servo_damping: s.servo.damping,
            gravity_feedforward: s.servo.gravity_feedforward,
        }
    }
}

fn decay_name(d: Decay) -> &'static str {
    match d {
        Decay::Exponential => "exponential",
        Decay::Linear => "linear",
    }
}

impl Default for DisturbanceSection {
    fn default() -> Self {
        let d = Scenario::default().disturbance;
        Self {
            delay_steps: d.delay_steps,
            control_dt: d.control_dt,
            sim_dt: d.sim_dt,
            kp_pos: None,
            kd_pos: None,
            kp_att: None,
            kd_att: None,
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            seed: s.learn.rng_seed,
            output_dir: PathBuf::from("out"),
            mass_amplification: s.mass_amplification,
            arm: ArmSection::default(),
            quad: QuadSection::default(),
            target: TargetSection::default(),
            obstacles: ObstacleSection::default(),
            corridor: CorridorSection::default(),
            planner: PlannerSection::default(),
            learn: LearnSection::default(),
            disturbance: DisturbanceSection::default(),
        }
    }
}

fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all representable in TOML")
    }

    /// Output directory resolved against `base_dir`.
    pub fn output_dir(&self, base_dir: &Path) -> PathBuf {
        resolve(base_dir, &self.output_dir)
    }

    /// Builds and validates the scenario; relative file paths resolve
    /// against `base_dir`.
    pub fn scenario(&self, base_dir: &Path) -> Result<Scenario, CliError> {
        let target = self.target.source(base_dir)?;
        let obstacles = match &self.obstacles.file {
            Some(f) => io::read_obstacles(&resolve(base_dir, f))?,
            None => Vec::new(),
        };
        let decay = match self.learn.epsilon_decay.as_str() {
            "exponential" => Decay::Exponential,
            "linear" => Decay::Linear,
            other => {
                return Err(CliError::Config(format!(
                    "learn.epsilon_decay: unknown schedule {other:?} (expected exponential or linear)"
                )))
            }
        };
        let d = &self.disturbance;
        let quad = self.quad.params();
        let auto = DisturbanceConfig::for_quad(&quad).gains;
        let gains = PdGains {
            kp_pos: d.kp_pos.unwrap_or(auto.kp_pos),
            kd_pos: d.kd_pos.unwrap_or(auto.kd_pos),
            kp_att: d.kp_att.unwrap_or(auto.kp_att),
            kd_att: d.kd_att.unwrap_or(auto.kd_att),
        };
        let s = Scenario {
            arm: self.arm.params(),
            quad,
            planner: PlannerConfig {
                v_max: self.planner.v_max,
                ttc_threshold: self.planner.ttc_threshold,
                dt: target.dt(),
                smoothing_passes: self.planner.smoothing_passes,
                ttc_penalty: self.planner.ttc_penalty,
            },
            target,
            grid_resolution: self.corridor.grid_resolution,
            margin: self.corridor.margin,
            start: self.planner.start.map(vec2),
            preferred_height: self.planner.preferred_height,
            obstacles,
            learn: LearnConfig {
                episodes: self.learn.episodes,
                learning_rate: self.learn.learning_rate,
                discount: self.learn.discount,
                epsilon: EpsilonSchedule {
                    start: self.learn.epsilon_start,
                    end: self.learn.epsilon_end,
                    decay,
                    decay_fraction: self.learn.epsilon_decay_fraction,
                },
                d_max: self.learn.d_max,
                rng_seed: self.seed,
            },
            angle_bins: self.learn.angle_bins,
            torque_levels: self.learn.torque_levels,
            servo: JointServo { damping: self.learn.servo_damping, gravity_feedforward: self.learn.gravity_feedforward },
            sim_dt: self.learn.sim_dt,
            mass_amplification: self.mass_amplification,
            disturbance: DisturbanceConfig {
                gains,
                delay_steps: d.delay_steps,
                control_dt: d.control_dt,
                sim_dt: d.sim_dt,
            },
        };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_reference_scenario() {
        let c = Config::parse("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.scenario(Path::new(".")).unwrap(), Scenario::default());
    }

    #[test]
    fn dotted_keys_and_sections_agree() {
        let a = Config::parse("arm.l1 = 0.6\nlearn.episodes = 10\n").unwrap();
        let b = Config::parse("[arm]\nl1 = 0.6\n[learn]\nepisodes = 10\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.arm.l1, 0.6);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Config::parse("arm.lenght = 1.0"), Err(CliError::Config(_))));
        assert!(matches!(Config::parse("sed = 3"), Err(CliError::Config(_))));
    }

    #[test]
    fn foreign_generator_keys_are_rejected() {
        let c = Config::parse("target.generator = \"line\"\ntarget.radius = 1.0").unwrap();
        assert!(matches!(c.scenario(Path::new(".")), Err(CliError::Config(_))));
    }

    #[test]
    fn invalid_values_fail_validation() {
        let c = Config::parse("arm.l1 = -1.0").unwrap();
        assert!(matches!(c.scenario(Path::new(".")), Err(CliError::Config(_))));
    }

    #[test]
    fn serialization_round_trips() {
        let c = Config::parse("seed = 3\ntarget.amplitude = 0.2\nplanner.start = [0.1, 1.2]\n").unwrap();
        let text = c.to_toml();
        let again = Config::parse(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml(), text);
    }
}
