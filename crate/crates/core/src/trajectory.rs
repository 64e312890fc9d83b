//! Uniformly sampled planar trajectories and the built-in target generators.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::math::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub p: Vec2,
}

/// A time-stamped sequence of planar points with uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryError {
    TooShort { len: usize },
    NonPositiveDt,
    NonFinite { index: usize },
    NonUniform { index: usize },
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryError::TooShort { len } => write!(f, "trajectory needs at least 2 samples, got {len}"),
            TrajectoryError::NonPositiveDt => f.write_str("trajectory timestep must be > 0"),
            TrajectoryError::NonFinite { index } => write!(f, "sample {index} is not finite"),
            TrajectoryError::NonUniform { index } => write!(f, "sample {index} breaks the uniform time spacing"),
        }
    }
}

impl core::error::Error for TrajectoryError {}

impl Trajectory {
    /// Builds a trajectory starting at `t0` from evenly spaced points.
    pub fn from_points(points: Vec<Vec2>, t0: f64, dt: f64) -> Result<Self, TrajectoryError> {
        let samples = points
            .into_iter()
            .enumerate()
            .map(|(i, p)| Sample { t: t0 + i as f64 * dt, p })
            .collect();
        Self::from_samples(samples, dt)
    }

    /// Validates explicit samples. Time stamps must advance by `dt` to within
    /// a relative tolerance of 1e-6.
    pub fn from_samples(samples: Vec<Sample>, dt: f64) -> Result<Self, TrajectoryError> {
        if samples.len() < 2 {
            return Err(TrajectoryError::TooShort { len: samples.len() });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(TrajectoryError::NonPositiveDt);
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.p.is_finite()) {
                return Err(TrajectoryError::NonFinite { index: i });
            }
            if i > 0 && ((s.t - samples[i - 1].t) - dt).abs() > 1e-6 * dt {
                return Err(TrajectoryError::NonUniform { index: i });
            }
        }
        Ok(Self { samples, dt })
    }

    /// Infers `dt` from the first two samples.
    pub fn from_timed(samples: Vec<Sample>) -> Result<Self, TrajectoryError> {
        if samples.len() < 2 {
            return Err(TrajectoryError::TooShort { len: samples.len() });
        }
        let dt = samples[1].t - samples[0].t;
        Self::from_samples(samples, dt)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn point(&self, i: usize) -> Vec2 {
        self.samples[i].p
    }

    pub fn points(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.samples.iter().map(|s| s.p)
    }

    /// Forward-difference velocity; the last sample repeats the previous one.
    pub fn velocity(&self, i: usize) -> Vec2 {
        let n = self.len();
        let j = i.min(n - 2);
        (self.point(j + 1) - self.point(j)) * (1.0 / self.dt)
    }

    /// Second-difference acceleration; endpoints reuse the nearest interior value.
    pub fn acceleration(&self, i: usize) -> Vec2 {
        let n = self.len();
        if n < 3 {
            return Vec2::ZERO;
        }
        let j = i.clamp(1, n - 2);
        (self.point(j + 1) - self.point(j) * 2.0 + self.point(j - 1)) * (1.0 / (self.dt * self.dt))
    }
}

/// Built-in target end-effector paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetShape {
    /// Straight segment from `start` to `end`.
    Line { start: Vec2, end: Vec2 },
    /// Horizontal sweep of `length` starting at `origin` with a vertical sine
    /// wave of `amplitude` completing `cycles` periods.
    Sine { origin: Vec2, length: f64, amplitude: f64, cycles: f64 },
    /// Circular arc from angle `from` to `to` (rad, counter-clockwise from +x).
    Arc { center: Vec2, radius: f64, from: f64, to: f64 },
}

impl TargetShape {
    /// Point at normalized progress `u` in `[0, 1]`.
    pub fn at(&self, u: f64) -> Vec2 {
        match *self {
            TargetShape::Line { start, end } => start.lerp(end, u),
            TargetShape::Sine { origin, length, amplitude, cycles } => {
                Vec2::new(origin.x + length * u, origin.y + amplitude * libm::sin(2.0 * PI * cycles * u))
            }
            TargetShape::Arc { center, radius, from, to } => {
                let a = from + (to - from) * u;
                let (s, c) = libm::sincos(a);
                center + Vec2::new(radius * c, radius * s)
            }
        }
    }

    /// Samples the shape at `samples` evenly spaced instants `dt` apart.
    pub fn sample(&self, samples: usize, dt: f64) -> Result<Trajectory, TrajectoryError> {
        if samples < 2 {
            return Err(TrajectoryError::TooShort { len: samples });
        }
        let last = (samples - 1) as f64;
        let points = (0..samples).map(|i| self.at(i as f64 / last)).collect();
        Trajectory::from_points(points, 0.0, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            Trajectory::from_points(vec![Vec2::ZERO], 0.0, 0.1),
            Err(TrajectoryError::TooShort { len: 1 })
        );
        assert_eq!(
            Trajectory::from_points(vec![Vec2::ZERO, Vec2::ZERO], 0.0, 0.0),
            Err(TrajectoryError::NonPositiveDt)
        );
        let bad = vec![Sample { t: 0.0, p: Vec2::ZERO }, Sample { t: 0.3, p: Vec2::ZERO }];
        assert_eq!(Trajectory::from_samples(bad, 0.1), Err(TrajectoryError::NonUniform { index: 1 }));
        let nan = vec![Sample { t: 0.0, p: Vec2::ZERO }, Sample { t: 0.1, p: Vec2::new(f64::NAN, 0.0) }];
        assert_eq!(Trajectory::from_samples(nan, 0.1), Err(TrajectoryError::NonFinite { index: 1 }));
    }

    #[test]
    fn line_has_constant_velocity_and_zero_acceleration() {
        let shape = TargetShape::Line { start: Vec2::ZERO, end: Vec2::new(1.0, 2.0) };
        let tr = shape.sample(11, 0.1).unwrap();
        assert_eq!(tr.len(), 11);
        for i in 0..tr.len() {
            let v = tr.velocity(i);
            assert!((v.x - 1.0).abs() < 1e-9 && (v.y - 2.0).abs() < 1e-9);
            assert!(tr.acceleration(i).norm() < 1e-9);
        }
    }

    #[test]
    fn sine_endpoints() {
        let shape = TargetShape::Sine { origin: Vec2::new(1.0, 2.0), length: 3.0, amplitude: 0.2, cycles: 1.0 };
        let tr = shape.sample(41, 0.05).unwrap();
        assert!(tr.point(0).distance(Vec2::new(1.0, 2.0)) < 1e-12);
        assert!(tr.point(40).distance(Vec2::new(4.0, 2.0)) < 1e-9);
        assert!((tr.samples()[40].t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn arc_stays_on_circle() {
        let shape = TargetShape::Arc { center: Vec2::new(1.0, 1.0), radius: 0.5, from: 0.0, to: PI };
        let tr = shape.sample(20, 0.1).unwrap();
        assert!(tr.points().all(|p| (p.distance(Vec2::new(1.0, 1.0)) - 0.5).abs() < 1e-12));
    }
}
