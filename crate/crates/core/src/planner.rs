//! Base-path planning inside the feasible corridor with time-to-collision
//! safety against constant-velocity obstacles.
//!
//! The search runs A* over the time-expanded corridor graph: a node is a
//! `(sample index, cell)` pair and an edge moves the base to any cell of the
//! next corridor set within `v_max * dt`. An edge is pruned when the
//! resulting motion brings the base closer than `ttc_threshold` seconds to
//! any obstacle.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};
use core::fmt;

use crate::corridor::{Cell, FeasibleCorridor};
use crate::error::{require, InvalidParameter};
use crate::math::Vec2;
use crate::trajectory::Trajectory;

/// Circular obstacle moving with constant velocity. `center` is its
/// position at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
    pub velocity: Vec2,
}

impl Obstacle {
    pub fn fixed(center: Vec2, radius: f64) -> Self {
        Self { center, radius, velocity: Vec2::ZERO }
    }

    pub fn at(&self, t: f64) -> Obstacle {
        Obstacle { center: self.center + self.velocity * t, ..*self }
    }

    pub fn is_static(&self) -> bool {
        self.velocity == Vec2::ZERO
    }

    pub fn validate(&self) -> Result<(), InvalidParameter> {
        require(
            self.center.is_finite() && self.velocity.is_finite() && self.radius.is_finite(),
            "obstacle",
            "fields must be finite",
        )?;
        require(self.radius > 0.0, "obstacle.radius", "must be > 0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Base speed bound (m/s).
    pub v_max: f64,
    /// Minimum admissible time to collision (s).
    pub ttc_threshold: f64,
    /// Planning timestep (s); must equal the corridor's sample spacing.
    pub dt: f64,
    /// Corridor-respecting midpoint smoothing passes after the search.
    pub smoothing_passes: usize,
    /// Edge-cost weight of the `1 / ttc` proximity penalty (m s).
    pub ttc_penalty: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { v_max: 1.0, ttc_threshold: 2.0, dt: 0.05, smoothing_passes: 0, ttc_penalty: 0.05 }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), InvalidParameter> {
        require(self.v_max > 0.0 && self.v_max.is_finite(), "v_max", "must be > 0")?;
        require(self.ttc_threshold > 0.0 && self.ttc_threshold.is_finite(), "ttc_threshold", "must be > 0")?;
        require(self.dt > 0.0 && self.dt.is_finite(), "dt", "must be > 0")?;
        require(self.ttc_penalty >= 0.0 && self.ttc_penalty.is_finite(), "ttc_penalty", "must be >= 0")
    }

    fn step_limit(&self) -> f64 {
        self.v_max * self.dt + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasePlan {
    pub trajectory: Trajectory,
    /// Smallest finite time to collision along the path; `None` means no
    /// obstacle is ever on a collision course.
    pub min_ttc_along_path: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanError {
    InvalidConfig(InvalidParameter),
    /// The planning timestep disagrees with the corridor's sample spacing.
    TimestepMismatch { planner: f64, corridor: f64 },
    StartOutsideCorridor,
    /// The search exhausted the graph; no path survives past `index`.
    NoFeasiblePath { index: usize },
}

impl fmt::Display for PlanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanError::InvalidConfig(e) => write!(f, "{e}"),
            PlanError::TimestepMismatch { planner, corridor } => {
                write!(f, "planner dt {planner} s differs from corridor dt {corridor} s")
            }
            PlanError::StartOutsideCorridor => f.write_str("start position is outside corridor set 0"),
            PlanError::NoFeasiblePath { index } => write!(f, "no feasible base path: blocked at sample {index}"),
        }
    }
}

impl core::error::Error for PlanError {}

/// Smallest `t >= 0` at which the vehicle touches the obstacle's disc when
/// both keep their current velocities. Returns `Some(0.0)` when already in
/// contact and `None` when the bodies never meet.
pub fn time_to_collision(position: Vec2, velocity: Vec2, obstacle: &Obstacle) -> Option<f64> {
    let p = position - obstacle.center;
    let v = velocity - obstacle.velocity;
    let c = p.norm_sq() - obstacle.radius * obstacle.radius;
    if c <= 0.0 {
        return Some(0.0);
    }
    let a = v.norm_sq();
    let b = p.dot(v);
    if a == 0.0 || b >= 0.0 {
        return None;
    }
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    // Stable form of the smaller root of a t^2 + 2 b t + c = 0 with b < 0.
    Some(c / (-b + libm::sqrt(disc)))
}

/// Minimum TTC of a vehicle at `position` with `velocity` at time `t`
/// over all obstacles.
pub fn min_ttc(position: Vec2, velocity: Vec2, t: f64, obstacles: &[Obstacle]) -> Option<f64> {
    obstacles
        .iter()
        .filter_map(|o| time_to_collision(position, velocity, &o.at(t)))
        .min_by(f64::total_cmp)
}

fn ttc_ok(ttc: Option<f64>, threshold: f64) -> bool {
    ttc.is_none_or(|t| t >= threshold)
}

fn fold_min(acc: Option<f64>, t: Option<f64>) -> Option<f64> {
    match (acc, t) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Velocity the plan assigns to point `i`: the forward difference, zero at
/// the final point.
pub fn plan_velocity(points: &[Vec2], i: usize, dt: f64) -> Vec2 {
    if i + 1 < points.len() {
        (points[i + 1] - points[i]) * (1.0 / dt)
    } else {
        Vec2::ZERO
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanViolation {
    OutsideCorridor { index: usize },
    TooFast { index: usize },
    Unsafe { index: usize, ttc: f64 },
    WrongLength,
}

/// Checks corridor containment, the speed bound and TTC safety of every
/// point; returns the minimum TTC on success.
pub fn check_plan(
    points: &[Vec2],
    corridor: &FeasibleCorridor,
    obstacles: &[Obstacle],
    config: &PlannerConfig,
) -> Result<Option<f64>, PlanViolation> {
    if points.len() != corridor.len() {
        return Err(PlanViolation::WrongLength);
    }
    let mut worst = None;
    for (i, &p) in points.iter().enumerate() {
        if !corridor.contains_point(i, p) {
            return Err(PlanViolation::OutsideCorridor { index: i });
        }
        if i + 1 < points.len() && points[i + 1].distance(p) > config.step_limit() {
            return Err(PlanViolation::TooFast { index: i });
        }
        let ttc = min_ttc(p, plan_velocity(points, i, config.dt), i as f64 * config.dt, obstacles);
        if let Some(t) = ttc {
            if t < config.ttc_threshold {
                return Err(PlanViolation::Unsafe { index: i, ttc: t });
            }
        }
        worst = fold_min(worst, ttc);
    }
    Ok(worst)
}

#[derive(Clone, Copy, PartialEq)]
struct OpenEntry {
    f: f64,
    index: usize,
    cell: Cell,
    g: f64,
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f
            .total_cmp(&other.f)
            .then(self.index.cmp(&other.index))
            .then(self.cell.ix.cmp(&other.cell.ix))
            .then(self.cell.iy.cmp(&other.cell.iy))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Plans a base path through the corridor starting from the cell that
/// contains `start`. Plan points are cell centers.
pub fn plan_base_path(
    corridor: &FeasibleCorridor,
    start: Vec2,
    obstacles: &[Obstacle],
    config: &PlannerConfig,
) -> Result<BasePlan, PlanError> {
    config.validate().map_err(PlanError::InvalidConfig)?;
    for o in obstacles {
        o.validate().map_err(PlanError::InvalidConfig)?;
    }
    if (config.dt - corridor.dt).abs() > 1e-9 * corridor.dt.max(1.0) {
        return Err(PlanError::TimestepMismatch { planner: config.dt, corridor: corridor.dt });
    }
    let grid = corridor.grid;
    let start_cell = grid.cell_of(start);
    if corridor.is_empty() || !corridor.contains(0, start_cell) {
        return Err(PlanError::StartOutsideCorridor);
    }
    let n = corridor.len();
    let dt = config.dt;

    // Dense node ids: offset of each index plus position within its set.
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for i in 0..n {
        offsets.push(offsets[i] + corridor.cells(i).len());
    }
    let node_id = |i: usize, cell: Cell| corridor.position(i, cell).map(|k| offsets[i] + k);
    let mut best_g = vec![f64::INFINITY; offsets[n]];
    let mut parent = vec![usize::MAX; offsets[n]];
    let mut closed = vec![false; offsets[n]];

    let reach = config.step_limit();
    let span = libm::ceil(reach / grid.resolution) as i64;
    let mut moves = Vec::new();
    for dx in -span..=span {
        for dy in -span..=span {
            let d = libm::hypot(dx as f64, dy as f64) * grid.resolution;
            if d <= reach {
                moves.push((dx, dy, d));
            }
        }
    }

    let goal_cells: Vec<Vec2> = corridor.cells(n - 1).iter().map(|&c| grid.center(c)).collect();
    let mut h_cache: BTreeMap<Cell, f64> = BTreeMap::new();
    let mut heuristic = |cell: Cell| -> f64 {
        *h_cache.entry(cell).or_insert_with(|| {
            let p = grid.center(cell);
            goal_cells.iter().map(|g| g.distance(p)).fold(f64::INFINITY, f64::min)
        })
    };

    let start_id = node_id(0, start_cell).expect("start cell checked above");
    best_g[start_id] = 0.0;
    let mut open = BinaryHeap::new();
    open.push(Reverse(OpenEntry { f: heuristic(start_cell), index: 0, cell: start_cell, g: 0.0 }));
    let mut deepest = 0usize;
    let mut goal = None;

    while let Some(Reverse(entry)) = open.pop() {
        let id = offsets[entry.index] + corridor.position(entry.index, entry.cell).expect("queued cells exist");
        if closed[id] || entry.g > best_g[id] {
            continue;
        }
        closed[id] = true;
        deepest = deepest.max(entry.index);
        let here = grid.center(entry.cell);
        let t = entry.index as f64 * dt;
        if entry.index == n - 1 {
            if ttc_ok(min_ttc(here, Vec2::ZERO, t, obstacles), config.ttc_threshold) {
                goal = Some(id);
                break;
            }
            continue;
        }
        let next_index = entry.index + 1;
        for &(dx, dy, d) in &moves {
            let cell = Cell::new(entry.cell.ix + dx, entry.cell.iy + dy);
            let Some(next_id) = node_id(next_index, cell) else { continue };
            if closed[next_id] {
                continue;
            }
            let velocity = (grid.center(cell) - here) * (1.0 / dt);
            let ttc = min_ttc(here, velocity, t, obstacles);
            if !ttc_ok(ttc, config.ttc_threshold) {
                continue;
            }
            let penalty = match ttc {
                Some(tc) if tc > 0.0 => config.ttc_penalty / tc,
                _ => 0.0,
            };
            let g = entry.g + d + penalty;
            if g < best_g[next_id] {
                best_g[next_id] = g;
                parent[next_id] = id;
                open.push(Reverse(OpenEntry { f: g + heuristic(cell), index: next_index, cell, g }));
            }
        }
    }

    let Some(mut id) = goal else {
        return Err(PlanError::NoFeasiblePath { index: (deepest + 1).min(n - 1) });
    };
    let mut points = vec![Vec2::ZERO; n];
    for i in (0..n).rev() {
        let k = id - offsets[i];
        points[i] = grid.center(corridor.cells(i)[k]);
        id = parent[id];
    }

    for _ in 0..config.smoothing_passes {
        smooth_pass(&mut points, corridor, obstacles, config);
    }
    let min_ttc_along_path = match check_plan(&points, corridor, obstacles, config) {
        Ok(m) => m,
        Err(_) => unreachable!("search and smoothing only produce valid plans"),
    };
    let trajectory = Trajectory::from_points(points, 0.0, dt).expect("corridor has at least two samples");
    Ok(BasePlan { trajectory, min_ttc_along_path })
}

/// Replaces each interior point with the midpoint of its neighbours when the
/// move keeps every plan invariant.
fn smooth_pass(points: &mut [Vec2], corridor: &FeasibleCorridor, obstacles: &[Obstacle], config: &PlannerConfig) {
    let dt = config.dt;
    let limit = config.step_limit();
    for i in 1..points.len().saturating_sub(1) {
        let (prev, next) = (points[i - 1], points[i + 1]);
        let candidate = prev.lerp(next, 0.5);
        if !corridor.contains_point(i, candidate) || candidate.distance(prev) > limit || next.distance(candidate) > limit {
            continue;
        }
        let before = min_ttc(prev, (candidate - prev) * (1.0 / dt), (i - 1) as f64 * dt, obstacles);
        let here = min_ttc(candidate, (next - candidate) * (1.0 / dt), i as f64 * dt, obstacles);
        if ttc_ok(before, config.ttc_threshold) && ttc_ok(here, config.ttc_threshold) {
            points[i] = candidate;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corridor::Grid;

    #[test]
    fn ttc_head_on() {
        let o = Obstacle::fixed(Vec2::ZERO, 1.0);
        let t = time_to_collision(Vec2::new(10.0, 0.0), Vec2::new(-2.0, 0.0), &o).unwrap();
        assert!((t - 4.5).abs() < 1e-12);
    }

    #[test]
    fn ttc_diverging_or_missing() {
        let o = Obstacle::fixed(Vec2::ZERO, 1.0);
        assert_eq!(time_to_collision(Vec2::new(10.0, 0.0), Vec2::new(2.0, 0.0), &o), None);
        assert_eq!(time_to_collision(Vec2::new(10.0, 5.0), Vec2::new(-2.0, 0.0), &o), None);
        assert_eq!(time_to_collision(Vec2::new(10.0, 0.0), Vec2::ZERO, &o), None);
    }

    #[test]
    fn ttc_inside_is_zero() {
        let o = Obstacle::fixed(Vec2::ZERO, 1.0);
        assert_eq!(time_to_collision(Vec2::new(0.5, 0.0), Vec2::new(3.0, 0.0), &o), Some(0.0));
    }

    #[test]
    fn ttc_uses_relative_velocity() {
        // Obstacle chases the vehicle at the same speed: never meets.
        let o = Obstacle { center: Vec2::ZERO, radius: 1.0, velocity: Vec2::new(1.0, 0.0) };
        assert_eq!(time_to_collision(Vec2::new(5.0, 0.0), Vec2::new(1.0, 0.0), &o), None);
        // Obstacle approaching a stationary vehicle.
        let o = Obstacle { center: Vec2::ZERO, radius: 1.0, velocity: Vec2::new(1.0, 0.0) };
        let t = time_to_collision(Vec2::new(5.0, 0.0), Vec2::ZERO, &o).unwrap();
        assert!((t - 4.0).abs() < 1e-12);
    }

    fn strip_corridor(len: usize, width: i64) -> FeasibleCorridor {
        let sets = (0..len)
            .map(|_| (0..width).flat_map(|ix| (0..3).map(move |iy| Cell::new(ix, iy))).collect())
            .collect();
        FeasibleCorridor::from_sets(Grid { resolution: 0.1 }, 0.1, sets)
    }

    fn config() -> PlannerConfig {
        PlannerConfig { v_max: 1.5, ttc_threshold: 1.0, dt: 0.1, smoothing_passes: 0, ttc_penalty: 0.05 }
    }

    #[test]
    fn plan_without_obstacles() {
        let corridor = strip_corridor(10, 20);
        let plan = plan_base_path(&corridor, Vec2::new(0.05, 0.15), &[], &config()).unwrap();
        assert_eq!(plan.trajectory.len(), 10);
        assert_eq!(plan.min_ttc_along_path, None);
        assert!(check_plan(&plan.trajectory.points().collect::<Vec<_>>(), &corridor, &[], &config()).is_ok());
    }

    #[test]
    fn start_must_be_in_corridor() {
        let corridor = strip_corridor(5, 5);
        assert_eq!(
            plan_base_path(&corridor, Vec2::new(5.0, 5.0), &[], &config()),
            Err(PlanError::StartOutsideCorridor)
        );
    }

    #[test]
    fn timestep_mismatch_is_rejected() {
        let corridor = strip_corridor(5, 5);
        let cfg = PlannerConfig { dt: 0.2, ..config() };
        assert!(matches!(
            plan_base_path(&corridor, Vec2::new(0.05, 0.05), &[], &cfg),
            Err(PlanError::TimestepMismatch { .. })
        ));
    }

    #[test]
    fn blocked_index_is_reported() {
        let mut sets: Vec<Vec<Cell>> = (0..6).map(|_| vec![Cell::new(0, 0), Cell::new(1, 0)]).collect();
        // Index 3 is only reachable through a cell far away from everything else.
        sets[3] = vec![Cell::new(40, 40)];
        let corridor = FeasibleCorridor::from_sets(Grid { resolution: 0.1 }, 0.1, sets);
        assert_eq!(
            plan_base_path(&corridor, Vec2::new(0.05, 0.05), &[], &config()),
            Err(PlanError::NoFeasiblePath { index: 3 })
        );
    }

    #[test]
    fn smoothing_keeps_invariants() {
        let corridor = strip_corridor(12, 30);
        let obstacles = [Obstacle::fixed(Vec2::new(1.0, -0.6), 0.3)];
        let cfg = PlannerConfig { smoothing_passes: 3, ..config() };
        let plan = plan_base_path(&corridor, Vec2::new(0.05, 0.05), &obstacles, &cfg).unwrap();
        let pts: Vec<Vec2> = plan.trajectory.points().collect();
        assert!(check_plan(&pts, &corridor, &obstacles, &cfg).is_ok());
    }
}
