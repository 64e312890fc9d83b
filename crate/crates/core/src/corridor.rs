//! Time-indexed feasible corridor: for every target sample, the grid cells a
//! base could occupy while the arm still reaches the target within its joint
//! limits.

use alloc::vec::Vec;
use core::fmt;

use crate::arm::{inverse_kinematics, ArmParams};
use crate::math::Vec2;
use crate::trajectory::Trajectory;

/// Integer grid coordinates of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub ix: i64,
    pub iy: i64,
}

impl Cell {
    pub const fn new(ix: i64, iy: i64) -> Self {
        Self { ix, iy }
    }
}

/// Axis-aligned uniform grid anchored at the world origin. Cell `(ix, iy)`
/// spans `[ix*res, (ix+1)*res) x [iy*res, (iy+1)*res)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub resolution: f64,
}

impl Grid {
    pub fn center(&self, cell: Cell) -> Vec2 {
        Vec2::new((cell.ix as f64 + 0.5) * self.resolution, (cell.iy as f64 + 0.5) * self.resolution)
    }

    pub fn cell_of(&self, p: Vec2) -> Cell {
        Cell::new(libm::floor(p.x / self.resolution) as i64, libm::floor(p.y / self.resolution) as i64)
    }

    /// Distance from `p` to the closest point of the cell's square.
    pub fn distance_to_cell(&self, cell: Cell, p: Vec2) -> f64 {
        let lo = Vec2::new(cell.ix as f64 * self.resolution, cell.iy as f64 * self.resolution);
        let hi = lo + Vec2::new(self.resolution, self.resolution);
        let nearest = Vec2::new(p.x.clamp(lo.x, hi.x), p.y.clamp(lo.y, hi.y));
        nearest.distance(p)
    }
}

/// A static circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleCorridor {
    pub grid: Grid,
    /// Timestep of the target trajectory the corridor was built from.
    pub dt: f64,
    /// Sorted cells per target index.
    sets: Vec<Vec<Cell>>,
}

impl FeasibleCorridor {
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn cells(&self, index: usize) -> &[Cell] {
        &self.sets[index]
    }

    pub fn contains(&self, index: usize, cell: Cell) -> bool {
        self.position(index, cell).is_some()
    }

    /// Position of `cell` within the sorted set at `index`.
    pub fn position(&self, index: usize, cell: Cell) -> Option<usize> {
        self.sets.get(index)?.binary_search(&cell).ok()
    }

    /// True when the grid cell containing `p` belongs to set `index`.
    pub fn contains_point(&self, index: usize, p: Vec2) -> bool {
        self.contains(index, self.grid.cell_of(p))
    }

    pub fn total_cells(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// Iterates `(index, cell center)` in index-then-cell order.
    pub fn centers(&self) -> impl Iterator<Item = (usize, Vec2)> + '_ {
        self.sets
            .iter()
            .enumerate()
            .flat_map(move |(i, set)| set.iter().map(move |&c| (i, self.grid.center(c))))
    }

    /// Builds a corridor from explicit per-index cell sets.
    pub fn from_sets(grid: Grid, dt: f64, mut sets: Vec<Vec<Cell>>) -> Self {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        Self { grid, dt, sets }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorridorError {
    InvalidResolution,
    InvalidMargin { margin: f64, max: f64 },
    /// No base cell reaches the target at this index.
    Empty { index: usize },
}

impl fmt::Display for CorridorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorridorError::InvalidResolution => f.write_str("grid resolution must be > 0"),
            CorridorError::InvalidMargin { margin, max } => {
                write!(f, "margin {margin} m must lie in [0, {max})")
            }
            CorridorError::Empty { index } => write!(f, "no feasible base cell for target sample {index}"),
        }
    }
}

impl core::error::Error for CorridorError {}

/// Exhaustive scan of the grid cells around every target sample.
///
/// A cell is kept when its center lies in the reachability annulus shrunk by
/// `margin`, inverse kinematics from the center succeeds within the joint
/// limits, and its square does not touch any obstacle circle.
pub fn compute_corridor(
    target: &Trajectory,
    arm: &ArmParams,
    grid_resolution: f64,
    margin: f64,
    obstacles: &[Circle],
) -> Result<FeasibleCorridor, CorridorError> {
    if !(grid_resolution > 0.0 && grid_resolution.is_finite()) {
        return Err(CorridorError::InvalidResolution);
    }
    let inner = (arm.l1 - arm.l2).abs();
    let outer = arm.l1 + arm.l2;
    let max_margin = (outer - inner) / 2.0;
    if !(margin >= 0.0 && margin < max_margin) {
        return Err(CorridorError::InvalidMargin { margin, max: max_margin });
    }
    let grid = Grid { resolution: grid_resolution };
    let (r_min, r_max) = (inner + margin, outer - margin);

    let mut sets = Vec::with_capacity(target.len());
    for (index, goal) in target.points().enumerate() {
        let lo = grid.cell_of(goal - Vec2::new(r_max, r_max));
        let hi = grid.cell_of(goal + Vec2::new(r_max, r_max));
        let mut set = Vec::new();
        for ix in lo.ix..=hi.ix {
            for iy in lo.iy..=hi.iy {
                let cell = Cell::new(ix, iy);
                if cell_is_feasible(&grid, cell, goal, arm, r_min, r_max, obstacles) {
                    set.push(cell);
                }
            }
        }
        if set.is_empty() {
            return Err(CorridorError::Empty { index });
        }
        sets.push(set);
    }
    Ok(FeasibleCorridor::from_sets(grid, target.dt(), sets))
}

fn cell_is_feasible(
    grid: &Grid,
    cell: Cell,
    goal: Vec2,
    arm: &ArmParams,
    r_min: f64,
    r_max: f64,
    obstacles: &[Circle],
) -> bool {
    let center = grid.center(cell);
    let rel = goal - center;
    let d = rel.norm();
    if d < r_min || d > r_max {
        return false;
    }
    if obstacles.iter().any(|o| grid.distance_to_cell(cell, o.center) <= o.radius) {
        return false;
    }
    inverse_kinematics(arm, rel).is_ok()
}
