//! Hyperparameter sweep over learning rate, discount and state resolution.

use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use aeroarm_core::qlearn::train;
use aeroarm_core::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    LearningRate,
    Discount,
    Samples,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::LearningRate, Axis::Discount, Axis::Samples];

    pub fn name(&self) -> &'static str {
        match self {
            Axis::LearningRate => "lr",
            Axis::Discount => "gamma",
            Axis::Samples => "samples",
        }
    }

    /// Cells in report order.
    pub fn cells(&self) -> Vec<Cell> {
        let cell = |value: &str, change| Cell { axis: *self, value: value.to_string(), change };
        match self {
            Axis::LearningRate => vec![
                cell("0.1", Change::LearningRate(0.1)),
                cell("0.01", Change::LearningRate(0.01)),
                cell("0.001", Change::LearningRate(0.001)),
            ],
            Axis::Discount => vec![
                cell("0.9", Change::Discount(0.9)),
                cell("0.5", Change::Discount(0.5)),
                cell("0.2", Change::Discount(0.2)),
            ],
            Axis::Samples => vec![cell("+25%", Change::BinScale(1.25)), cell("-25%", Change::BinScale(0.75))],
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lr" => Ok(Axis::LearningRate),
            "gamma" => Ok(Axis::Discount),
            "samples" => Ok(Axis::Samples),
            other => Err(format!("unknown sweep axis {other:?} (expected lr, gamma or samples)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Change {
    LearningRate(f64),
    Discount(f64),
    /// Multiplies the per-joint angle bin count, rounded.
    BinScale(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub axis: Axis,
    pub value: String,
    pub change: Change,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("{}={}", self.axis.name(), self.value)
    }

    /// The reference scenario with this cell's change and seed applied.
    pub fn scenario(&self, reference: &Scenario, root_seed: u64) -> Scenario {
        let mut s = reference.clone();
        match self.change {
            Change::LearningRate(v) => s.learn.learning_rate = v,
            Change::Discount(v) => s.learn.discount = v,
            Change::BinScale(f) => s.angle_bins = ((s.angle_bins as f64 * f).round() as usize).max(2),
        }
        s.learn.rng_seed = cell_seed(root_seed, &self.label());
        s
    }
}

/// Root seed mixed with a stable hash of the cell label, so adding or
/// reordering cells never changes another cell's seed.
pub fn cell_seed(root: u64, label: &str) -> u64 {
    // FNV-1a, then a splitmix64 finalizer.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = root ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub parameter: &'static str,
    pub value: String,
    pub seed: u64,
    pub outcome: Result<CellMetrics, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub rmse: f64,
    pub avg_reward: f64,
    pub ade: f64,
    pub accuracy_pct: f64,
}

fn run_cell(cell: &Cell, reference: &Scenario, root_seed: u64) -> SweepRow {
    let s = cell.scenario(reference, root_seed);
    let outcome = (|| {
        let artifacts = s.plan().map_err(|e| e.to_string())?;
        let mut env = s.tracking_env(&artifacts).map_err(|e| e.to_string())?;
        let out = train(&mut env, &s.learn);
        let r = env.evaluate(&out.table);
        if r.aborted {
            return Err("greedy evaluation blew up".to_string());
        }
        Ok(CellMetrics { rmse: r.rmse, avg_reward: r.avg_reward, ade: r.ade, accuracy_pct: r.accuracy_pct })
    })();
    SweepRow { parameter: cell.axis.name(), value: cell.value.clone(), seed: s.learn.rng_seed, outcome }
}

/// Thread cap from `AEROARM_THREADS`, else the available parallelism.
pub fn thread_limit() -> usize {
    std::env::var("AEROARM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every cell of `axes` on up to `threads` workers. Rows come back in
/// cell order regardless of scheduling; a failing cell records its error.
pub fn run_sweep(reference: &Scenario, axes: &[Axis], root_seed: u64, threads: usize) -> Vec<SweepRow> {
    let cells: Vec<Cell> = axes.iter().flat_map(Axis::cells).collect();
    let slots: Vec<Mutex<Option<SweepRow>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let row = run_cell(cell, reference, root_seed);
                *slots[i].lock().expect("no worker panics while holding a slot") = Some(row);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("no worker panics while holding a slot").expect("every cell ran"))
        .collect()
}
