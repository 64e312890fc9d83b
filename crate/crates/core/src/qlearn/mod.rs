//! Tabular Q-learning.
//!
//! The trainer is generic over [`Environment`] so the same update loop drives
//! the arm-tracking task ([`tracking::TrackingEnv`]) and small reference MDPs
//! used for checking convergence.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{require, InvalidParameter};

pub mod tracking;

pub use tracking::{encode_state, reward, Bins, Discretizer, EpisodeReport, TrackingEnv};

/// Dense state-action value table, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions, values: vec![0.0; n_states * n_actions] }
    }

    /// Wraps existing row-major values.
    pub fn from_values(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self, InvalidParameter> {
        require(values.len() == n_states * n_actions, "values", "length must equal states * actions")?;
        require(values.iter().all(|v| v.is_finite()), "values", "entries must be finite")?;
        Ok(Self { n_states, n_actions, values })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn set(&mut self, state: usize, action: usize, value: f64) {
        self.values[state * self.n_actions + action] = value;
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Highest-valued action; ties go to the lowest action id.
    pub fn greedy_action(&self, state: usize) -> usize {
        let row = self.row(state);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    /// Applies `value -> scale * value + shift` to every entry.
    pub fn affine_map(&mut self, scale: f64, shift: f64) {
        for v in &mut self.values {
            *v = scale * *v + shift;
        }
    }
}

/// `Q(s,a) <- Q(s,a) + lr * (reward + gamma * max_a' Q(s',a') - Q(s,a))`.
/// Returns the new value; no other entry changes.
pub fn bellman_update(table: &mut QTable, s: usize, a: usize, reward: f64, s_next: usize, lr: f64, gamma: f64) -> f64 {
    let target = reward + gamma * table.max_value(s_next);
    apply_target(table, s, a, target, lr)
}

/// Update for a transition into a terminal state (no bootstrap term).
pub fn terminal_update(table: &mut QTable, s: usize, a: usize, reward: f64, lr: f64) -> f64 {
    apply_target(table, s, a, reward, lr)
}

fn apply_target(table: &mut QTable, s: usize, a: usize, target: f64, lr: f64) -> f64 {
    let old = table.get(s, a);
    let new = old + lr * (target - old);
    table.set(s, a, new);
    new
}

/// How an environment step ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Continue,
    /// Episode ends; the next state has no value.
    Terminal,
    /// Episode ends by time limit; the next state is bootstrapped.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub next_state: usize,
    pub kind: StepKind,
}

pub trait Environment {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Starts a new episode and returns its initial state.
    fn reset(&mut self) -> usize;
    fn step(&mut self, action: usize) -> Transition;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decay {
    Exponential,
    Linear,
}

/// Exploration rate annealed from `start` at the first episode to `end`
/// after `decay_fraction` of the run, then held at `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay: Decay,
    /// In (0, 1].
    pub decay_fraction: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.05, decay: Decay::Exponential, decay_fraction: 1.0 }
    }
}

impl EpsilonSchedule {
    pub fn at(&self, episode: usize, episodes: usize) -> f64 {
        if episodes <= 1 {
            return self.start;
        }
        let frac = (episode as f64 / ((episodes - 1) as f64 * self.decay_fraction)).min(1.0);
        match self.decay {
            Decay::Linear => self.start + (self.end - self.start) * frac,
            Decay::Exponential if self.start > 0.0 && self.end > 0.0 => {
                self.start * libm::pow(self.end / self.start, frac)
            }
            Decay::Exponential => self.start + (self.end - self.start) * frac,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnConfig {
    pub episodes: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub epsilon: EpsilonSchedule,
    /// Distance (m) at which the tracking reward reaches zero.
    pub d_max: f64,
    pub rng_seed: u64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            episodes: 15_000,
            learning_rate: 0.1,
            discount: 0.9,
            epsilon: EpsilonSchedule::default(),
            d_max: 0.25,
            rng_seed: 7,
        }
    }
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), InvalidParameter> {
        require(
            self.learning_rate > 0.0 && self.learning_rate <= 1.0,
            "learning_rate",
            "must lie in (0, 1]",
        )?;
        require(self.discount > 0.0 && self.discount <= 1.0, "discount", "must lie in (0, 1]")?;
        let eps_ok = |e: f64| (0.0..=1.0).contains(&e);
        require(
            eps_ok(self.epsilon.start) && eps_ok(self.epsilon.end),
            "epsilon",
            "start and end must lie in [0, 1]",
        )?;
        let f = self.epsilon.decay_fraction;
        require(f > 0.0 && f <= 1.0, "epsilon.decay_fraction", "must lie in (0, 1]")?;
        require(self.d_max > 0.0 && self.d_max.is_finite(), "d_max", "must be > 0")
    }
}

pub enum Mode<'a> {
    /// Epsilon-greedy action selection with Bellman updates.
    Learn { epsilon: f64, rng: &'a mut ChaCha8Rng },
    /// Pure argmax; the table is left untouched.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStats {
    pub total_reward: f64,
    pub steps: usize,
}

impl EpisodeStats {
    pub fn avg_reward(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_reward / self.steps as f64
        }
    }
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform integer in `0..n` (multiply-shift, bias below 2^-64 * n).
pub fn below(rng: &mut impl RngCore, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Greedy rollout; the table is only read.
pub fn greedy_episode<E: Environment + ?Sized>(env: &mut E, table: &QTable) -> EpisodeStats {
    let mut state = env.reset();
    let mut stats = EpisodeStats { total_reward: 0.0, steps: 0 };
    loop {
        let t = env.step(table.greedy_action(state));
        stats.total_reward += t.reward;
        stats.steps += 1;
        if t.kind != StepKind::Continue {
            return stats;
        }
        state = t.next_state;
    }
}

/// Runs one episode to completion.
pub fn run_episode<E: Environment + ?Sized>(env: &mut E, table: &mut QTable, lr: f64, gamma: f64, mode: Mode<'_>) -> EpisodeStats {
    let Mode::Learn { epsilon, rng } = mode else {
        return greedy_episode(env, table);
    };
    let mut state = env.reset();
    let mut stats = EpisodeStats { total_reward: 0.0, steps: 0 };
    loop {
        let action = if unit_f64(rng) < epsilon {
            below(rng, table.n_actions())
        } else {
            table.greedy_action(state)
        };
        let t = env.step(action);
        stats.total_reward += t.reward;
        stats.steps += 1;
        match t.kind {
            StepKind::Terminal => {
                terminal_update(table, state, action, t.reward, lr);
                return stats;
            }
            StepKind::Truncated => {
                bellman_update(table, state, action, t.reward, t.next_state, lr, gamma);
                return stats;
            }
            StepKind::Continue => {
                bellman_update(table, state, action, t.reward, t.next_state, lr, gamma);
                state = t.next_state;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub table: QTable,
    /// Average per-step reward of every training episode.
    pub curve: Vec<f64>,
}

/// Runs `config.episodes` learning episodes with annealed exploration,
/// starting from a zero table.
pub fn train<E: Environment + ?Sized>(env: &mut E, config: &LearnConfig) -> TrainOutcome {
    let mut table = QTable::zeros(env.n_states(), env.n_actions());
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut curve = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let epsilon = config.epsilon.at(episode, config.episodes);
        let stats = run_episode(
            env,
            &mut table,
            config.learning_rate,
            config.discount,
            Mode::Learn { epsilon, rng: &mut rng },
        );
        curve.push(stats.avg_reward());
    }
    TrainOutcome { table, curve }
}

/// Trailing moving average with the given window (shorter at the start).
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}
