//! Command-line layer of the aerial-manipulator workbench: configuration,
//! the five experiment commands and their file artifacts.

pub mod config;
pub mod error;
pub mod io;
pub mod sweep;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use aeroarm_core::disturb::{self, DeviationTrace};
use aeroarm_core::qlearn::{train, EpisodeReport, QTable, TrackingEnv};
use aeroarm_core::scenario::{PlanArtifacts, Scenario};

pub use config::Config;
pub use error::CliError;
use io::{fmt_f64, write_csv};
pub use sweep::Axis;

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub episodes: Option<usize>,
    pub learning_rate: Option<f64>,
    pub discount: Option<f64>,
    pub out: Option<PathBuf>,
}

/// A validated scenario and where its artifacts go.
#[derive(Debug, Clone)]
pub struct Context {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
}

impl Context {
    /// Loads `config_path`, applies `overrides` and validates the result.
    pub fn load(config_path: &Path, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = Config::load(config_path)?;
        let base_dir = config_path.parent().unwrap_or(Path::new("."));
        if let Some(v) = overrides.seed {
            config.seed = v;
        }
        if let Some(v) = overrides.episodes {
            config.learn.episodes = v;
        }
        if let Some(v) = overrides.learning_rate {
            config.learn.learning_rate = v;
        }
        if let Some(v) = overrides.discount {
            config.learn.discount = v;
        }
        let scenario = config.scenario(base_dir)?;
        let out_dir = match &overrides.out {
            Some(p) => p.clone(),
            None => config.output_dir(base_dir),
        };
        Ok(Self { scenario, out_dir })
    }

    fn prepare_out(&self) -> Result<(), CliError> {
        io::ensure_dir(&self.out_dir)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Corridor, base plan and target, plus a short summary on stdout.
pub fn cmd_plan(ctx: &Context) -> Result<PlanArtifacts, CliError> {
    let artifacts = ctx.scenario.plan()?;
    ctx.prepare_out()?;
    io::write_trajectory(&ctx.path("target.csv"), &artifacts.target)?;
    io::write_trajectory(&ctx.path("plan.csv"), &artifacts.plan.trajectory)?;
    io::write_corridor(&ctx.path("corridor.csv"), &artifacts.corridor)?;
    io::write_obstacles(&ctx.path("obstacles.csv"), &ctx.scenario.obstacles)?;
    print!("{}", plan_summary(&artifacts));
    Ok(artifacts)
}

fn plan_summary(a: &PlanArtifacts) -> String {
    let counts: Vec<usize> = (0..a.corridor.len()).map(|i| a.corridor.cells(i).len()).collect();
    let min = counts.iter().min().copied().unwrap_or(0);
    let max = counts.iter().max().copied().unwrap_or(0);
    let mean = counts.iter().sum::<usize>() as f64 / counts.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(s, "samples: {}", a.target.len());
    let _ = writeln!(s, "corridor cells per sample: min {min}, mean {mean:.1}, max {max}");
    match a.plan.min_ttc_along_path {
        Some(t) => {
            let _ = writeln!(s, "min time to collision along plan: {} s", fmt_f64(t));
        }
        None => {
            let _ = writeln!(s, "min time to collision along plan: none (no approaching obstacle)");
        }
    }
    s
}

pub struct TrainOutput {
    pub table: QTable,
    pub curve: Vec<f64>,
    pub report: EpisodeReport,
}

fn train_scenario(scenario: &Scenario) -> Result<(TrackingEnv, TrainOutput), CliError> {
    let artifacts = scenario.plan()?;
    let mut env = scenario.tracking_env(&artifacts)?;
    let out = train(&mut env, &scenario.learn);
    let report = env.evaluate(&out.table);
    Ok((env, TrainOutput { table: out.table, curve: out.curve, report }))
}

fn write_report(path: &Path, r: &EpisodeReport) -> Result<(), CliError> {
    write_csv(
        path,
        &["avg_reward", "rmse", "ade", "accuracy_pct", "aborted"],
        [[fmt_f64(r.avg_reward), fmt_f64(r.rmse), fmt_f64(r.ade), fmt_f64(r.accuracy_pct), r.aborted.to_string()]],
    )
}

fn report_line(r: &EpisodeReport) -> String {
    format!(
        "avg reward {}  rmse {} m  ade {} m  accuracy {} %",
        fmt_f64(r.avg_reward),
        fmt_f64(r.rmse),
        fmt_f64(r.ade),
        fmt_f64(r.accuracy_pct)
    )
}

/// Trains, evaluates greedily and writes the table, learning curve and
/// report. A greedy rollout that blows up is a numerical failure, reported
/// after the artifacts are written.
pub fn cmd_train(ctx: &Context) -> Result<TrainOutput, CliError> {
    let (_, out) = train_scenario(&ctx.scenario)?;
    ctx.prepare_out()?;
    io::write_qtable(&ctx.path("qtable.bin"), &out.table)?;
    io::write_qtable_csv(&ctx.path("qtable.csv"), &out.table)?;
    write_csv(
        &ctx.path("learning_curve.csv"),
        &["episode", "avg_reward"],
        out.curve.iter().enumerate().map(|(i, r)| [i.to_string(), fmt_f64(*r)]),
    )?;
    write_report(&ctx.path("episode_report.csv"), &out.report)?;
    io::write_trajectory(&ctx.path("tracked.csv"), &out.report.tracked_trajectory)?;
    println!("{}", report_line(&out.report));
    if out.report.aborted {
        return Err(CliError::Numerical("greedy evaluation blew up".into()));
    }
    Ok(out)
}

fn load_table(ctx: &Context, env: &TrackingEnv, table: Option<&Path>) -> Result<QTable, CliError> {
    let path = table.map_or_else(|| ctx.path("qtable.bin"), Path::to_path_buf);
    let t = io::read_qtable(&path)?;
    let disc = env.discretizer();
    if t.n_states() != disc.n_states() || t.n_actions() != disc.n_actions() {
        return Err(CliError::Config(format!(
            "{} is {}x{} but the scenario discretizer needs {}x{}",
            path.display(),
            t.n_states(),
            t.n_actions(),
            disc.n_states(),
            disc.n_actions()
        )));
    }
    Ok(t)
}

/// Greedy evaluation of a saved table (default `qtable.bin` in the output
/// directory).
pub fn cmd_eval(ctx: &Context, table: Option<&Path>) -> Result<EpisodeReport, CliError> {
    let artifacts = ctx.scenario.plan()?;
    let mut env = ctx.scenario.tracking_env(&artifacts)?;
    let t = load_table(ctx, &env, table)?;
    let report = env.evaluate(&t);
    ctx.prepare_out()?;
    write_report(&ctx.path("eval_report.csv"), &report)?;
    io::write_trajectory(&ctx.path("eval_tracked.csv"), &report.tracked_trajectory)?;
    println!("{}", report_line(&report));
    if report.aborted {
        return Err(CliError::Numerical("greedy evaluation blew up".into()));
    }
    Ok(report)
}

/// Runs the sweep cells of `axes` and writes `sweep.csv`.
pub fn cmd_sweep(ctx: &Context, axes: &[Axis], threads: usize) -> Result<Vec<sweep::SweepRow>, CliError> {
    ctx.scenario.plan()?;
    let rows = sweep::run_sweep(&ctx.scenario, axes, ctx.scenario.learn.rng_seed, threads);
    ctx.prepare_out()?;
    write_csv(
        &ctx.path("sweep.csv"),
        &["parameter", "value", "rmse", "avg_reward", "ade", "accuracy_pct", "seed", "error"],
        rows.iter().map(|r| {
            let (metrics, error) = match &r.outcome {
                Ok(m) => ([m.rmse, m.avg_reward, m.ade, m.accuracy_pct].map(fmt_f64), String::new()),
                Err(e) => (Default::default(), e.clone()),
            };
            let [rmse, reward, ade, acc] = metrics;
            [r.parameter.to_string(), r.value.clone(), rmse, reward, ade, acc, r.seed.to_string(), error]
        }),
    )?;
    for r in &rows {
        match &r.outcome {
            Ok(m) => println!(
                "{}={}: rmse {} m  avg reward {}",
                r.parameter,
                r.value,
                fmt_f64(m.rmse),
                fmt_f64(m.avg_reward)
            ),
            Err(e) => println!("{}={}: failed: {e}", r.parameter, r.value),
        }
    }
    Ok(rows)
}

/// Disturbance study on a saved table, or on a freshly trained one when no
/// table is given.
pub fn cmd_disturb(ctx: &Context, table: Option<&Path>) -> Result<Vec<DeviationTrace>, CliError> {
    let (env, t) = match table {
        Some(p) => {
            let artifacts = ctx.scenario.plan()?;
            let env = ctx.scenario.tracking_env(&artifacts)?;
            let t = load_table(ctx, &env, Some(p))?;
            (env, t)
        }
        None => {
            let (env, out) = train_scenario(&ctx.scenario)?;
            (env, out.table)
        }
    };
    let s = &ctx.scenario;
    let traces = disturb::study(&env, &t, &s.quad, &s.disturbance, s.mass_amplification);
    ctx.prepare_out()?;
    write_csv(
        &ctx.path("deviation.csv"),
        &["case", "t", "planned_x", "planned_y", "actual_x", "actual_y", "alpha", "moment"],
        traces.iter().flat_map(|tr| {
            tr.rows.iter().map(|r| {
                let nums = [r.t, r.planned.x, r.planned.y, r.actual.x, r.actual.y, r.alpha, r.moment].map(fmt_f64);
                std::iter::once(tr.case.label().to_string()).chain(nums).collect::<Vec<_>>()
            })
        }),
    )?;
    write_csv(
        &ctx.path("disturb_summary.csv"),
        &[
            "case",
            "control",
            "amplified",
            "delay_steps",
            "max_deviation",
            "max_abs_alpha",
            "alpha_violated",
            "tracking_ade",
            "blow_up",
        ],
        traces.iter().map(|tr| {
            [
                tr.case.label().to_string(),
                tr.case.control.to_string(),
                tr.case.amplified.to_string(),
                tr.case.delay_steps.to_string(),
                fmt_f64(tr.max_deviation),
                fmt_f64(tr.max_abs_alpha),
                tr.alpha_violated.to_string(),
                fmt_f64(tr.tracking_ade),
                tr.blow_up.to_string(),
            ]
        }),
    )?;
    for tr in &traces {
        println!(
            "{}: max deviation {} m  max |alpha| {} rad{}{}",
            tr.case.label(),
            fmt_f64(tr.max_deviation),
            fmt_f64(tr.max_abs_alpha),
            if tr.alpha_violated { "  (alpha limit exceeded)" } else { "" },
            if tr.blow_up { "  (blew up)" } else { "" }
        );
    }
    Ok(traces)
}
