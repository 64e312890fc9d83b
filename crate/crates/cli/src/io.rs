//! File formats: CSV artifacts and the binary Q-table.
//!
//! Floats are written with 9 significant digits, except corridor cell
//! centers, which use 6 fixed decimals.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use aeroarm_core::corridor::FeasibleCorridor;
use aeroarm_core::planner::Obstacle;
use aeroarm_core::qlearn::QTable;
use aeroarm_core::trajectory::{Sample, Trajectory};
use aeroarm_core::Vec2;

use crate::error::CliError;

/// `%.9g`: 9 significant digits, trailing zeros trimmed, scientific notation
/// outside `[1e-4, 1e9)`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// Writes a CSV file with the given header and pre-formatted rows.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<(), CliError> {
    write_csv(path, &["t", "x", "y"], t.samples().iter().map(|s| [fmt_f64(s.t), fmt_f64(s.p.x), fmt_f64(s.p.y)]))
}

pub fn write_corridor(path: &Path, c: &FeasibleCorridor) -> Result<(), CliError> {
    write_csv(
        path,
        &["index", "cell_x", "cell_y"],
        c.centers().map(|(i, p)| [i.to_string(), format!("{:.6}", p.x), format!("{:.6}", p.y)]),
    )
}

pub fn write_obstacles(path: &Path, obstacles: &[Obstacle]) -> Result<(), CliError> {
    write_csv(
        path,
        &["x", "y", "radius", "vx", "vy"],
        obstacles.iter().map(|o| {
            [o.center.x, o.center.y, o.radius, o.velocity.x, o.velocity.y].map(fmt_f64)
        }),
    )
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(CliError::Config(format!(
            "{}: expected header {}, found {}",
            path.display(),
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), line + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_obstacles(path: &Path) -> Result<Vec<Obstacle>, CliError> {
    read_rows(path, &["x", "y", "radius", "vx", "vy"])?
        .into_iter()
        .map(|r| {
            let o = Obstacle { center: Vec2::new(r[0], r[1]), radius: r[2], velocity: Vec2::new(r[3], r[4]) };
            o.validate().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok(o)
        })
        .collect()
}

/// Reads a uniformly sampled `t,x,y` trajectory.
pub fn read_target(path: &Path) -> Result<Trajectory, CliError> {
    let samples: Vec<Sample> =
        read_rows(path, &["t", "x", "y"])?.into_iter().map(|r| Sample { t: r[0], p: Vec2::new(r[1], r[2]) }).collect();
    Trajectory::from_timed(samples).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

const MAGIC: &[u8; 4] = b"AAQT";
const VERSION: u32 = 1;

/// Little-endian: magic, version, state count, action count, then the values
/// row-major by state.
pub fn write_qtable(path: &Path, table: &QTable) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    for v in [VERSION, dim(table.n_states())?, dim(table.n_actions())?] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in table.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn dim(n: usize) -> Result<u32, CliError> {
    u32::try_from(n).map_err(|_| CliError::Io(format!("table dimension {n} exceeds u32")))
}

pub fn read_qtable(path: &Path) -> Result<QTable, CliError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let bad = |what: &str| CliError::Io(format!("{}: {what}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("not a Q-table file"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    if word(4) != VERSION {
        return Err(bad("unsupported Q-table version"));
    }
    let (n_states, n_actions) = (word(8) as usize, word(12) as usize);
    let body = &bytes[16..];
    if body.len() != n_states * n_actions * 8 {
        return Err(bad("truncated or oversized Q-table"));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    QTable::from_values(n_states, n_actions, values).map_err(|e| bad(&e.to_string()))
}

pub fn write_qtable_csv(path: &Path, table: &QTable) -> Result<(), CliError> {
    let n = table.n_actions();
    write_csv(
        path,
        &["state_id", "action_id", "value"],
        table.values().iter().enumerate().map(|(k, v)| [(k / n).to_string(), (k % n).to_string(), fmt_f64(*v)]),
    )
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))
}
