//! Parameter sweeps over a base configuration.
//!
//! ```toml
//! parameter = "omega"        # omega | ell | shock_ratio | h
//! values = [1.0, 1.2, 1.4, 1.6]
//!
//! [base]                     # a run configuration
//! case = "surfing"
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::config::{from_toml_strict, parse_config, CaseParams, RunConfig};
use super::output::run;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Omega,
    Ell,
    /// `ΔT / ΔT_c` of the thermal shock.
    ShockRatio,
    H,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Omega => "omega",
            SweepParameter::Ell => "ell",
            SweepParameter::ShockRatio => "shock_ratio",
            SweepParameter::H => "h",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub base: RunConfig,
}

#[derive(Deserialize)]
struct SweepFile {
    parameter: SweepParameter,
    values: Vec<f64>,
    base: toml::Table,
}

impl SweepSpec {
    /// Configuration of the row with parameter `value`.
    pub fn row_config(&self, value: f64) -> Result<RunConfig> {
        let mut c = self.base.clone();
        match self.parameter {
            SweepParameter::Omega => c.solver.set_omega(value).map_err(|e| Error::Config(e.to_string()))?,
            SweepParameter::Ell => c.material.ell = value,
            SweepParameter::H => c.params.set_h(value),
            SweepParameter::ShockRatio => match &mut c.params {
                CaseParams::ThermalShock(p) => p.shock_ratio = value,
                _ => return Err(Error::Config("shock_ratio sweeps need a thermal_shock base".into())),
            },
        }
        c.validate()?;
        Ok(c)
    }
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let file: SweepFile = from_toml_strict(text)?;
    if file.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let base_text = toml::to_string(&file.base).map_err(|e| Error::Config(e.to_string()))?;
    let base = parse_config(&base_text).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("in [base]: {m}")),
        other => other,
    })?;
    let spec = SweepSpec {
        parameter: file.parameter,
        values: file.values,
        base,
    };
    for &v in &spec.values {
        spec.row_config(v)?;
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    pub am_iterations: usize,
    pub newton_iterations: usize,
    pub krylov_iterations: usize,
    pub wall_time_s: f64,
    pub output_dir: PathBuf,
    /// Error message of a failed row.
    pub message: Option<String>,
}

impl SweepRow {
    pub fn avg_krylov_per_newton(&self) -> f64 {
        if self.newton_iterations == 0 {
            0.0
        } else {
            self.krylov_iterations as f64 / self.newton_iterations as f64
        }
    }
}

/// Percentage decrease of total AM plus Newton iterations relative to the
/// reference row: the `omega = 1` row for omega sweeps, the first row
/// otherwise.
pub fn reductions(parameter: SweepParameter, rows: &[SweepRow]) -> Vec<f64> {
    let reference = match parameter {
        SweepParameter::Omega => rows.iter().position(|r| r.value == 1.0).unwrap_or(0),
        _ => 0,
    };
    let total = |r: &SweepRow| (r.am_iterations + r.newton_iterations) as f64;
    let base = rows.get(reference).map(total).unwrap_or(0.0);
    rows.iter()
        .map(|r| if base > 0.0 { 100.0 * (1.0 - total(r) / base) } else { 0.0 })
        .collect()
}

pub const SWEEP_HEADER: &str =
    "value,status,am_iters,newton_iters,avg_krylov_per_newton,wall_time_s,reduction_pct";

pub fn summary_csv(parameter: SweepParameter, rows: &[SweepRow]) -> String {
    let mut out = format!(
        "# parameter: {}; units: wall_time_s=seconds, reduction_pct=percent, iteration counts=-\n{SWEEP_HEADER}\n",
        parameter.name()
    );
    for (r, red) in rows.iter().zip(reductions(parameter, rows)) {
        writeln!(
            out,
            "{},{},{},{},{:.6e},{:.6e},{:.6e}",
            r.value,
            if r.converged { "converged" } else { "failed" },
            r.am_iterations,
            r.newton_iterations,
            r.avg_krylov_per_newton(),
            r.wall_time_s,
            red
        )
        .unwrap();
    }
    out
}

fn run_row(spec: &SweepSpec, index: usize, output_dir: &Path) -> SweepRow {
    let value = spec.values[index];
    let dir = output_dir.join(format!("row_{index:02}_{}_{value}", spec.parameter.name()));
    let start = Instant::now();
    let result = spec.row_config(value).and_then(|c| run(&c, &dir));
    let wall_time_s = start.elapsed().as_secs_f64();
    match result {
        Ok(s) => SweepRow {
            value,
            converged: s.converged(),
            am_iterations: s.total_am_iterations(),
            newton_iterations: s.total_newton_iterations(),
            krylov_iterations: s.total_krylov_iterations(),
            wall_time_s,
            output_dir: dir,
            message: s.failure.map(|e| e.to_string()),
        },
        Err(e) => SweepRow {
            value,
            converged: false,
            am_iterations: 0,
            newton_iterations: 0,
            krylov_iterations: 0,
            wall_time_s,
            output_dir: dir,
            message: Some(e.to_string()),
        },
    }
}

/// Runs every row, `threads` at a time, each into its own subdirectory of
/// `output_dir`, and writes `sweep.csv`. Failed rows are marked and the
/// sweep continues.
pub fn sweep(spec: &SweepSpec, output_dir: &Path, threads: usize) -> Result<Vec<SweepRow>> {
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    let n = spec.values.len();
    let next = Mutex::new(0usize);
    let slots: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; n]);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = {
                    let mut k = next.lock().unwrap();
                    let i = *k;
                    *k += 1;
                    i
                };
                if i >= n {
                    break;
                }
                let row = run_row(spec, i, output_dir);
                slots.lock().unwrap()[i] = Some(row);
            });
        }
    });
    let rows: Vec<SweepRow> = slots.into_inner().unwrap().into_iter().map(|r| r.expect("every row ran")).collect();
    let path = output_dir.join("sweep.csv");
    fs::write(&path, summary_csv(spec.parameter, &rows)).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}
