//! Run artifacts: energies table, iteration log, provenance and VTK
//! snapshots.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::cases::{run_quasistatic_observed, RunObserver, StepRecord};
use crate::error::{Error, Result};
use crate::fem::{Problem, State};
use crate::mesh::Mesh;
use crate::solver::{IterationKind, IterationRecord};

use super::config::RunConfig;

pub const ENERGIES_FILE: &str = "energies.csv";
pub const ITERATIONS_FILE: &str = "iterations.log";
pub const PROVENANCE_FILE: &str = "provenance.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub const ENERGIES_HEADER: &str =
    "step,load,elastic,dissipated,total,am_iters,newton_iters,krylov_iters,omega_bar_min";
const ENERGIES_UNITS: &str = "# units: step=-, load=load parameter, elastic/dissipated/total=energy per unit thickness, \
     iteration counts=-, omega_bar_min=- (empty when no AM iteration ran)";

/// The energies table as CSV text.
pub fn energies_csv(records: &[StepRecord]) -> String {
    let mut out = String::new();
    writeln!(out, "{ENERGIES_UNITS}").unwrap();
    writeln!(out, "{ENERGIES_HEADER}").unwrap();
    for r in records {
        let omega_bar = r.report.omega_bar_min.map(|w| format!("{w:.12e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{}",
            r.step,
            r.load,
            r.energy.elastic,
            r.energy.dissipated,
            r.energy.total,
            r.report.am_iterations,
            r.report.newton_iterations,
            r.report.total_krylov_iterations,
            omega_bar
        )
        .unwrap();
    }
    out
}

/// Checks that the dissipated energy never decreases by more than
/// `1e-8 |total|` between consecutive steps; returns the offending step.
pub fn check_dissipation(records: &[StepRecord]) -> std::result::Result<(), usize> {
    for w in records.windows(2) {
        let tol = 1e-8 * w[1].energy.total.abs().max(w[0].energy.total.abs());
        if w[1].energy.dissipated < w[0].energy.dissipated - tol {
            return Err(w[1].step);
        }
    }
    Ok(())
}

/// Legacy ASCII VTK unstructured grid with point data `alpha` and `u`.
pub fn vtk_string(mesh: &Mesh, state: &State) -> String {
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    let mut s = String::with_capacity(64 * (nv + nt));
    s.push_str("# vtk DataFile Version 3.0\nphasefield snapshot\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {nv} double").unwrap();
    for p in &mesh.vertices {
        writeln!(s, "{:.12e} {:.12e} 0", p[0], p[1]).unwrap();
    }
    writeln!(s, "CELLS {nt} {}", 4 * nt).unwrap();
    for t in &mesh.triangles {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        s.push_str("5\n");
    }
    writeln!(s, "POINT_DATA {nv}\nSCALARS alpha double 1\nLOOKUP_TABLE default").unwrap();
    for a in &state.alpha {
        writeln!(s, "{a:.12e}").unwrap();
    }
    s.push_str("VECTORS u double\n");
    for v in 0..nv {
        writeln!(s, "{:.12e} {:.12e} 0", state.u[2 * v], state.u[2 * v + 1]).unwrap();
    }
    s
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Text of the provenance file: code version plus the resolved configuration.
pub fn provenance(config: &RunConfig) -> String {
    format!(
        "# phasefield {}\n# resolved configuration; this file is itself a valid run configuration\n{}",
        env!("CARGO_PKG_VERSION"),
        config.echo()
    )
}

#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub records: Vec<StepRecord>,
    pub failure: Option<Error>,
}

impl RunSummary {
    pub fn converged(&self) -> bool {
        self.failure.is_none()
    }

    pub fn total_am_iterations(&self) -> usize {
        self.records.iter().map(|r| r.report.am_iterations).sum()
    }

    pub fn total_newton_iterations(&self) -> usize {
        self.records.iter().map(|r| r.report.newton_iterations).sum()
    }

    pub fn total_krylov_iterations(&self) -> usize {
        self.records.iter().map(|r| r.report.total_krylov_iterations).sum()
    }
}

struct FileObserver {
    log: BufWriter<File>,
    log_path: PathBuf,
    snapshot_dir: PathBuf,
    stride: usize,
    error: Option<Error>,
}

impl FileObserver {
    fn keep(&mut self, r: Result<()>) {
        if let (Err(e), None) = (r, &self.error) {
            self.error = Some(e);
        }
    }
}

impl RunObserver for FileObserver {
    fn iteration(&mut self, step: usize, rec: &IterationRecord) {
        let kind = match rec.kind {
            IterationKind::Am => "am",
            IterationKind::Newton => "newton",
        };
        let omega_bar = rec.omega_bar.map(|w| format!("{w:.6e}")).unwrap_or_else(|| "-".into());
        let r = writeln!(
            self.log,
            "{step} {kind} {} {:.12e} {:.12e} {omega_bar}",
            rec.iteration, rec.residual_norm, rec.energy.total
        )
        .map_err(|e| Error::io(&self.log_path, e));
        self.keep(r);
    }

    fn step(&mut self, record: &StepRecord, state: &State, problem: &Problem) {
        if self.stride == 0 || !record.step.is_multiple_of(self.stride) {
            return;
        }
        let path = self.snapshot_dir.join(format!("step_{:04}.vtk", record.step));
        let r = write_file(&path, &vtk_string(&problem.mesh, state));
        self.keep(r);
    }
}

/// Runs the configured case and writes its artifacts into `output_dir`.
/// A solver failure is reported in the summary, with the artifacts of
/// the completed steps still written; configuration and I/O problems are
/// returned as errors.
pub fn run(config: &RunConfig, output_dir: &Path) -> Result<RunSummary> {
    config.validate()?;
    let setup = config.setup()?;
    fs::create_dir_all(output_dir).map_err(|e| Error::io(output_dir, e))?;
    write_file(&output_dir.join(PROVENANCE_FILE), &provenance(config))?;
    let snapshot_dir = output_dir.join(SNAPSHOT_DIR);
    if config.snapshot_stride > 0 {
        fs::create_dir_all(&snapshot_dir).map_err(|e| Error::io(&snapshot_dir, e))?;
    }
    let log_path = output_dir.join(ITERATIONS_FILE);
    let mut log = BufWriter::new(File::create(&log_path).map_err(|e| Error::io(&log_path, e))?);
    writeln!(log, "# step kind iteration residual_norm energy omega_bar").map_err(|e| Error::io(&log_path, e))?;
    let mut observer = FileObserver {
        log,
        log_path,
        snapshot_dir,
        stride: config.snapshot_stride,
        error: None,
    };
    let outcome = run_quasistatic_observed(&setup, &config.solver, &mut observer)?;
    if let Some(e) = observer.error.take() {
        return Err(e);
    }
    observer.log.flush().map_err(|e| Error::io(&observer.log_path, e))?;
    write_file(&output_dir.join(ENERGIES_FILE), &energies_csv(&outcome.records))?;
    Ok(RunSummary {
        output_dir: output_dir.to_path_buf(),
        records: outcome.records,
        failure: outcome.failure,
    })
}
