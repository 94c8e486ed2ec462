//! Configuration, run orchestration and artifact output.

mod config;
mod output;
mod sweep;

pub use config::{default_material, parse_config, CaseParams, RunConfig, DEFAULT_SNAPSHOT_STRIDE};
pub use output::{
    check_dissipation, energies_csv, provenance, run, vtk_string, RunSummary, ENERGIES_FILE,
    ENERGIES_HEADER, ITERATIONS_FILE, PROVENANCE_FILE, SNAPSHOT_DIR,
};
pub use sweep::{
    parse_sweep, reductions, summary_csv, sweep, SweepParameter, SweepRow, SweepSpec, SWEEP_HEADER,
};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_NOT_CONVERGED,
    }
}
