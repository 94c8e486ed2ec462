use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info, warn};

use phasefield::io::{
    check_dissipation, exit_code, parse_config, parse_sweep, run, sweep, RunConfig, EXIT_CONFIG,
    EXIT_IO, EXIT_NOT_CONVERGED, EXIT_OK,
};
use phasefield::Error;

/// Phase-field brittle fracture solver.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for artifacts; overrides the configured one.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Write a field snapshot every N steps (0 disables).
    #[arg(long, global = true)]
    snapshot_stride: Option<usize>,
    /// Concurrent sweep rows.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run a quasi-static simulation.
    Run { config: PathBuf },
    /// Run a parameter sweep.
    Sweep { spec: PathBuf },
    /// Check a configuration and print it with defaults applied.
    Validate { config: PathBuf },
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_config(path: &Path, cli: &Cli) -> Result<RunConfig, Error> {
    let mut config = parse_config(&read(path)?)?;
    if let Some(stride) = cli.snapshot_stride {
        config.snapshot_stride = stride;
    }
    if let Some(dir) = &cli.output_dir {
        config.output_dir = Some(dir.clone());
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    match &cli.command {
        Command::Validate { config } => {
            print!("{}", load_config(config, cli)?.echo());
            Ok(EXIT_OK)
        }
        Command::Run { config } => {
            let config = load_config(config, cli)?;
            let dir = config.output_dir.clone().unwrap_or_else(|| PathBuf::from("output"));
            let summary = run(&config, &dir)?;
            info!("wrote {} steps to {}", summary.records.len(), dir.display());
            if let Err(step) = check_dissipation(&summary.records) {
                warn!("dissipated energy decreases at step {step}");
            }
            match summary.failure {
                None => Ok(EXIT_OK),
                Some(e) => {
                    error!("{e}");
                    Ok(EXIT_NOT_CONVERGED)
                }
            }
        }
        Command::Sweep { spec } => {
            let mut spec = parse_sweep(&read(spec)?)?;
            if let Some(stride) = cli.snapshot_stride {
                spec.base.snapshot_stride = stride;
            }
            let dir = cli
                .output_dir
                .clone()
                .or_else(|| spec.base.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("sweep"));
            let rows = sweep(&spec, &dir, cli.threads)?;
            let mut failed = false;
            for r in &rows {
                if let Some(m) = &r.message {
                    error!("{} = {}: {m}", spec.parameter.name(), r.value);
                }
                failed |= !r.converged;
            }
            print!("{}", std::fs::read_to_string(dir.join("sweep.csv")).unwrap_or_default());
            Ok(if failed { EXIT_NOT_CONVERGED } else { EXIT_OK })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    };
    debug_assert!([EXIT_OK, EXIT_CONFIG, EXIT_NOT_CONVERGED, EXIT_IO].contains(&code));
    ExitCode::from(code as u8)
}
