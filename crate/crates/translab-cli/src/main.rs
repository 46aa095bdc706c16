//! `translab`: batch front end for the transmission eigenvalue laboratory.
//!
//! Exit codes: 0 success, 1 analysis failure, 2 usage or configuration error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{Context, RunError};
use config::RunConfig;
use output::{config_hash, Manifest, OutputStage};

#[derive(Parser)]
#[command(name = "translab", version, about = "Transmission eigenvalue laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (INI).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed; overrides `[output] seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for independent analyses.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build the mesh and write it with a summary.
    Mesh,
    /// Check ellipticity, complementing and jump conditions.
    Check,
    /// Compute all eigenvalues with modulus up to t_max.
    Eigs,
    /// Fit the Weyl constant to the counting function.
    Weyl,
    /// Scan resolvent norms along rays.
    Resolvent,
    /// Check the resolvent trace identity on a dense pencil.
    Trace,
    /// Tabulate the separated-variables disk eigenvalues.
    Oracle,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Mesh => "mesh",
            Command::Check => "check",
            Command::Eigs => "eigs",
            Command::Weyl => "weyl",
            Command::Resolvent => "resolvent",
            Command::Trace => "trace",
            Command::Oracle => "oracle",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, RunError> {
    let path = cli.config.as_ref().ok_or_else(|| RunError::Input("--config PATH is required".into()))?;
    let mut config = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if cli.threads == 0 {
        return Err(RunError::Input("--threads must be at least 1".into()));
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let mut out = match OutputStage::new(&config.output_dir, config_hash(&config)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", config.output_dir.display());
            return ExitCode::from(1);
        }
    };

    let command = cli.command;
    let mut ctx = Context { config: &config, out: &mut out, threads: cli.threads };
    let result = match command {
        Command::Mesh => commands::mesh(&mut ctx),
        Command::Check => commands::check(&mut ctx),
        Command::Eigs => commands::eigs(&mut ctx),
        Command::Weyl => commands::weyl(&mut ctx),
        Command::Resolvent => commands::resolvent(&mut ctx),
        Command::Trace => commands::trace(&mut ctx),
        Command::Oracle => commands::oracle(&mut ctx),
    };
    let code = match &result {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("{}: one or more checks failed; see the JSON report in {}", command.name(), config.output_dir.display());
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            let report = json!({ "command": command.name(), "kind": e.kind(), "error": e.to_string() });
            if let Err(io) = out.write_json("error.json", &report) {
                eprintln!("error: could not write error report: {io}");
            }
            e.exit_code()
        }
    };
    let manifest = Manifest {
        command: command.name(),
        seed: config.seed,
        threads: cli.threads,
        translab_version: translab::VERSION,
        cli_version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        exit_code: code,
        outputs: out.written().to_vec(),
    };
    if let Err(e) = out.write_json(&format!("{}_manifest.json", command.name()), &manifest) {
        eprintln!("error: could not write manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code as u8)
}
