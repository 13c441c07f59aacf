use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mergemon::commands;
use mergemon::error::EXIT_OK;
use mergemon::output::{resolve_out_dir, write_artifacts};
use mergemon::{CliError, RunConfig, RunOptions};

/// Merged-element transmon toolkit: spectra, dispersive readout,
/// two-tone spectroscopy and dielectric-loss budgets.
#[derive(Parser)]
#[command(name = "mergemon", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides MERGEMON_OUT and `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Series-capacitor participation ratios instead of the field solver.
    #[arg(long, global = true)]
    analytic_pr: bool,

    /// Loss scenario: amorphous or crystalline.
    #[arg(long, global = true)]
    scenario: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Transmon levels, anharmonicity and charge dispersion.
    Qubit,
    /// Two-tone steady-state spectra, one CSV per pump power.
    Spectrum,
    /// Participation-ratio loss budget and optional geometry sweep.
    Loss,
    /// Dispersive shifts and dressed resonator frequencies.
    Dispersive,
    /// Junction geometry to circuit parameters.
    Design,
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let config = RunConfig::load(path)?;
    let opts = RunOptions {
        workers: cli.workers,
        analytic_pr: cli.analytic_pr,
        scenario: cli.scenario.clone(),
    };
    let artifacts = match cli.command {
        Command::Qubit => commands::cmd_qubit(&config)?,
        Command::Spectrum => commands::cmd_spectrum(&config, &opts)?,
        Command::Loss => commands::cmd_loss(&config, &opts)?,
        Command::Dispersive => commands::cmd_dispersive(&config)?,
        Command::Design => commands::cmd_design(&config)?,
    };
    let dir = resolve_out_dir(
        cli.out.as_deref(),
        config.output.as_ref().and_then(|o| o.dir.as_deref()),
    );
    write_artifacts(&dir, &artifacts)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::from(EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("mergemon: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
