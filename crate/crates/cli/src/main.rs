//! `bec-transport`: design, verify and stress-test condensate transport
//! protocols.

mod commands;
mod config;
mod protocol;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use transport_core::par::Execution;

use commands::Run;
use config::{ExperimentConfig, Overrides};
use report::CliError;

#[derive(Parser, Debug)]
#[command(name = "bec-transport", version, about = "Fast transport of a 1D Bose-Einstein condensate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a protocol and write its trap and condensate trajectories.
    Design(RunArgs),
    /// Propagate the Gross-Pitaevskii equation through a protocol.
    Verify(RunArgs),
    /// Monte Carlo fidelity under white trap-position noise.
    NoiseSweep(SweepArgs),
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $BEC_TRANSPORT_OUT, then ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for the noise realizations.
    #[arg(long)]
    seed: Option<u64>,
    /// Propagation time step in s.
    #[arg(long)]
    dt: Option<f64>,
    /// Number of propagation grid points.
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Run the realizations on one thread.
    #[arg(long)]
    sequential: bool,
}

fn start(args: &RunArgs) -> Result<Run, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.apply(&Overrides { out: args.out.clone(), seed: args.seed, dt: args.dt, grid_points: args.grid_points })?;
    Run::start(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (r, summary) = match cli.command {
        Command::Design(a) => {
            let mut r = start(&a)?;
            let s = commands::design(&mut r)?;
            (r, s)
        }
        Command::Verify(a) => {
            let mut r = start(&a)?;
            let s = commands::verify(&mut r)?;
            (r, s)
        }
        Command::NoiseSweep(a) => {
            let mut r = start(&a.run)?;
            let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
            let s = commands::noise_sweep(&mut r, exec)?;
            (r, s)
        }
        Command::Selftest => {
            let checks = commands::selftest();
            let failed = checks.iter().filter(|c| !c.1).count();
            for (name, ok, detail) in &checks {
                println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
            }
            return if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Numeric(transport_core::Error::InvalidParameter(format!(
                    "{failed} self-test check(s) failed"
                ))))
            };
        }
    };
    if let Some(files) = summary["files"].as_array() {
        for f in files.iter().filter_map(|f| f.as_str()) {
            println!("{}", r.out.join(f).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.kind().to_string());
            eprintln!("{}", e.render());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
