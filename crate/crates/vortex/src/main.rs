use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use vortex::config::CONFIG_REFERENCE;
use vortex::runner::{run, Command};

#[derive(Parser)]
#[command(
    name = "vortex",
    version,
    about = "Point-vortex dynamics: equilibria, spectra, periodic orbits, continuation, degree",
    after_long_help = CONFIG_REFERENCE
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the experiment config (JSON).
    config: PathBuf,
    /// Override the config's output directory (also: VORTEX_OUTPUT_DIR).
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the vortex ODE from given initial positions.
    Simulate(CommonArgs),
    /// Solve for a relative equilibrium and report its spectrum.
    Equilibrium(CommonArgs),
    /// Analyze the rotating-frame linearization at given positions.
    Spectrum(CommonArgs),
    /// Locate and classify critical points of the domain's Robin function.
    Robin(CommonArgs),
    /// One Newton solve of the scaled periodic problem at fixed r.
    SolvePeriodic(CommonArgs),
    /// Trace the branch of periodic solutions in r.
    Continue(CommonArgs),
    /// Compute the nonzero-degree certificate for a seeded branch.
    Degree(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Equilibrium(a) => (Command::Equilibrium, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Robin(a) => (Command::Robin, a),
        Cmd::SolvePeriodic(a) => (Command::SolvePeriodic, a),
        Cmd::Continue(a) => (Command::Continue, a),
        Cmd::Degree(a) => (Command::Degree, a),
    };
    let output_dir = args
        .output_dir
        .clone()
        .or_else(|| std::env::var_os("VORTEX_OUTPUT_DIR").map(PathBuf::from));
    match run(command, &args.config, output_dir.as_deref()) {
        Ok(report) => {
            for artifact in &report.artifacts {
                println!("{}", artifact.display());
            }
            println!("{}", report.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("vortex {}: {err}", command.name());
            ExitCode::from(err.exit_class().code() as u8)
        }
    }
}
