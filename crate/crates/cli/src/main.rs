mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{
    BandwidthArgs, CoverageArgs, FigureArgs, MeanUesArgs, SamplePppArgs, VerifyIdentityArgs,
};
use crate::config::{CliError, CliResult};

/// Poisson-Voronoi typical-cell experiments: point samples, identity checks,
/// coverage, bandwidth consumption and figure data.
#[derive(Debug, Parser)]
#[command(name = "ppvt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a homogeneous PPP on a disk and write it as x,y CSV
    SamplePpp(SamplePppArgs),
    /// Compare closed forms with Monte Carlo on the built-in field suites
    VerifyIdentity(VerifyIdentityArgs),
    /// Mean number of UEs in the typical cell
    MeanUes(MeanUesArgs),
    /// Coverage probability of the typical UE
    Coverage(CoverageArgs),
    /// Mean bandwidth consumed by the typical cell
    Bandwidth(BandwidthArgs),
    /// Exact and approximate consumption curves as CSV
    Figure(FigureArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("PPVT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("PPVT_THREADS must be a non-negative integer, got {raw:?}")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failure(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::SamplePpp(a) => commands::sample_ppp(&a),
        Command::VerifyIdentity(a) => commands::verify_identity(&a),
        Command::MeanUes(a) => commands::mean_ues(&a),
        Command::Coverage(a) => commands::coverage(&a),
        Command::Bandwidth(a) => commands::bandwidth(&a),
        Command::Figure(a) => commands::figure(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ppvt: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
