//! `mlti`: analysis, compression, frequency response and the reference
//! experiments for multilinear time-invariant systems.

mod analyze;
mod bench;
mod bode;
mod compress;
mod generate;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::Failure;

#[derive(Parser)]
#[command(name = "mlti", version, about = "Multilinear time-invariant system analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stability, reachability and observability of a system manifest.
    Analyze(analyze::Args),
    /// Generalized CPD/TTD compression with an H∞ error report.
    Compress(compress::Args),
    /// σmax(G(e^{iω})) on a uniform grid over [0, π] as CSV.
    Bode(bode::Args),
    /// Runs one of the reference experiments.
    Bench(bench::Args),
    /// Writes a seeded random (or preset) system.
    Generate(generate::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let res = match cli.command {
        Command::Analyze(a) => analyze::run(a),
        Command::Compress(a) => compress::run(a),
        Command::Bode(a) => bode::run(a),
        Command::Bench(a) => bench::run(a),
        Command::Generate(a) => generate::run(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("mlti: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;
