use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use mlti_core::decomp::{CpOptions, Truncation};
use mlti_core::io::{load_system, save_factored_system, Encoding};
use mlti_core::system::{compress, CompressFormat};
use serde::Serialize;

use crate::output::{write_json, Failure};
use crate::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Cpd,
    Ttd,
}

#[derive(clap::Args)]
pub struct Args {
    /// System manifest (`mlti-system v1`).
    manifest: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    /// cpd: Kronecker ranks of A,B,C. ttd: maximum internal TT ranks, used
    /// for all three tensors.
    #[arg(long, value_delimiter = ',')]
    ranks: Option<Vec<usize>>,
    /// cpd: search each Kronecker rank up to this value instead of --ranks.
    #[arg(long)]
    search: Option<usize>,
    /// ttd: relative Frobenius error per tensor (0 keeps exact ranks).
    #[arg(long)]
    eps: Option<f64>,
    /// Where to write the factored system manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Store factor tensors in the binary format.
    #[arg(long)]
    binary: bool,
    /// Report path; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, env = "MLTI_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Serialize)]
struct CompressionReport {
    system: String,
    format: &'static str,
    /// Kronecker ranks, or internal TT ranks, of A, B and C.
    ranks: [Vec<usize>; 3],
    params: usize,
    full_params: usize,
    fits: [f64; 3],
    hinf_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
    seconds: f64,
}

fn usage(msg: &str) -> Failure {
    Failure::Usage(msg.to_string())
}

fn format_of(args: &Args) -> CliResult<CompressFormat> {
    let opts = CpOptions {
        seed: args.seed,
        ..CpOptions::default()
    };
    Ok(match args.format {
        Format::Cpd => match (&args.ranks, args.search) {
            (Some(r), None) => {
                let ranks: [usize; 3] = r
                    .as_slice()
                    .try_into()
                    .map_err(|_| usage("--format cpd takes three ranks (A,B,C)"))?;
                CompressFormat::Cpd { ranks, opts }
            }
            (None, Some(max)) => CompressFormat::CpdSearch { max_rank: max, opts },
            _ => return Err(usage("--format cpd needs exactly one of --ranks or --search")),
        },
        Format::Ttd => {
            if args.search.is_some() {
                return Err(usage("--search applies to --format cpd"));
            }
            let t = match (&args.ranks, args.eps) {
                (Some(_), Some(_)) => return Err(usage("--ranks and --eps are exclusive")),
                (Some(r), None) => Truncation::MaxRanks(r.clone()),
                (None, Some(e)) if e == 0.0 => Truncation::exact(),
                (None, Some(e)) if e > 0.0 && e.is_finite() => Truncation::Relative(e),
                (None, Some(e)) => return Err(usage(&format!("--eps must be a finite non-negative number, got {e}"))),
                (None, None) => Truncation::exact(),
            };
            CompressFormat::Ttd {
                a: t.clone(),
                b: t.clone(),
                c: t,
            }
        }
    })
}

pub fn run(args: Args) -> CliResult<()> {
    let format = format_of(&args)?;
    let s = load_system(&args.manifest)?.to_full()?;
    let t0 = Instant::now();
    let r = compress(&s, &format)?;
    let seconds = t0.elapsed().as_secs_f64();
    if let Some(out) = &args.out {
        let enc = if args.binary { Encoding::Binary } else { Encoding::Text };
        save_factored_system(out, &r.system, None, enc)?;
    }
    let report = CompressionReport {
        system: args.manifest.display().to_string(),
        format: match args.format {
            Format::Cpd => "cpd",
            Format::Ttd => "ttd",
        },
        ranks: [r.system.a.ranks(), r.system.b.ranks(), r.system.c.ranks()],
        params: r.param_count,
        full_params: r.full_param_count,
        fits: r.fits,
        hinf_error: r.hinf_error,
        out: args.out.as_ref().map(|p| p.display().to_string()),
        seconds,
    };
    write_json(args.report.as_deref(), &report)
}
