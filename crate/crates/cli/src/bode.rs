use std::path::PathBuf;

use mlti_core::io::{load_system, LoadedSystem};
use mlti_core::system::{bode_magnitudes, stability_eigen, Verdict};
use mlti_core::Error;

use crate::output::{float, Csv};
use crate::CliResult;

#[derive(clap::Args)]
pub struct Args {
    /// System manifest (`mlti-system v1`).
    manifest: PathBuf,
    /// Number of frequencies, uniform on [0, π].
    #[arg(long, default_value_t = 512)]
    points: usize,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate even when the system is not asymptotically stable.
    #[arg(long)]
    force: bool,
}

pub fn run(args: Args) -> CliResult<()> {
    let loaded = load_system(&args.manifest)?;
    let full = loaded.to_full()?;
    if !args.force {
        let v = stability_eigen(full.a())?;
        if v.verdict != Verdict::AsymptoticallyStable {
            return Err(Error::Precondition(format!(
                "system is {} (spectral radius {:.6}); pass --force to evaluate anyway",
                v.verdict, v.witness
            ))
            .into());
        }
    }
    let rows = match &loaded {
        LoadedSystem::Factored(f) => bode_magnitudes(f, args.points)?,
        LoadedSystem::Full(s) => bode_magnitudes(s, args.points)?,
    };
    let mut csv = Csv::new(&["omega", "sigma_max"]);
    for (w, g) in rows {
        csv.row(&[float(w), float(g)]);
    }
    csv.write(args.out.as_deref())
}
