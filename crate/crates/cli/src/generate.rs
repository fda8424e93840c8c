use std::path::PathBuf;

use clap::ValueEnum;
use mlti_core::io::{save_system, Encoding};
use mlti_core::random::rng;
use mlti_core::system::{random_system, small_siso_tucker, tucker_to_einstein, Construction, SystemSpec};

use crate::output::Failure;
use crate::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    Dense,
    Sparse,
    Tucker,
    PlantedTt,
    Symmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// The 3×2-state SISO Tucker system with ρ(A1)·ρ(A2) ≈ 0.9207.
    Worked,
}

#[derive(clap::Args)]
pub struct Args {
    /// Manifest path; tensors are written beside it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, conflicts_with = "construction")]
    preset: Option<Preset>,
    #[arg(long, value_enum, default_value = "dense")]
    construction: ConstructionArg,
    /// State extents J1,...,JN.
    #[arg(long, value_delimiter = ',', required_unless_present = "preset")]
    state: Vec<usize>,
    /// Input extents (default: all ones).
    #[arg(long, value_delimiter = ',')]
    input: Option<Vec<usize>>,
    /// Output extents (default: all ones).
    #[arg(long, value_delimiter = ',')]
    output: Option<Vec<usize>>,
    /// Nonzero fraction for `sparse`.
    #[arg(long, default_value_t = 0.3)]
    fill: f64,
    /// Internal TT ranks for `planted-tt`.
    #[arg(long, value_delimiter = ',')]
    tt_ranks: Option<Vec<usize>>,
    /// Rescale A to this spectral radius.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    id: Option<String>,
    /// Store tensors in the binary format.
    #[arg(long)]
    binary: bool,
    #[arg(long, env = "MLTI_SEED", default_value_t = 0)]
    seed: u64,
}

pub fn run(args: Args) -> CliResult<()> {
    let enc = if args.binary { Encoding::Binary } else { Encoding::Text };
    let s = match args.preset {
        Some(Preset::Worked) => tucker_to_einstein(&small_siso_tucker())?,
        None => {
            let ones = vec![1; args.state.len()];
            let construction = match args.construction {
                ConstructionArg::Dense => Construction::Dense,
                ConstructionArg::Sparse => {
                    if !(0.0..=1.0).contains(&args.fill) {
                        return Err(Failure::Usage(format!("--fill must lie in [0, 1], got {}", args.fill)));
                    }
                    Construction::Sparse(args.fill)
                }
                ConstructionArg::Tucker => Construction::Tucker,
                ConstructionArg::Symmetric => Construction::Symmetric,
                ConstructionArg::PlantedTt => Construction::PlantedTt(
                    args.tt_ranks
                        .clone()
                        .ok_or_else(|| Failure::Usage("--construction planted-tt needs --tt-ranks".into()))?,
                ),
            };
            let mut spec = SystemSpec::new(
                &args.state,
                args.input.as_deref().unwrap_or(&ones),
                args.output.as_deref().unwrap_or(&ones),
                construction,
            );
            if let Some(r) = args.rho {
                spec = spec.stable(r);
            }
            random_system(&mut rng(args.seed), &spec)?
        }
    };
    save_system(&args.out, &s, args.id.as_deref(), enc)?;
    Ok(())
}
