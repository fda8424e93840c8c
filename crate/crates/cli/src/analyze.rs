use std::path::PathBuf;
use std::time::Instant;

use clap::ValueEnum;
use mlti_core::decomp::{cp_als, generalized_cpd, generalized_cpd_search, CpOptions};
use mlti_core::einstein::unfolding_rank;
use mlti_core::io::{load_system, LoadedSystem};
use mlti_core::linalg::DEFAULT_RANK_TOL;
use mlti_core::system::{
    is_observable, is_reachable, stability_cpd, stability_eigen, stability_factored, stability_hosvd, stability_ttd,
    stability_ttd_cores, stability_tucker, Answer, Criterion, Factored, MltiSystem, RankMethod, StabilityVerdict,
    Verdict,
};
use mlti_core::Error;
use serde::Serialize;

use crate::output::{finite, write_json, Failure};
use crate::CliResult;

/// Fit a full `A` must reach before its CPD is used by `factored`/`tucker`.
const EXACT_FIT: f64 = 1.0 - 1e-10;
/// Largest Kronecker rank tried when `factored` has to decompose `A`.
const DEFAULT_FACTORED_RANK: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Eigen,
    Hosvd,
    Cpd,
    Ttd,
    Factored,
    Tucker,
}

fn parse_method(s: &str) -> Result<RankMethod, String> {
    RankMethod::parse(s).ok_or_else(|| {
        let all: Vec<&str> = RankMethod::ALL.iter().map(|m| m.as_str()).collect();
        format!("unknown method `{s}` (expected one of {})", all.join(", "))
    })
}

#[derive(clap::Args)]
pub struct Args {
    /// System manifest (`mlti-system v1`).
    manifest: PathBuf,
    /// Stability criteria to run.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "eigen,hosvd,cpd,ttd,factored,tucker")]
    criteria: Vec<CriterionArg>,
    /// Reachability/observability methods: rank_u, gramian, ttd, cpd_cert,
    /// mlrank_neg, hosvd_neg.
    #[arg(long, value_delimiter = ',', default_value = "rank_u,ttd", value_parser = parse_method)]
    methods: Vec<RankMethod>,
    /// Boundary band for the one-sided criteria (hosvd, cpd, ttd,
    /// factored): asymptotically stable below `1 − tol`.
    #[arg(long)]
    tol: Option<f64>,
    /// Exit with status 2 on any `unstable` or `no` verdict.
    #[arg(long)]
    strict: bool,
    /// CP rank for `cpd` (default: the unfolding rank of `A`) and the
    /// largest Kronecker rank tried for `factored`.
    #[arg(long)]
    cpd_rank: Option<usize>,
    #[arg(long, env = "MLTI_SEED", default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Params {
    full: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    factored: Option<usize>,
}

#[derive(Serialize)]
struct StabilityRecord {
    criterion: Criterion,
    verdict: Verdict,
    witness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    seconds: f64,
}

#[derive(Serialize)]
struct RankRecord {
    method: RankMethod,
    answer: Answer,
    rank: Option<usize>,
    target: usize,
    witness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    seconds: f64,
}

#[derive(Serialize)]
struct AnalysisReport {
    system: String,
    state: Vec<usize>,
    input: Vec<usize>,
    output: Vec<usize>,
    params: Params,
    stability: Vec<StabilityRecord>,
    reachability: Vec<RankRecord>,
    observability: Vec<RankRecord>,
}

fn precondition(criterion: Criterion, note: String) -> (StabilityVerdict, Option<String>) {
    (
        StabilityVerdict {
            verdict: Verdict::InconclusivePrecondition,
            criterion,
            witness: f64::NAN,
        },
        Some(note),
    )
}

/// Re-judges a one-sided verdict against `1 ± tol`.
fn rejudge(v: StabilityVerdict, tol: f64) -> StabilityVerdict {
    let judged = matches!(v.verdict, Verdict::AsymptoticallyStable | Verdict::Inconclusive | Verdict::StableMarginal);
    let verdict = match v.criterion {
        Criterion::Hosvd | Criterion::Cpd | Criterion::Ttd if judged => {
            if v.witness < 1.0 - tol {
                Verdict::AsymptoticallyStable
            } else {
                Verdict::Inconclusive
            }
        }
        Criterion::Factored if judged => {
            if v.witness < 1.0 - tol {
                Verdict::AsymptoticallyStable
            } else if v.witness <= 1.0 + tol {
                Verdict::StableMarginal
            } else {
                Verdict::Inconclusive
            }
        }
        _ => v.verdict,
    };
    StabilityVerdict { verdict, ..v }
}

fn factored_a(loaded: &LoadedSystem) -> Option<&Factored> {
    match loaded {
        LoadedSystem::Factored(f) => Some(&f.a),
        LoadedSystem::Full(_) => None,
    }
}

fn criterion(
    c: CriterionArg,
    s: &MltiSystem,
    fa: Option<&Factored>,
    args: &Args,
) -> mlti_core::Result<(StabilityVerdict, Option<String>)> {
    let a = s.a();
    let opts = CpOptions {
        seed: args.seed,
        ..CpOptions::default()
    };
    Ok(match c {
        CriterionArg::Eigen => (stability_eigen(a)?, None),
        CriterionArg::Hosvd => (stability_hosvd(a), None),
        CriterionArg::Ttd => match fa {
            Some(Factored::Tt(t)) => (stability_ttd_cores(t)?, None),
            _ => (stability_ttd(a)?, None),
        },
        CriterionArg::Cpd => {
            let rank = args.cpd_rank.unwrap_or_else(|| unfolding_rank(a, DEFAULT_RANK_TOL)).max(1);
            let f = cp_als(a.as_dense(), rank, &opts)?;
            let note = format!("rank-{rank} CP-ALS fit {:.3e}", f.fit);
            (stability_cpd(&f), Some(note))
        }
        CriterionArg::Factored => match fa {
            Some(f) => (stability_factored(f), None),
            None => {
                let max = args.cpd_rank.unwrap_or(DEFAULT_FACTORED_RANK);
                let (g, fit) = generalized_cpd_search(a, max, &opts)?;
                if fit < EXACT_FIT {
                    precondition(Criterion::Factored, format!("no Kronecker factorization up to rank {max} (fit {fit:.3e})"))
                } else {
                    let note = format!("Kronecker rank {}", g.rank());
                    (stability_factored(&Factored::Cp(g)), Some(note))
                }
            }
        },
        CriterionArg::Tucker => match fa {
            Some(f) => (stability_tucker(f)?, None),
            None => {
                let (g, fit) = generalized_cpd(a, 1, &opts)?;
                if fit < EXACT_FIT {
                    precondition(Criterion::Tucker, format!("A is not Kronecker rank one (fit {fit:.3e})"))
                } else {
                    (stability_tucker(&Factored::Cp(g))?, None)
                }
            }
        },
    })
}

fn rank_record(method: RankMethod, target: usize, run: impl FnOnce() -> mlti_core::Result<mlti_core::system::RankVerdict>) -> mlti_core::Result<RankRecord> {
    let t0 = Instant::now();
    let (v, note) = match run() {
        Ok(v) => (v, None),
        Err(Error::Precondition(m)) => (
            mlti_core::system::RankVerdict {
                answer: Answer::Inconclusive,
                method,
                rank: None,
                target,
                witness: None,
            },
            Some(m),
        ),
        Err(e) => return Err(e),
    };
    Ok(RankRecord {
        method: v.method,
        answer: v.answer,
        rank: v.rank,
        target: v.target,
        witness: v.witness.and_then(finite),
        note,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

pub fn run(args: Args) -> CliResult<()> {
    let loaded = load_system(&args.manifest)?;
    let s = loaded.to_full()?;
    let fa = factored_a(&loaded);
    let mut stability = Vec::new();
    for &c in &args.criteria {
        let t0 = Instant::now();
        let (mut v, note) = criterion(c, &s, fa, &args)?;
        if let Some(tol) = args.tol {
            v = rejudge(v, tol);
        }
        stability.push(StabilityRecord {
            criterion: v.criterion,
            verdict: v.verdict,
            witness: finite(v.witness),
            note,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    let target = s.state_count();
    let mut reachability = Vec::new();
    let mut observability = Vec::new();
    for &m in &args.methods {
        reachability.push(rank_record(m, target, || is_reachable(&s, m))?);
        observability.push(rank_record(m, target, || is_observable(&s, m))?);
    }
    let report = AnalysisReport {
        system: args.manifest.display().to_string(),
        state: s.state_dims().to_vec(),
        input: s.input_dims().to_vec(),
        output: s.output_dims().to_vec(),
        params: Params {
            full: s.param_count(),
            factored: match &loaded {
                LoadedSystem::Factored(f) => Some(f.param_count()),
                LoadedSystem::Full(_) => None,
            },
        },
        stability,
        reachability,
        observability,
    };
    write_json(args.out.as_deref(), &report)?;
    if args.strict {
        let unstable = report.stability.iter().any(|r| r.verdict == Verdict::Unstable);
        let no = report.reachability.iter().chain(&report.observability).any(|r| r.answer == Answer::No);
        if unstable || no {
            return Err(Failure::Strict("strict: an `unstable` or `no` verdict was reported".into()));
        }
    }
    Ok(())
}
