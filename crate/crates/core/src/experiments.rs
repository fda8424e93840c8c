//! The four reference experiments: the worked reachability/observability
//! example, TTD-based σmax against the dense SVD, Kronecker-rank and TT-rank
//! truncation of a sparse SISO system, and generalized TTD against balanced
//! truncation on a system with planted TT ranks.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::decomp::{gen_ttd_to_full, CpOptions, Truncation};
use crate::einstein::{phi, EvenPairedTensor, PairedShape};
use crate::error::Result;
use crate::linalg;
use crate::random::rng;
use crate::system::{
    balanced_truncation_baseline, compress, is_observable, is_reachable, observability_tensor, random_gen_tt,
    random_system, reachability_tensor, small_siso_tucker, stability_tucker, ttd_sigma_max, tucker_to_einstein,
    Answer, CompressFormat, Construction, Factored, MltiSystem, RankMethod, SystemSpec, Verdict,
};

/// Printed reachability slices `R_{::ab}` of the worked example in the order
/// `::11, ::21, ::12, ::22`, rows top to bottom.
pub const WORKED_REACH_SLICES: [[[f64; 3]; 3]; 4] = [
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.8, 0.0]],
    [[0.0, 0.0, 0.5], [0.0, 0.0, 0.4], [1.0, 0.0, 0.57]],
    [[0.4, 0.0, 0.378], [0.57, 0.0, 0.4849], [0.756, 0.0, 0.6339]],
    [[0.0, 0.285, 0.0], [0.0, 0.378, 0.0], [0.0, 0.4849, 0.0]],
];

/// Printed observability slices `O_{::ab}`, same layout.
pub const WORKED_OBS_SLICES: [[[f64; 3]; 3]; 4] = [
    [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.5]],
    [[0.0, 0.0, 0.0], [0.04, 0.15, 0.285], [0.0, 0.0, 0.0]],
    [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]],
    [[0.1, 0.25, 0.4], [0.0, 0.0, 0.0], [0.057, 0.1825, 0.378]],
];

/// Printed spectral-radius product of the worked example.
pub const WORKED_RHO_PRODUCT: f64 = 0.9207;

const SLICE_ORDER: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

/// `T_{::ab}` (0-based `a`, `b`) of an order-4 tensor.
pub fn slice34(t: &EvenPairedTensor, a: usize, b: usize) -> DMatrix<f64> {
    let d = t.as_dense();
    DMatrix::from_fn(d.dims()[0], d.dims()[1], |i, j| d.get(&[i, j, a, b]))
}

fn max_slice_error(t: &EvenPairedTensor, golden: &[[[f64; 3]; 3]; 4]) -> f64 {
    SLICE_ORDER
        .iter()
        .zip(golden)
        .map(|(&(a, b), g)| {
            let s = slice34(t, a, b);
            let g = DMatrix::from_fn(3, 3, |i, j| g[i][j]);
            if s.shape() != (3, 3) {
                return f64::INFINITY;
            }
            (s - g).amax()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct WorkedExample {
    /// Largest absolute deviation from the printed slices.
    pub reach_slice_error: f64,
    pub obs_slice_error: f64,
    pub reach_rank: Option<usize>,
    pub obs_rank: Option<usize>,
    pub rho_product: f64,
    pub stability: Verdict,
    pub reachable: Answer,
    pub observable: Answer,
    pub seconds: f64,
}

impl WorkedExample {
    /// Slices within 1e-4, ranks 6, ρ product within 1e-3, and the three
    /// positive verdicts.
    pub fn pass(&self) -> bool {
        self.reach_slice_error <= 1e-4
            && self.obs_slice_error <= 1e-4
            && self.reach_rank == Some(6)
            && self.obs_rank == Some(6)
            && (self.rho_product - WORKED_RHO_PRODUCT).abs() <= 1e-3
            && self.stability == Verdict::AsymptoticallyStable
            && self.reachable == Answer::Yes
            && self.observable == Answer::Yes
    }
}

pub fn worked_example() -> Result<WorkedExample> {
    let t0 = Instant::now();
    let tucker = small_siso_tucker();
    let s = tucker_to_einstein(&tucker)?;
    let r = reachability_tensor(&s)?;
    let o = observability_tensor(&s)?;
    let reach = is_reachable(&s, RankMethod::Ttd)?;
    let obs = is_observable(&s, RankMethod::Ttd)?;
    let a = crate::decomp::GenCpFactors::new(s.a().pshape().clone(), vec![tucker.a.clone()])?;
    let st = stability_tucker(&Factored::Cp(a))?;
    Ok(WorkedExample {
        reach_slice_error: max_slice_error(&r, &WORKED_REACH_SLICES),
        obs_slice_error: max_slice_error(&o, &WORKED_OBS_SLICES),
        reach_rank: reach.rank,
        obs_rank: obs.rank,
        rho_product: st.witness,
        stability: st.verdict,
        reachable: reach.answer,
        observable: obs.answer,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaRow {
    /// `φ(A)` is `2^n × 2^n`.
    pub n: usize,
    pub sigma_ttd: f64,
    pub sigma_svd: f64,
    pub rel_error: f64,
    pub ttd_seconds: f64,
    pub svd_seconds: f64,
    pub verdict: Verdict,
}

/// TT rank and core fill of the random `A` in [`sigma_max_comparison`].
pub const SIGMA_TT_RANK: usize = 3;
pub const SIGMA_FILL: f64 = 0.5;
/// `A` is scaled to this Frobenius norm, so `σmax(φ(A)) < 1`.
pub const SIGMA_SCALE: f64 = 0.95;

/// Random sparse `A ∈ R^{2×2×···×2×2}` (n pairs) held as generalized TT
/// cores, scaled to Frobenius norm [`SIGMA_SCALE`].
pub fn sigma_test_tensor(seed: u64, n: usize) -> Result<crate::decomp::GenTtCores> {
    let mut g = rng(seed.wrapping_add(n as u64));
    let pshape = PairedShape::square(&vec![2; n])?;
    let t = random_gen_tt(&mut g, &pshape, &vec![SIGMA_TT_RANK; n - 1], Some(SIGMA_FILL))?;
    let norm = gen_ttd_to_full(&t).frobenius_norm();
    let mut cores = t.cores().to_vec();
    if norm > 0.0 {
        cores[0] = cores[0].scale(SIGMA_SCALE / norm);
    }
    crate::decomp::GenTtCores::new(pshape, cores)
}

/// σmax of `φ(A)` from the orthonormalized TTD of `Ã` (timed from the
/// generalized TT cores) against the dense SVD of `φ(A)`.
pub fn sigma_max_comparison(seed: u64, n: usize) -> Result<SigmaRow> {
    let cores = sigma_test_tensor(seed, n)?;
    let t0 = Instant::now();
    let a = gen_ttd_to_full(&cores);
    let sigma_ttd = ttd_sigma_max(&a)?;
    let ttd_seconds = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let m = phi(&a);
    let sigma_svd = linalg::singular_values(&m).first().copied().unwrap_or(0.0);
    let svd_seconds = t0.elapsed().as_secs_f64();
    let rel_error = if sigma_svd == 0.0 { sigma_ttd.abs() } else { (sigma_ttd - sigma_svd).abs() / sigma_svd };
    let tol = 1e-9 * (1.0 + a.frobenius_norm());
    let verdict = if sigma_ttd < 1.0 - tol { Verdict::AsymptoticallyStable } else { Verdict::Inconclusive };
    Ok(SigmaRow {
        n,
        sigma_ttd,
        sigma_svd,
        rel_error,
        ttd_seconds,
        svd_seconds,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionRow {
    /// `cpd`, `ttd` or `balanced`.
    pub method: &'static str,
    /// Kronecker ranks, internal TT ranks per tensor, or kept states.
    pub ranks: Vec<Vec<usize>>,
    pub params: usize,
    pub hinf_error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReductionTable {
    pub full_params: usize,
    pub rows: Vec<ReductionRow>,
}

fn compress_row(s: &MltiSystem, method: &'static str, f: &CompressFormat) -> Result<ReductionRow> {
    let t0 = Instant::now();
    let r = compress(s, f)?;
    Ok(ReductionRow {
        method,
        ranks: vec![r.system.a.ranks(), r.system.b.ranks(), r.system.c.ranks()],
        params: r.param_count,
        hinf_error: r.hinf_error,
        seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Kronecker ranks of `A` for the CPD rows of [`truncation_sweep`]; `B`
/// and `C` use rank 2.
pub const SWEEP_CPD_RANKS: [usize; 3] = [49, 20, 10];
pub const SWEEP_FILL: f64 = 0.3;
pub const SWEEP_RADIUS: f64 = 0.9;

/// The seeded sparse SISO system with `3×3×3` states.
pub fn sweep_system(seed: u64) -> Result<MltiSystem> {
    let mut g = rng(seed);
    random_system(
        &mut g,
        &SystemSpec::new(&[3, 3, 3], &[1, 1, 1], &[1, 1, 1], Construction::Sparse(SWEEP_FILL)).stable(SWEEP_RADIUS),
    )
}

/// CPD rows for [`SWEEP_CPD_RANKS`], then TTD rows: exact, and with the
/// second TT rank of `A` lowered by 2 and by 3.
pub fn truncation_sweep(seed: u64) -> Result<ReductionTable> {
    let s = sweep_system(seed)?;
    let mut rows = Vec::new();
    let opts = CpOptions {
        seed,
        ..CpOptions::default()
    };
    for r in SWEEP_CPD_RANKS {
        rows.push(compress_row(&s, "cpd", &CompressFormat::Cpd { ranks: [r, 2, 2], opts: opts.clone() })?);
    }
    let e = Truncation::exact();
    let exact = compress_row(&s, "ttd", &CompressFormat::Ttd { a: e.clone(), b: e.clone(), c: e.clone() })?;
    let ra = exact.ranks[0].clone();
    rows.push(exact);
    let mut last = ra[1];
    for drop in [2, 3] {
        let r2 = ra[1].saturating_sub(drop).max(1);
        if r2 >= last {
            continue;
        }
        last = r2;
        let a = Truncation::MaxRanks(vec![ra[0], r2]);
        rows.push(compress_row(&s, "ttd", &CompressFormat::Ttd { a, b: e.clone(), c: e.clone() })?);
    }
    Ok(ReductionTable {
        full_params: s.param_count(),
        rows,
    })
}

/// Kept states for the balanced-truncation rows of [`memory_comparison`].
pub const MEMORY_KEEPS: [usize; 4] = [200, 100, 40, 12];
pub const MEMORY_RADIUS: f64 = 0.9;

/// The seeded system with `6×6×6` states, inputs and outputs whose tensors
/// have TT ranks `(6, 6)`.
pub fn memory_system(seed: u64) -> Result<MltiSystem> {
    let mut g = rng(seed);
    let d = [6, 6, 6];
    random_system(&mut g, &SystemSpec::new(&d, &d, &d, Construction::PlantedTt(vec![6, 6])).stable(MEMORY_RADIUS))
}

/// Exact generalized TTD, then balanced truncation keeping each of `keeps`
/// states.
pub fn memory_comparison(seed: u64, keeps: &[usize]) -> Result<ReductionTable> {
    let s = memory_system(seed)?;
    let e = Truncation::exact();
    let mut rows = vec![compress_row(&s, "ttd", &CompressFormat::Ttd { a: e.clone(), b: e.clone(), c: e })?];
    for &k in keeps {
        let t0 = Instant::now();
        let b = balanced_truncation_baseline(&s, k)?;
        rows.push(ReductionRow {
            method: "balanced",
            ranks: vec![vec![b.reduced.states()]],
            params: b.param_count,
            hinf_error: b.hinf_error,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(ReductionTable {
        full_params: s.param_count(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_passes() {
        let w = worked_example().unwrap();
        assert!(w.pass(), "{w:?}");
    }

    #[test]
    fn sigma_rows_agree() {
        for n in [2, 4, 6] {
            let r = sigma_max_comparison(7, n).unwrap();
            assert!(r.rel_error <= 1e-10, "{r:?}");
            assert!(r.sigma_svd <= SIGMA_SCALE + 1e-12);
        }
    }
}
