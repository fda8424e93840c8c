//! Reachability and observability tensors and the rank-based decisions on
//! them.

use std::fmt;

use nalgebra::DMatrix;

use super::{lyapunov_solve, GramianKind, MltiSystem};
use crate::block::{mode_col_block, mode_row_block, BlockFactorization};
use crate::decomp::{cp_als, cpd_rank_certificate_order2n, hosvd, multilinear_ranks, unfolding_rank_via_ttd, Certificate, CpOptions};
use crate::einstein::{einstein_compose, is_u_positive_definite, phi, unfolding_rank, EvenPairedTensor};
use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_TOL};

/// Relative threshold for U-positive definiteness of infinite-horizon
/// Gramians.
const GRAMIAN_PD_TOL: f64 = 1e-12;
/// CP fit needed before the k-rank certificate is consulted.
const CERT_FIT: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    /// Numerical rank of the unfolding.
    RankU,
    /// U-positive definiteness of the infinite-horizon Gramian.
    Gramian,
    /// N-th TT rank of the row-first permuted tensor.
    Ttd,
    /// k-rank certificate on a CPD of rank `Π_J`.
    CpdCert,
    /// Multilinear ranks of the state modes (can only refute).
    MlrankNeg,
    /// Zero HOSVD singular values on the state modes (can only refute).
    HosvdNeg,
}

impl RankMethod {
    pub const ALL: [RankMethod; 6] = [
        RankMethod::RankU,
        RankMethod::Gramian,
        RankMethod::Ttd,
        RankMethod::CpdCert,
        RankMethod::MlrankNeg,
        RankMethod::HosvdNeg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankMethod::RankU => "rank_u",
            RankMethod::Gramian => "gramian",
            RankMethod::Ttd => "ttd",
            RankMethod::CpdCert => "cpd_cert",
            RankMethod::MlrankNeg => "mlrank_neg",
            RankMethod::HosvdNeg => "hosvd_neg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        RankMethod::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for RankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Yes,
    No,
    Inconclusive,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
            Answer::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankVerdict {
    pub answer: Answer,
    pub method: RankMethod,
    /// The rank the method measured, when it measures one.
    pub rank: Option<usize>,
    /// `Π_J`.
    pub target: usize,
    /// Method-specific number: smallest state-mode singular value for
    /// `hosvd_neg`, smallest Gramian eigenvalue over the largest for
    /// `gramian`, CP fit for `cpd_cert`.
    pub witness: Option<f64>,
}

fn yes_if(b: bool) -> Answer {
    if b {
        Answer::Yes
    } else {
        Answer::No
    }
}

fn blocks_with_saturation(
    first: EvenPairedTensor,
    step: impl Fn(&EvenPairedTensor) -> Result<EvenPairedTensor>,
    count: usize,
    target: usize,
    saturate: bool,
    rows: bool,
) -> Result<Vec<EvenPairedTensor>> {
    let mut blocks = Vec::with_capacity(count);
    let zero = EvenPairedTensor::zeros(first.pshape().clone());
    let mut krylov: Option<DMatrix<f64>> = None;
    let mut rank = 0;
    let mut cur = first;
    for k in 0..count {
        if saturate {
            let m = phi(&cur);
            let m = if rows { m } else { m.transpose() };
            let next = match &krylov {
                Some(prev) => {
                    let mut joined = DMatrix::zeros(prev.nrows(), prev.ncols() + m.ncols());
                    joined.columns_mut(0, prev.ncols()).copy_from(prev);
                    joined.columns_mut(prev.ncols(), m.ncols()).copy_from(&m);
                    joined
                }
                None => m,
            };
            let r = linalg::matrix_rank(&next, DEFAULT_RANK_TOL);
            // once a block adds nothing, no later block can (Krylov
            // stagnation), so the rest are zero-filled
            if (k > 0 && r == rank) || rank == target {
                blocks.extend(std::iter::repeat_n(zero.clone(), count - k));
                return Ok(blocks);
            }
            rank = r;
            krylov = Some(next);
        }
        let next = if k + 1 < count { Some(step(&cur)?) } else { None };
        blocks.push(cur);
        match next {
            Some(n) => cur = n,
            None => break,
        }
    }
    Ok(blocks)
}

/// [`reachability_tensor`] with an optional early exit: with `saturate`,
/// blocks after the Krylov rank stops growing are left zero. The unfolding
/// rank is unchanged but the tensor differs from the full assembly.
pub fn reachability_tensor_opts(s: &MltiSystem, saturate: bool) -> Result<EvenPairedTensor> {
    let count = s.state_count();
    let blocks = blocks_with_saturation(s.b().clone(), |x| einstein_compose(s.a(), x), count, count, saturate, true)?;
    mode_row_block(&blocks, &BlockFactorization::new(s.state_dims().to_vec())?)
}

/// Generalized row block of `B, A*B, ..., A^{Π_J−1}*B` with block counts
/// `Kn = Jn`: paired shape `(Jn, Jn·Kn)`, block `k` at multi-index
/// `ivec⁻¹(k)` over `J`.
pub fn reachability_tensor(s: &MltiSystem) -> Result<EvenPairedTensor> {
    reachability_tensor_opts(s, false)
}

/// Generalized column block of `C, C*A, ..., C*A^{Π_J−1}` with block counts
/// `Jn`: paired shape `(In·Jn, Jn)`.
pub fn observability_tensor(s: &MltiSystem) -> Result<EvenPairedTensor> {
    let count = s.state_count();
    let blocks = blocks_with_saturation(s.c().clone(), |x| einstein_compose(x, s.a()), count, count, false, false)?;
    mode_col_block(&blocks, &BlockFactorization::new(s.state_dims().to_vec())?)
}

/// Which side of the rank tensor carries the state modes.
#[derive(Clone, Copy)]
enum Side {
    Rows,
    Cols,
}

fn decide(t: &EvenPairedTensor, state: &[usize], method: RankMethod, side: Side) -> Result<RankVerdict> {
    let target: usize = state.iter().product();
    let verdict = |answer, rank, witness| RankVerdict { answer, method, rank, target, witness };
    let offset = match side {
        Side::Rows => 0,
        Side::Cols => 1,
    };
    Ok(match method {
        RankMethod::RankU => {
            let r = unfolding_rank(t, DEFAULT_RANK_TOL);
            verdict(yes_if(r == target), Some(r), None)
        }
        RankMethod::Ttd => {
            let r = unfolding_rank_via_ttd(t);
            verdict(yes_if(r == target), Some(r), None)
        }
        RankMethod::MlrankNeg => {
            let ranks = multilinear_ranks(t.as_dense(), DEFAULT_RANK_TOL);
            let deficient = state.iter().enumerate().any(|(n, &j)| ranks[2 * n + offset] != j);
            let r = phi_rank_bound(&ranks, offset, state.len());
            verdict(if deficient { Answer::No } else { Answer::Inconclusive }, Some(r), None)
        }
        RankMethod::HosvdNeg => {
            let h = hosvd(t.as_dense());
            let scale = h.singular_values.iter().flatten().fold(0.0f64, |m, &v| m.max(v));
            let mut smallest = f64::INFINITY;
            for n in 0..state.len() {
                let sv = &h.singular_values[2 * n + offset];
                smallest = smallest.min(sv.iter().copied().fold(f64::INFINITY, f64::min));
            }
            let cut = DEFAULT_RANK_TOL * scale * t.as_dense().numel() as f64;
            let answer = if scale == 0.0 || smallest <= cut { Answer::No } else { Answer::Inconclusive };
            verdict(answer, None, Some(smallest))
        }
        RankMethod::CpdCert => cpd_certificate(t, state, side, target)?,
        RankMethod::Gramian => unreachable!("Gramian decisions are made on the system"),
    })
}

/// Product of the state-mode multilinear ranks, an upper bound on the
/// unfolding rank.
fn phi_rank_bound(ranks: &[usize], offset: usize, n: usize) -> usize {
    (0..n).map(|k| ranks[2 * k + offset]).product()
}

/// A CPD of rank `Π_J` that fits and passes the k-rank test certifies full
/// unfolding rank. The odd (or even) k-rank sum is at most `ΣJn`, so when
/// `ΣJn < Π_J + N − 1` the certificate cannot succeed and ALS is skipped.
fn cpd_certificate(t: &EvenPairedTensor, state: &[usize], side: Side, target: usize) -> Result<RankVerdict> {
    let method = RankMethod::CpdCert;
    if t.frobenius_norm() == 0.0 {
        return Ok(RankVerdict { answer: Answer::No, method, rank: Some(0), target, witness: None });
    }
    let n = state.len();
    let inconclusive = |witness| RankVerdict { answer: Answer::Inconclusive, method, rank: None, target, witness };
    let pairs = t.pshape().pairs();
    let other: usize = pairs
        .iter()
        .map(|&(j, i)| match side {
            Side::Rows => i,
            Side::Cols => j,
        })
        .sum();
    if state.iter().sum::<usize>() < target + n - 1 || other < target + n - 1 {
        return Ok(inconclusive(None));
    }
    let f = cp_als(t.as_dense(), target, &CpOptions::default())?;
    if f.fit < CERT_FIT {
        return Ok(inconclusive(Some(f.fit)));
    }
    match cpd_rank_certificate_order2n(&f) {
        Ok(Certificate::Certified(r)) if r == target => {
            Ok(RankVerdict { answer: Answer::Yes, method, rank: Some(r), target, witness: Some(f.fit) })
        }
        Ok(_) | Err(Error::Capability(_)) => Ok(inconclusive(Some(f.fit))),
        Err(e) => Err(e),
    }
}

fn gramian_decision(s: &MltiSystem, kind: GramianKind) -> Result<RankVerdict> {
    let w = lyapunov_solve(s, kind)?;
    let target = s.state_count();
    let m = phi(&w);
    let ev = linalg::symmetric_eigenvalues(&m);
    let max = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let ratio = if max == 0.0 { 0.0 } else { ev[0] / max };
    Ok(RankVerdict {
        answer: yes_if(is_u_positive_definite(&w, GRAMIAN_PD_TOL)?),
        method: RankMethod::Gramian,
        rank: None,
        target,
        witness: Some(ratio),
    })
}

/// Decides reachability of `(A, B)`. `Gramian` needs an asymptotically
/// stable `A` and fails with a precondition error otherwise.
pub fn is_reachable(s: &MltiSystem, method: RankMethod) -> Result<RankVerdict> {
    if method == RankMethod::Gramian {
        return gramian_decision(s, GramianKind::Reach);
    }
    decide(&reachability_tensor(s)?, s.state_dims(), method, Side::Rows)
}

/// Decides observability of `(A, C)`; the refuting methods look at the
/// even (column) modes of the observability tensor.
pub fn is_observable(s: &MltiSystem, method: RankMethod) -> Result<RankVerdict> {
    if method == RankMethod::Gramian {
        return gramian_decision(s, GramianKind::Obs);
    }
    decide(&observability_tensor(s)?, s.state_dims(), method, Side::Cols)
}
