//! Decompositions of even-order paired tensors into separable slices
//! (generalized CPD) and paired TT cores (generalized TTD).

use nalgebra::DMatrix;

use super::cp::{cp_als, cp_rank_search, CpOptions};
use super::tt::{tt_svd, tt_to_full, Truncation, TtCores};
use crate::einstein::{paired_outer, EvenPairedTensor, PairedShape};
use crate::error::{Error, Result};
use crate::tensor::{reshape, DenseTensor, Shape};

/// `A = Σ_r A_r^(1) ∘ ··· ∘ A_r^(N)` (interleaved outer product of slices
/// `A_r^(n) ∈ R^{Jn×In}`); `R` is the Kronecker rank of the expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct GenCpFactors {
    pshape: PairedShape,
    /// `slices[r][n]`.
    slices: Vec<Vec<DMatrix<f64>>>,
}

impl GenCpFactors {
    pub fn new(pshape: PairedShape, slices: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::domain("Kronecker rank must be at least 1"));
        }
        for term in &slices {
            if term.len() != pshape.order() {
                return Err(Error::domain("slice count does not match the tensor order"));
            }
            for (m, (j, i)) in term.iter().zip(pshape.pairs()) {
                if m.shape() != (j, i) {
                    return Err(Error::domain(format!(
                        "slice of shape {:?} where ({j}, {i}) expected",
                        m.shape()
                    )));
                }
            }
        }
        Ok(GenCpFactors { pshape, slices })
    }

    pub fn pshape(&self) -> &PairedShape {
        &self.pshape
    }

    pub fn rank(&self) -> usize {
        self.slices.len()
    }

    pub fn order(&self) -> usize {
        self.pshape.order()
    }

    /// Slice `A_r^(n)`, both 0-based.
    pub fn slice(&self, r: usize, n: usize) -> &DMatrix<f64> {
        &self.slices[r][n]
    }

    pub fn terms(&self) -> &[Vec<DMatrix<f64>>] {
        &self.slices
    }

    /// The component tensor `A^(n) ∈ R^{R×Jn×In}` (0-based `n`).
    pub fn component(&self, n: usize) -> DenseTensor {
        let (j, i) = self.pshape.pairs()[n];
        let r = self.rank();
        DenseTensor::from_fn(Shape::new(vec![r, j, i]).expect("positive"), |idx| {
            self.slices[idx[0]][n][(idx[1], idx[2])]
        })
    }

    pub fn param_count(&self) -> usize {
        self.rank() * self.pshape.pairs().iter().map(|(j, i)| j * i).sum::<usize>()
    }
}

/// Paired TT cores `A^(n) ∈ R^{R_{n−1}×Jn×In×Rn}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenTtCores {
    pshape: PairedShape,
    cores: Vec<DenseTensor>,
}

impl GenTtCores {
    pub fn new(pshape: PairedShape, cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.len() != pshape.order() {
            return Err(Error::domain("core count does not match the tensor order"));
        }
        let mut prev = 1;
        for (c, (j, i)) in cores.iter().zip(pshape.pairs()) {
            let d = c.dims();
            if d.len() != 4 || d[0] != prev || d[1] != j || d[2] != i {
                return Err(Error::domain(format!("core of shape {d:?} breaks the rank chain")));
            }
            prev = d[3];
        }
        if prev != 1 {
            return Err(Error::domain("last TT rank must be 1"));
        }
        Ok(GenTtCores { pshape, cores })
    }

    pub fn pshape(&self) -> &PairedShape {
        &self.pshape
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.dims()[3]));
        r
    }

    pub fn param_count(&self) -> usize {
        self.cores.iter().map(|c| c.numel()).sum()
    }

    /// Slice `A^(n)[α, :, :, β]` as a `Jn × In` matrix (all 0-based).
    pub fn slice(&self, n: usize, alpha: usize, beta: usize) -> DMatrix<f64> {
        let d = self.cores[n].dims();
        DMatrix::from_fn(d[1], d[2], |j, i| self.cores[n].get(&[alpha, j, i, beta]))
    }

    /// The ordinary TT view over merged modes `(J1·I1, ..., JN·IN)`.
    pub fn as_tt(&self) -> TtCores {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let d = c.dims();
                reshape(c, Shape::new(vec![d[0], d[1] * d[2], d[3]]).expect("positive")).expect("same size")
            })
            .collect();
        TtCores::new(cores).expect("rank chain checked")
    }

    fn from_tt(pshape: &PairedShape, t: &TtCores) -> Self {
        let cores = t
            .cores()
            .iter()
            .zip(pshape.pairs())
            .map(|(c, (j, i))| {
                let d = c.dims();
                reshape(c, Shape::new(vec![d[0], j, i, d[2]]).expect("positive")).expect("same size")
            })
            .collect();
        GenTtCores {
            pshape: pshape.clone(),
            cores,
        }
    }
}

/// The pure relabeling `(J1,I1,...,JN,IN) → (J1·I1, ..., JN·IN)`.
fn merged(a: &EvenPairedTensor) -> DenseTensor {
    let dims: Vec<usize> = a.pshape().pairs().iter().map(|(j, i)| j * i).collect();
    reshape(a.as_dense(), Shape::new(dims).expect("positive")).expect("same size")
}

fn unmerged(pshape: &PairedShape, x: DenseTensor) -> EvenPairedTensor {
    let data = reshape(&x, Shape::new(pshape.interleaved()).expect("positive")).expect("same size");
    EvenPairedTensor::new(pshape.clone(), data).expect("shape matches")
}

fn fold_cp(pshape: &PairedShape, f: &super::cp::CpFactors) -> GenCpFactors {
    let n = pshape.order();
    let pairs = pshape.pairs();
    let slices = (0..f.rank())
        .map(|r| {
            let s = f.weights[r].abs().powf(1.0 / n as f64);
            let sign = if f.weights[r] < 0.0 { -1.0 } else { 1.0 };
            (0..n)
                .map(|k| {
                    let (j, i) = pairs[k];
                    let col = f.factors[k].column(r);
                    let m = DMatrix::from_column_slice(j, i, col.as_slice()) * s;
                    if k == 0 {
                        m * sign
                    } else {
                        m
                    }
                })
                .collect()
        })
        .collect();
    GenCpFactors {
        pshape: pshape.clone(),
        slices,
    }
}

/// Generalized CPD: CP-ALS on the merged-mode tensor, each factor column
/// folded to a `Jn × In` slice and scaled by `λ_r^{1/N}`.
pub fn generalized_cpd(a: &EvenPairedTensor, rank: usize, opts: &CpOptions) -> Result<(GenCpFactors, f64)> {
    let f = cp_als(&merged(a), rank, opts)?;
    Ok((fold_cp(a.pshape(), &f), f.fit))
}

/// Generalized CPD at the estimated Kronecker rank (see
/// [`cp_rank_search`](super::cp_rank_search)).
pub fn generalized_cpd_search(a: &EvenPairedTensor, max_rank: usize, opts: &CpOptions) -> Result<(GenCpFactors, f64)> {
    let (_, f) = cp_rank_search(&merged(a), max_rank, opts)?;
    Ok((fold_cp(a.pshape(), &f), f.fit))
}

pub fn generalized_ttd(a: &EvenPairedTensor, trunc: &Truncation) -> Result<GenTtCores> {
    let t = tt_svd(&merged(a), trunc)?;
    Ok(GenTtCores::from_tt(a.pshape(), &t))
}

pub fn gen_cpd_to_full(f: &GenCpFactors) -> EvenPairedTensor {
    let mut acc = EvenPairedTensor::zeros(f.pshape.clone());
    for term in &f.slices {
        let t = paired_outer(term).expect("nonempty");
        acc = acc.add(&t).expect("same shape");
    }
    acc
}

pub fn gen_ttd_to_full(t: &GenTtCores) -> EvenPairedTensor {
    unmerged(&t.pshape, tt_to_full(&t.as_tt()))
}

/// Einstein product in CPD form: slices `E_t^(n) = A_r^(n) B_s^(n)` with
/// `t = r + R·s`, Kronecker rank `R·S` (no reduction).
pub fn einstein_compose_cpd(a: &GenCpFactors, b: &GenCpFactors) -> Result<GenCpFactors> {
    if a.pshape.cols() != b.pshape.rows() {
        return Err(Error::domain("column shape of the left factor does not match the right row shape"));
    }
    let pshape = PairedShape::from_row_col(a.pshape.rows(), b.pshape.cols())?;
    let mut slices = Vec::with_capacity(a.rank() * b.rank());
    for s in 0..b.rank() {
        for r in 0..a.rank() {
            slices.push((0..a.order()).map(|n| &a.slices[r][n] * &b.slices[s][n]).collect());
        }
    }
    Ok(GenCpFactors { pshape, slices })
}

/// Einstein product in TT form: corewise contraction over the shared index,
/// ranks multiply (`α + Ra·β` indexing).
pub fn einstein_compose_ttd(a: &GenTtCores, b: &GenTtCores) -> Result<GenTtCores> {
    if a.pshape.cols() != b.pshape.rows() {
        return Err(Error::domain("column shape of the left factor does not match the right row shape"));
    }
    let pshape = PairedShape::from_row_col(a.pshape.rows(), b.pshape.cols())?;
    let mut cores = Vec::with_capacity(a.cores.len());
    for (ca, cb) in a.cores.iter().zip(&b.cores) {
        let (da, db) = (ca.dims(), cb.dims());
        let (ra0, j, k, ra1) = (da[0], da[1], da[2], da[3]);
        let (rb0, i, rb1) = (db[0], db[2], db[3]);
        let shape = Shape::new(vec![ra0 * rb0, j, i, ra1 * rb1])?;
        let out = DenseTensor::from_fn(shape, |idx| {
            let (a0, b0) = (idx[0] % ra0, idx[0] / ra0);
            let (a1, b1) = (idx[3] % ra1, idx[3] / ra1);
            (0..k).map(|kk| ca.get(&[a0, idx[1], kk, a1]) * cb.get(&[b0, kk, idx[2], b1])).sum()
        });
        cores.push(out);
    }
    GenTtCores::new(pshape, cores)
}
