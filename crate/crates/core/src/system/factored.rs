//! MLTI systems whose tensors are held as generalized CPD or TTD factors.

use nalgebra::DMatrix;

use super::{hinf_relative_error, LinearModel, Lti, MltiSystem, DEFAULT_GRID};
use crate::decomp::{
    gen_cpd_to_full, gen_ttd_to_full, generalized_cpd, generalized_cpd_search, generalized_ttd, CpOptions,
    GenCpFactors, GenTtCores, Truncation,
};
use crate::einstein::{EvenPairedTensor, PairedShape};
use crate::error::{Error, Result};
use crate::linalg::kron;
use crate::tensor::{n_mode_product, tucker_product, DenseTensor};

/// Above this many terms the slice-product expansion of `A^k` gives way to
/// repeated factored steps.
const EXPANSION_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Factored {
    Cp(GenCpFactors),
    Tt(GenTtCores),
}

impl Factored {
    pub fn pshape(&self) -> &PairedShape {
        match self {
            Factored::Cp(f) => f.pshape(),
            Factored::Tt(t) => t.pshape(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Factored::Cp(f) => f.param_count(),
            Factored::Tt(t) => t.param_count(),
        }
    }

    /// `[R]` for a CPD, the internal TT ranks `(R1..R_{N−1})` for a TTD.
    pub fn ranks(&self) -> Vec<usize> {
        match self {
            Factored::Cp(f) => vec![f.rank()],
            Factored::Tt(t) => {
                let r = t.ranks();
                r[1..r.len() - 1].to_vec()
            }
        }
    }

    pub fn to_full(&self) -> EvenPairedTensor {
        match self {
            Factored::Cp(f) => gen_cpd_to_full(f),
            Factored::Tt(t) => gen_ttd_to_full(t),
        }
    }

    /// `A*X` as a sum of Tucker products, without the full tensor.
    pub fn apply(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.dims() != self.pshape().cols() {
            return Err(Error::domain(format!(
                "tensor of shape {:?} against column shape {:?}",
                x.dims(),
                self.pshape().cols()
            )));
        }
        match self {
            Factored::Cp(f) => {
                let mut acc: Option<DenseTensor> = None;
                for term in f.terms() {
                    let y = tucker_product(x, term)?;
                    acc = Some(match acc {
                        Some(a) => a.add(&y)?,
                        None => y,
                    });
                }
                acc.ok_or_else(|| Error::domain("empty CPD"))
            }
            Factored::Tt(t) => {
                // level[r] carries the partial contraction ending in rank index r
                let mut level = vec![x.clone()];
                for (n, core) in t.cores().iter().enumerate() {
                    let r1 = core.dims()[3];
                    let mut next: Vec<Option<DenseTensor>> = vec![None; r1];
                    for (a, w) in level.iter().enumerate() {
                        for (b, slot) in next.iter_mut().enumerate() {
                            let y = n_mode_product(w, &t.slice(n, a, b), n)?;
                            *slot = Some(match slot.take() {
                                Some(acc) => acc.add(&y)?,
                                None => y,
                            });
                        }
                    }
                    level = next.into_iter().map(|v| v.expect("filled")).collect();
                }
                Ok(level.pop().expect("last rank is 1"))
            }
        }
    }

    /// `φ` of the represented tensor as `Σ A^(N) ⊗ ··· ⊗ A^(1)` over the
    /// factor terms.
    pub fn unfold(&self) -> DMatrix<f64> {
        match self {
            Factored::Cp(f) => {
                let p = f.pshape();
                let mut acc = DMatrix::zeros(p.row_count(), p.col_count());
                for term in f.terms() {
                    let mut k = DMatrix::from_element(1, 1, 1.0);
                    for m in term {
                        k = kron(m, &k);
                    }
                    acc += k;
                }
                acc
            }
            Factored::Tt(t) => {
                let mut level = vec![DMatrix::from_element(1, 1, 1.0)];
                for (n, core) in t.cores().iter().enumerate() {
                    let r1 = core.dims()[3];
                    let next: Vec<DMatrix<f64>> = (0..r1)
                        .map(|b| {
                            level
                                .iter()
                                .enumerate()
                                .map(|(a, m)| kron(&t.slice(n, a, b), m))
                                .reduce(|x, y| x + y)
                                .expect("rank at least 1")
                        })
                        .collect();
                    level = next;
                }
                level.pop().expect("last rank is 1")
            }
        }
    }
}

/// `A`, `B`, `C` each in CPD or TTD form.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredMltiSystem {
    pub a: Factored,
    pub b: Factored,
    pub c: Factored,
}

impl FactoredMltiSystem {
    pub fn new(a: Factored, b: Factored, c: Factored) -> Result<Self> {
        let (pa, pb, pc) = (a.pshape(), b.pshape(), c.pshape());
        if !pa.is_square() || pb.rows() != pa.rows() || pc.cols() != pa.rows() {
            return Err(Error::domain(format!(
                "factored shapes {:?}, {:?}, {:?} are not conformable",
                pa.pairs(),
                pb.pairs(),
                pc.pairs()
            )));
        }
        Ok(FactoredMltiSystem { a, b, c })
    }

    /// With CPD factors: `R1ΣJn² + R2ΣJnKn + R3ΣInJn`; with TTD factors the
    /// sum of core sizes.
    pub fn param_count(&self) -> usize {
        self.a.param_count() + self.b.param_count() + self.c.param_count()
    }

    pub fn to_full(&self) -> MltiSystem {
        MltiSystem::new(self.a.to_full(), self.b.to_full(), self.c.to_full()).expect("conformable")
    }
}

impl LinearModel for FactoredMltiSystem {
    fn lti(&self) -> Lti {
        Lti {
            a: self.a.unfold(),
            b: self.b.unfold(),
            c: self.c.unfold(),
        }
    }
}

/// `A^k * X_0`. For a CPD with `R^k` at most 10⁶ this sums the Tucker
/// products with slice products `A_{r1}^(n)···A_{rk}^(n)` over all rank
/// sequences; otherwise it applies the factored `A` `k` times.
pub fn factored_unforced(a: &Factored, x0: &DenseTensor, k: usize) -> Result<DenseTensor> {
    if let Factored::Cp(f) = a {
        let terms = (f.rank() as f64).powi(k as i32);
        if k > 0 && terms <= EXPANSION_LIMIT as f64 {
            if x0.dims() != f.pshape().cols() {
                return Err(Error::domain("initial state does not match the state shape"));
            }
            let mut acc = DenseTensor::zeros(x0.shape().clone());
            let ident: Vec<DMatrix<f64>> = f.pshape().rows().iter().map(|&j| DMatrix::identity(j, j)).collect();
            expand(f, x0, &ident, k, &mut acc)?;
            return Ok(acc);
        }
    }
    let mut x = x0.clone();
    for _ in 0..k {
        x = a.apply(&x)?;
    }
    Ok(x)
}

fn expand(f: &GenCpFactors, x0: &DenseTensor, prefix: &[DMatrix<f64>], left: usize, acc: &mut DenseTensor) -> Result<()> {
    if left == 0 {
        *acc = acc.add(&tucker_product(x0, prefix)?)?;
        return Ok(());
    }
    for term in f.terms() {
        let next: Vec<DMatrix<f64>> = prefix.iter().zip(term).map(|(p, m)| p * m).collect();
        expand(f, x0, &next, left - 1, acc)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum CompressFormat {
    /// Generalized CPD at Kronecker ranks `(R1, R2, R3)`.
    Cpd { ranks: [usize; 3], opts: CpOptions },
    /// Generalized CPD at the estimated Kronecker ranks (fit search up to
    /// `max_rank`).
    CpdSearch { max_rank: usize, opts: CpOptions },
    /// Generalized TTD with a truncation per tensor.
    Ttd { a: Truncation, b: Truncation, c: Truncation },
}

#[derive(Debug, Clone)]
pub struct CompressReport {
    pub system: FactoredMltiSystem,
    pub param_count: usize,
    pub full_param_count: usize,
    /// CP fits of `A`, `B`, `C` (1 for TTD).
    pub fits: [f64; 3],
    pub hinf_error: f64,
}

pub fn compress(s: &MltiSystem, format: &CompressFormat) -> Result<CompressReport> {
    let (a, b, c, fits) = match format {
        CompressFormat::Cpd { ranks, opts } => {
            let (fa, ea) = generalized_cpd(s.a(), ranks[0], opts)?;
            let (fb, eb) = generalized_cpd(s.b(), ranks[1], opts)?;
            let (fc, ec) = generalized_cpd(s.c(), ranks[2], opts)?;
            (Factored::Cp(fa), Factored::Cp(fb), Factored::Cp(fc), [ea, eb, ec])
        }
        CompressFormat::CpdSearch { max_rank, opts } => {
            let (fa, ea) = generalized_cpd_search(s.a(), *max_rank, opts)?;
            let (fb, eb) = generalized_cpd_search(s.b(), *max_rank, opts)?;
            let (fc, ec) = generalized_cpd_search(s.c(), *max_rank, opts)?;
            (Factored::Cp(fa), Factored::Cp(fb), Factored::Cp(fc), [ea, eb, ec])
        }
        CompressFormat::Ttd { a, b, c } => (
            Factored::Tt(generalized_ttd(s.a(), a)?),
            Factored::Tt(generalized_ttd(s.b(), b)?),
            Factored::Tt(generalized_ttd(s.c(), c)?),
            [1.0; 3],
        ),
    };
    let system = FactoredMltiSystem::new(a, b, c)?;
    let hinf_error = hinf_relative_error(s, &system, DEFAULT_GRID)?;
    Ok(CompressReport {
        param_count: system.param_count(),
        full_param_count: s.param_count(),
        system,
        fits,
        hinf_error,
    })
}
