use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::tensor::{DenseTensor, Shape};

/// Tensor-train cores `X^(n) ∈ R^{R_{n−1} × Jn × Rn}` with `R0 = RN = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TtCores {
    cores: Vec<DenseTensor>,
}

/// How `tt_svd` chooses ranks.
#[derive(Debug, Clone, PartialEq)]
pub enum Truncation {
    /// Drop only numerically zero singular values (relative `tol`, scaled
    /// by the larger side of each sequential reshape).
    Exact { tol: f64 },
    /// `‖X − X̂‖ ≤ eps·‖X‖`, split evenly across the `N − 1` steps.
    Relative(f64),
    /// Cap each internal rank; numerically zero directions are still dropped.
    MaxRanks(Vec<usize>),
}

impl Truncation {
    pub fn exact() -> Self {
        Truncation::Exact { tol: DEFAULT_RANK_TOL }
    }
}

impl TtCores {
    pub fn new(cores: Vec<DenseTensor>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::domain("a tensor train needs at least one core"));
        }
        let mut prev = 1;
        for (n, c) in cores.iter().enumerate() {
            if c.order() != 3 || c.dims()[0] != prev {
                return Err(Error::domain(format!("core {} has shape {:?}", n + 1, c.dims())));
            }
            prev = c.dims()[2];
        }
        if prev != 1 {
            return Err(Error::domain("last TT rank must be 1"));
        }
        Ok(TtCores { cores })
    }

    pub fn cores(&self) -> &[DenseTensor] {
        &self.cores
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    /// `(R0, R1, ..., RN)`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.dims()[2]));
        r
    }

    pub fn dims(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dims()[1]).collect()
    }

    pub fn param_count(&self) -> usize {
        self.cores.iter().map(|c| c.numel()).sum()
    }

    /// Core `n` (0-based) as the `R_{n−1}·Jn × Rn` left unfolding.
    pub fn left_unfolding(&self, n: usize) -> DMatrix<f64> {
        let d = self.cores[n].dims();
        DMatrix::from_column_slice(d[0] * d[1], d[2], self.cores[n].data())
    }

    /// Core `n` (0-based) as the `R_{n−1} × Jn·Rn` right unfolding.
    pub fn right_unfolding(&self, n: usize) -> DMatrix<f64> {
        let d = self.cores[n].dims();
        DMatrix::from_column_slice(d[0], d[1] * d[2], self.cores[n].data())
    }
}

fn core_from(m: &DMatrix<f64>, r0: usize, j: usize, r1: usize) -> DenseTensor {
    DenseTensor::from_raw(Shape::new(vec![r0, j, r1]).expect("positive"), m.as_slice().to_vec())
}

pub fn tt_svd(x: &DenseTensor, trunc: &Truncation) -> Result<TtCores> {
    let dims = x.dims().to_vec();
    let n = dims.len();
    if n == 0 {
        return Err(Error::domain("TT-SVD of a scalar"));
    }
    if let Truncation::MaxRanks(caps) = trunc {
        if caps.len() + 1 != n {
            return Err(Error::domain(format!("{} rank caps for an order-{n} tensor", caps.len())));
        }
    }
    let total = x.frobenius_norm();
    let delta = match trunc {
        Truncation::Relative(eps) if n > 1 => eps * total / ((n - 1) as f64).sqrt(),
        _ => 0.0,
    };
    let mut cores = Vec::with_capacity(n);
    let mut rprev = 1;
    let mut c = x.data().to_vec();
    for k in 0..n - 1 {
        let rows = rprev * dims[k];
        let cols = c.len() / rows;
        let m = DMatrix::from_column_slice(rows, cols, &c);
        let dec = linalg::svd(&m);
        let left: usize = dims[..=k].iter().product();
        let right: usize = dims[k + 1..].iter().product();
        let zero_cut = match trunc {
            Truncation::Exact { tol } => linalg::numerical_rank(&dec.s, left, right, *tol),
            _ => linalg::numerical_rank(&dec.s, left, right, DEFAULT_RANK_TOL),
        };
        let mut r = match trunc {
            Truncation::Exact { .. } => zero_cut,
            Truncation::Relative(_) => {
                // smallest r with tail energy within delta
                let mut tail = 0.0;
                let mut r = dec.s.len();
                while r > 0 && tail + dec.s[r - 1].powi(2) <= delta * delta {
                    tail += dec.s[r - 1].powi(2);
                    r -= 1;
                }
                r.min(zero_cut)
            }
            Truncation::MaxRanks(caps) => zero_cut.min(caps[k]),
        };
        r = r.max(1);
        let t = dec.truncate(r);
        cores.push(core_from(&t.u, rprev, dims[k], r));
        let sv = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(t.s.clone())) * &t.vt;
        c = sv.as_slice().to_vec();
        rprev = r;
    }
    cores.push(DenseTensor::from_raw(Shape::new(vec![rprev, dims[n - 1], 1])?, c));
    TtCores::new(cores)
}

pub fn tt_to_full(t: &TtCores) -> DenseTensor {
    let mut acc = t.left_unfolding(0);
    for n in 1..t.order() {
        let d = t.cores[n].dims();
        let prod = &acc * t.right_unfolding(n);
        acc = DMatrix::from_column_slice(prod.nrows() * d[1], d[2], prod.as_slice());
    }
    DenseTensor::from_raw(Shape::new(t.dims()).expect("positive"), acc.as_slice().to_vec())
}

/// Makes cores `1..=upto` (1-based) left-orthonormal, pushing the
/// triangular factors rightwards; the represented tensor is unchanged.
pub fn tt_left_orthonormalize(t: &TtCores, upto: usize) -> Result<TtCores> {
    if upto >= t.order() {
        return Err(Error::domain(format!("cannot left-orthonormalize {upto} of {} cores", t.order())));
    }
    let mut cores = t.cores.clone();
    for n in 0..upto {
        let d = cores[n].dims().to_vec();
        let m = DMatrix::from_column_slice(d[0] * d[1], d[2], cores[n].data());
        let qr = m.qr();
        let (q, r) = (qr.q(), qr.r());
        let k = q.ncols();
        cores[n] = core_from(&q, d[0], d[1], k);
        let nd = cores[n + 1].dims().to_vec();
        let next = DMatrix::from_column_slice(nd[0], nd[1] * nd[2], cores[n + 1].data());
        cores[n + 1] = core_from(&(r * next), k, nd[1], nd[2]);
    }
    TtCores::new(cores)
}

/// Makes cores `downto..=N` (1-based) right-orthonormal, pushing factors
/// leftwards.
pub fn tt_right_orthonormalize(t: &TtCores, downto: usize) -> Result<TtCores> {
    if downto < 2 || downto > t.order() {
        return Err(Error::domain(format!("cannot right-orthonormalize from core {downto} of {}", t.order())));
    }
    let mut cores = t.cores.clone();
    for n in (downto - 1..t.order()).rev() {
        let d = cores[n].dims().to_vec();
        let m = DMatrix::from_column_slice(d[0], d[1] * d[2], cores[n].data());
        let qr = m.transpose().qr();
        let (q, r) = (qr.q(), qr.r());
        let k = q.ncols();
        cores[n] = core_from(&q.transpose(), k, d[1], d[2]);
        let pd = cores[n - 1].dims().to_vec();
        let prev = DMatrix::from_column_slice(pd[0] * pd[1], pd[2], cores[n - 1].data());
        cores[n - 1] = core_from(&(prev * r.transpose()), pd[0], pd[1], k);
    }
    TtCores::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{rand_tensor, rng};
    use crate::tensor::{outer, reshape};

    fn reshape_rank(x: &DenseTensor, k: usize) -> usize {
        let left: usize = x.dims()[..=k].iter().product();
        let m = reshape(x, Shape::new(vec![left, x.numel() / left]).unwrap()).unwrap().to_matrix().unwrap();
        linalg::matrix_rank(&m, DEFAULT_RANK_TOL)
    }

    #[test]
    fn rank_one_chain() {
        let mut g = rng(71);
        let x = outer(&outer(&rand_tensor(&mut g, &[2]), &rand_tensor(&mut g, &[3])), &rand_tensor(&mut g, &[4]));
        let t = tt_svd(&x, &Truncation::exact()).unwrap();
        assert_eq!(t.ranks(), vec![1, 1, 1, 1]);
        let lo = tt_left_orthonormalize(&t, 2).unwrap();
        for n in 0..2 {
            assert!((lo.cores()[n].frobenius_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn order_two_rank() {
        let mut g = rng(72);
        let a = crate::random::rand_matrix(&mut g, 4, 2) * crate::random::rand_matrix(&mut g, 2, 5);
        let t = tt_svd(&DenseTensor::from_matrix(&a), &Truncation::exact()).unwrap();
        assert_eq!(t.ranks(), vec![1, 2, 1]);
    }

    #[test]
    fn exact_mode_matches_reshape_ranks() {
        for seed in 0..20 {
            let mut g = rng(100 + seed);
            let x = rand_tensor(&mut g, &[2, 3, 4]);
            let t = tt_svd(&x, &Truncation::exact()).unwrap();
            let r = tt_to_full(&t);
            assert!(r.sub(&x).unwrap().frobenius_norm() <= 1e-12 * x.frobenius_norm());
            assert_eq!(t.ranks()[1], reshape_rank(&x, 0));
            assert_eq!(t.ranks()[2], reshape_rank(&x, 1));
        }
    }

    #[test]
    fn relative_truncation_bound() {
        let mut g = rng(73);
        let x = rand_tensor(&mut g, &[4, 4, 4, 4]);
        for eps in [0.5, 0.2, 0.05] {
            let t = tt_svd(&x, &Truncation::Relative(eps)).unwrap();
            let err = tt_to_full(&t).sub(&x).unwrap().frobenius_norm();
            assert!(err <= eps * x.frobenius_norm() * (1.0 + 1e-12));
        }
        let capped = tt_svd(&x, &Truncation::MaxRanks(vec![2, 3, 2])).unwrap();
        assert_eq!(capped.ranks(), vec![1, 2, 3, 2, 1]);
    }

    #[test]
    fn orthonormalization_preserves_tensor() {
        let mut g = rng(74);
        let cores = vec![rand_tensor(&mut g, &[1, 3, 2]), rand_tensor(&mut g, &[2, 4, 3]), rand_tensor(&mut g, &[3, 2, 1])];
        let t = TtCores::new(cores).unwrap();
        let full = tt_to_full(&t);
        let lo = tt_left_orthonormalize(&t, 2).unwrap();
        assert!(tt_to_full(&lo).sub(&full).unwrap().frobenius_norm() <= 1e-12 * full.frobenius_norm());
        for n in 0..2 {
            let u = lo.left_unfolding(n);
            let k = u.ncols();
            assert!((u.transpose() * &u - DMatrix::identity(k, k)).norm() <= 1e-12);
        }
        let ro = tt_right_orthonormalize(&t, 2).unwrap();
        assert!(tt_to_full(&ro).sub(&full).unwrap().frobenius_norm() <= 1e-12 * full.frobenius_norm());
        for n in 1..3 {
            let v = ro.right_unfolding(n);
            let k = v.nrows();
            assert!((&v * v.transpose() - DMatrix::identity(k, k)).norm() <= 1e-12);
        }
        // orthonormal input stays the same tensor
        let again = tt_left_orthonormalize(&lo, 2).unwrap();
        assert!(tt_to_full(&again).sub(&full).unwrap().frobenius_norm() <= 1e-12 * full.frobenius_norm());
        assert!(tt_left_orthonormalize(&t, 3).is_err());
        assert!(tt_right_orthonormalize(&t, 1).is_err());
    }
}
