use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::random;
use crate::tensor::{n_mode_matricize, DenseTensor, Shape};

/// `X ≈ Σ_r λ_r a_r^(1) ∘ ··· ∘ a_r^(N)` with unit-norm columns and
/// descending weights.
#[derive(Debug, Clone)]
pub struct CpFactors {
    pub weights: Vec<f64>,
    pub factors: Vec<DMatrix<f64>>,
    /// `1 − ‖X − X̂‖ / ‖X‖` against the decomposed tensor.
    pub fit: f64,
}

impl CpFactors {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpOptions {
    pub max_iter: usize,
    pub fit_tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for CpOptions {
    fn default() -> Self {
        CpOptions {
            max_iter: 500,
            fit_tol: 1e-8,
            restarts: 3,
            seed: 0,
        }
    }
}

/// Columnwise Kronecker product; column `r` is `a_r ⊗ b_r`.
pub fn khatri_rao(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::domain(format!(
            "Khatri-Rao of {} and {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let (ra, rb) = (a.nrows(), b.nrows());
    Ok(DMatrix::from_fn(ra * rb, a.ncols(), |row, c| a[(row / rb, c)] * b[(row % rb, c)]))
}

/// Khatri-Rao of all factors except `skip`, highest mode first, matching the
/// column order of the n-mode matricization.
fn kr_except(factors: &[DMatrix<f64>], skip: usize) -> DMatrix<f64> {
    let r = factors[0].ncols();
    let mut acc = DMatrix::from_element(1, r, 1.0);
    for (n, f) in factors.iter().enumerate().rev() {
        if n != skip {
            acc = khatri_rao(&acc, f).expect("equal column counts");
        }
    }
    acc
}

pub fn cp_to_full(f: &CpFactors) -> DenseTensor {
    let dims = f.dims();
    let scaled = &f.factors[0] * DMatrix::from_diagonal(&DVector::from_column_slice(&f.weights));
    let full = if f.factors.len() == 1 {
        scaled.column_sum()
    } else {
        let rest = kr_except(&f.factors, 0);
        let m = scaled * rest.transpose();
        DVector::from_column_slice(m.as_slice())
    };
    DenseTensor::from_raw(Shape::new(dims).expect("factor rows are positive"), full.as_slice().to_vec())
}

fn fit_of(x: &DenseTensor, f: &CpFactors) -> f64 {
    let nx = x.frobenius_norm();
    if nx == 0.0 {
        return 1.0;
    }
    let r = cp_to_full(f).sub(x).expect("same shape").frobenius_norm();
    1.0 - r / nx
}

fn normalize(factors: &mut [DMatrix<f64>], weights: &mut [f64]) {
    for f in factors.iter_mut() {
        for (r, mut col) in f.column_iter_mut().enumerate() {
            let nrm = col.norm();
            if nrm > 0.0 {
                col /= nrm;
                weights[r] *= nrm;
            }
        }
    }
}

fn sort_by_weight(f: &mut CpFactors) {
    let mut order: Vec<usize> = (0..f.rank()).collect();
    order.sort_by(|&a, &b| f.weights[b].total_cmp(&f.weights[a]));
    f.weights = order.iter().map(|&k| f.weights[k]).collect();
    for m in f.factors.iter_mut() {
        let cols: Vec<DVector<f64>> = order.iter().map(|&k| m.column(k).into_owned()).collect();
        *m = DMatrix::from_columns(&cols);
    }
}

fn als_run(x: &DenseTensor, rank: usize, opts: &CpOptions, seed: u64, unfoldings: &[DMatrix<f64>]) -> CpFactors {
    let mut g = random::rng(seed);
    let mut factors: Vec<DMatrix<f64>> = x.dims().iter().map(|&d| random::randn_matrix(&mut g, d, rank)).collect();
    let mut weights = vec![1.0; rank];
    normalize(&mut factors, &mut weights);
    let mut prev_fit = f64::NEG_INFINITY;
    let mut current = CpFactors { weights: weights.clone(), factors: factors.clone(), fit: 0.0 };
    for _ in 0..opts.max_iter {
        for n in 0..factors.len() {
            let mut v = DMatrix::from_element(rank, rank, 1.0);
            for (m, f) in factors.iter().enumerate() {
                if m != n {
                    v.component_mul_assign(&(f.transpose() * f));
                }
            }
            let mttkrp = &unfoldings[n] * kr_except(&factors, n);
            let vmax = v.amax();
            let pinv = v
                .pseudo_inverse(1e-14 * vmax.max(f64::MIN_POSITIVE))
                .unwrap_or_else(|_| DMatrix::zeros(rank, rank));
            factors[n] = mttkrp * pinv;
            weights.iter_mut().for_each(|w| *w = 1.0);
            normalize(&mut factors[n..=n], &mut weights);
        }
        current = CpFactors { weights: weights.clone(), factors: factors.clone(), fit: 0.0 };
        current.fit = fit_of(x, &current);
        if current.fit >= 1.0 - 1e-14 || (current.fit - prev_fit).abs() < opts.fit_tol * 1e-2 {
            break;
        }
        prev_fit = current.fit;
    }
    current
}

/// CP decomposition by alternating least squares, best fit over
/// `opts.restarts` seeded unit-normal initializations (restart `k` uses seed
/// `opts.seed + k`; ties keep the lower restart).
pub fn cp_als(x: &DenseTensor, rank: usize, opts: &CpOptions) -> Result<CpFactors> {
    if rank == 0 {
        return Err(Error::domain("CP rank must be at least 1"));
    }
    let mut dims = x.dims().to_vec();
    dims.sort_unstable_by(|a, b| b.cmp(a));
    let cap = dims.iter().take(2).product::<usize>();
    if x.order() >= 2 && rank > cap {
        log::warn!("CP rank {rank} exceeds the product {cap} of the two largest extents");
    }
    let unfoldings: Vec<DMatrix<f64>> = (0..x.order())
        .map(|n| n_mode_matricize(x, n))
        .collect::<Result<_>>()?;
    let mut best: Option<CpFactors> = None;
    for k in 0..opts.restarts.max(1) {
        let run = als_run(x, rank, opts, opts.seed.wrapping_add(k as u64), &unfoldings);
        if best.as_ref().is_none_or(|b| run.fit > b.fit) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    sort_by_weight(&mut best);
    Ok(best)
}

/// Smallest rank whose CP-ALS fit reaches `1 − 1e-8`: doubling from 1, then
/// bisection. Not a certified CP rank. Returns the last attempt at
/// `max_rank` when no rank up to it reaches the target.
pub fn cp_rank_search(x: &DenseTensor, max_rank: usize, opts: &CpOptions) -> Result<(usize, CpFactors)> {
    const TARGET: f64 = 1.0 - 1e-8;
    let max_rank = max_rank.max(1);
    let mut lo = 0usize; // largest rank known to miss
    let mut r = 1usize;
    let found = loop {
        let f = cp_als(x, r, opts)?;
        if f.fit >= TARGET {
            break (r, f);
        }
        lo = r;
        if r == max_rank {
            return Ok((r, f));
        }
        r = (r * 2).min(max_rank);
    };
    let (mut hi, mut best) = found;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let f = cp_als(x, mid, opts)?;
        if f.fit >= TARGET {
            hi = mid;
            best = f;
        } else {
            lo = mid;
        }
    }
    Ok((hi, best))
}
