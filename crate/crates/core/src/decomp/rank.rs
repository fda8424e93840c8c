use nalgebra::DMatrix;

use super::cp::CpFactors;
use super::generalized::GenCpFactors;
use super::tt::{tt_svd, Truncation, TtCores};
use crate::einstein::EvenPairedTensor;
use crate::error::{Error, Result};
use crate::linalg::{self, DEFAULT_RANK_TOL};
use crate::tensor::{s_transpose, Permutation};

/// TTD of `Ã`, the 𝕊-transpose of `A` with all row modes ahead of the column
/// modes. Built by transposing the full tensor and running TT-SVD. The
/// `N`-th internal rank of the result equals `rank_U(A)` in exact mode.
pub fn ttd_permuted(a: &EvenPairedTensor, trunc: &Truncation) -> Result<TtCores> {
    let n = a.order();
    let image: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();
    let t = s_transpose(a.as_dense(), &Permutation::new(image)?)?;
    tt_svd(&t, trunc)
}

/// `rank_U(A)` read off the permuted TTD (`R̃N`); zero for the zero tensor.
pub fn unfolding_rank_via_ttd(a: &EvenPairedTensor) -> usize {
    if a.frobenius_norm() == 0.0 {
        return 0;
    }
    let t = ttd_permuted(a, &Truncation::exact()).expect("valid paired tensor");
    t.ranks()[a.order()]
}

const MAX_K_RANK_COLS: usize = 20;

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Largest `k` such that every `k` columns are linearly independent (each
/// subset tested by numerical rank with relative `tol`). Exhaustive, so
/// limited to 20 columns.
pub fn k_rank(a: &DMatrix<f64>, tol: f64) -> Result<usize> {
    let n = a.ncols();
    if n > MAX_K_RANK_COLS {
        return Err(Error::Capability(format!(
            "k-rank enumeration limited to {MAX_K_RANK_COLS} columns, got {n}"
        )));
    }
    let scale = a.column_iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if scale == 0.0 {
        return Ok(0);
    }
    let upper = linalg::matrix_rank(a, tol);
    let mut best = 0;
    for k in 1..=upper {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let sub = a.select_columns(comb.iter());
            let s = linalg::singular_values(&sub);
            // judge against the largest column of the whole matrix so a tiny
            // column cannot count as independent
            let cut = tol * scale * sub.nrows().max(sub.ncols()) as f64;
            if s.iter().filter(|&&v| v > cut).count() < k {
                return Ok(best);
            }
            if !next_combination(&mut comb, n) {
                break;
            }
        }
        best = k;
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Certificate {
    /// The k-rank inequalities hold, so `rank_U = R`.
    Certified(usize),
    Inconclusive,
}

/// k-rank certificate on an order-2N CPD of a paired tensor: if the odd- and
/// even-position k-rank sums both reach `R + N − 1`, the unfolding rank is
/// `R`.
pub fn cpd_rank_certificate_order2n(f: &CpFactors) -> Result<Certificate> {
    if !f.factors.len().is_multiple_of(2) || f.factors.is_empty() {
        return Err(Error::domain("certificate needs an even-order CPD"));
    }
    let n = f.factors.len() / 2;
    let r = f.rank();
    let mut odd = 0;
    let mut even = 0;
    for (k, m) in f.factors.iter().enumerate() {
        let kr = k_rank(m, DEFAULT_RANK_TOL)?;
        if kr == 0 {
            return Ok(Certificate::Inconclusive);
        }
        if k % 2 == 0 {
            odd += kr;
        } else {
            even += kr;
        }
    }
    if odd >= r + n - 1 && even >= r + n - 1 {
        Ok(Certificate::Certified(r))
    } else {
        Ok(Certificate::Inconclusive)
    }
}

/// Certificate for a generalized CPD: each slice is split by its SVD into
/// rank-one terms, giving an order-2N CPD with `Σ_r Π_n rank(A_r^(n))`
/// terms, which is then checked by [`cpd_rank_certificate_order2n`].
pub fn cpd_rank_certificate(f: &GenCpFactors) -> Result<Certificate> {
    let n = f.order();
    let mut cols: Vec<Vec<nalgebra::DVector<f64>>> = vec![Vec::new(); 2 * n];
    let mut weights = Vec::new();
    for term in f.terms() {
        let parts: Vec<Vec<(f64, nalgebra::DVector<f64>, nalgebra::DVector<f64>)>> = term
            .iter()
            .map(|m| {
                let d = linalg::svd(m);
                let k = d.rank(DEFAULT_RANK_TOL);
                (0..k)
                    .map(|q| (d.s[q], d.u.column(q).into_owned(), d.vt.row(q).transpose()))
                    .collect()
            })
            .collect();
        if parts.iter().any(|p| p.is_empty()) {
            continue;
        }
        let counts: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        let mut idx = vec![0usize; n];
        loop {
            let mut w = 1.0;
            for (k, &q) in idx.iter().enumerate() {
                let (s, u, v) = &parts[k][q];
                w *= s;
                cols[2 * k].push(u.clone());
                cols[2 * k + 1].push(v.clone());
            }
            weights.push(w);
            if !crate::tensor::increment(&mut idx, &counts) {
                break;
            }
        }
    }
    if weights.is_empty() {
        return Ok(Certificate::Inconclusive);
    }
    let factors = cols.iter().map(|c| DMatrix::from_columns(c)).collect();
    cpd_rank_certificate_order2n(&CpFactors { weights, factors, fit: 1.0 })
}
