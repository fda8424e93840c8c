//! Classical discrete-time balanced truncation of the unfolded system, the
//! dense baseline for tensor compression.

use nalgebra::{DMatrix, DVector};

use super::gramian::stein_solve;
use super::{hinf_relative_error, LinearModel, Lti, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct BalancedReduction {
    pub reduced: Lti,
    /// All Hankel singular values, descending.
    pub hankel: Vec<f64>,
    pub hinf_error: f64,
    /// `r² + r·m + p·r` of the reduced realization.
    pub param_count: usize,
}

/// Square-root factors `Lc`, `Lo` of the Gramians and the SVD of `Loᵀ·Lc`.
struct Balancing {
    lc: DMatrix<f64>,
    lo: DMatrix<f64>,
    svd: linalg::Svd,
}

impl Balancing {
    fn new(l: &Lti) -> Result<Self> {
        let wc = stein_solve(&l.a, &(&l.b * l.b.transpose()))?;
        let wo = stein_solve(&l.a.transpose(), &(l.c.transpose() * &l.c))?;
        let lc = linalg::psd_sqrt_factor(&wc);
        let lo = linalg::psd_sqrt_factor(&wo);
        let svd = linalg::svd(&(lo.transpose() * &lc));
        Ok(Balancing { lc, lo, svd })
    }

    /// `(T, T⁺)` onto the leading `keep` balanced states, capped at the
    /// numerically nonzero Hankel singular values.
    fn projection(&self, keep: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let h = &self.svd.s;
        let floor = h.first().copied().unwrap_or(0.0) * f64::EPSILON * self.lc.nrows() as f64;
        let r = keep.min(h.iter().filter(|&&v| v > floor).count());
        let inv_sqrt = DMatrix::from_diagonal(&DVector::from_iterator(r, h[..r].iter().map(|v| 1.0 / v.sqrt())));
        let t = &self.lc * self.svd.vt.rows(0, r).transpose() * &inv_sqrt;
        let ti = &inv_sqrt * self.svd.u.columns(0, r).transpose() * self.lo.transpose();
        (t, ti)
    }
}

/// Square-root balanced truncation keeping `keep` states. `keep ≥ n`
/// returns the original realization and `keep = 0` the zero system. States
/// whose Hankel singular value is numerically zero are never kept.
pub fn balanced_truncation_baseline(s: &impl LinearModel, keep: usize) -> Result<BalancedReduction> {
    let l = s.lti();
    let n = l.states();
    let rho = linalg::spectral_radius(&l.a)?;
    let tol = 1e-9 * (1.0 + l.a.norm());
    if rho >= 1.0 - tol {
        return Err(Error::Precondition(format!(
            "balanced truncation needs an asymptotically stable system (spectral radius {rho:.6})"
        )));
    }
    let b = Balancing::new(&l)?;
    let reduced = if keep >= n {
        l.clone()
    } else {
        let (t, ti) = b.projection(keep);
        Lti::new(&ti * &l.a * &t, &ti * &l.b, &l.c * &t)?
    };
    let hankel = b.svd.s;
    let hinf_error = hinf_relative_error(&l, &reduced, DEFAULT_GRID)?;
    Ok(BalancedReduction {
        param_count: reduced.param_count(),
        reduced,
        hankel,
        hinf_error,
    })
}
