//! Stability verdicts. `stability_eigen` and `stability_tucker` decide;
//! the other criteria are sufficient conditions and only ever report
//! asymptotic stability or "inconclusive".

use std::fmt;

use nalgebra::DMatrix;

use super::{boundary_tol, Factored};
use crate::decomp::{gen_ttd_to_full, tt_left_orthonormalize, tt_right_orthonormalize, ttd_permuted, CpFactors, GenTtCores, Truncation};
use crate::einstein::{phi, EvenPairedTensor};
use crate::error::Result;
use crate::linalg::{self, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AsymptoticallyStable,
    /// Lyapunov stable: spectrum on the closed unit disk, unit-modulus
    /// eigenvalues semisimple.
    Stable,
    /// On the stability boundary but the multiplicity check could not
    /// confirm semisimplicity (or a Lyapunov bound equals 1).
    StableMarginal,
    Unstable,
    Inconclusive,
    /// The criterion's structural precondition does not hold.
    InconclusivePrecondition,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::AsymptoticallyStable => "asymptotically_stable",
            Verdict::Stable => "stable",
            Verdict::StableMarginal => "stable_marginal",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
            Verdict::InconclusivePrecondition => "inconclusive_precondition",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Spectral radius of `φ(A)`.
    Eigen,
    /// `‖A‖²`, the sum of squared n-mode singular values.
    Hosvd,
    /// Leading CPD weight with orthonormal factors.
    Cpd,
    /// `σmax(φ(A))` from the N-th core of the orthonormalized TTD of `Ã`.
    Ttd,
    /// `Σ_r Π_n σmax(A_r^(n))` over generalized CPD slices.
    Factored,
    /// `Π_n ρ(An)` of a Tucker system.
    Tucker,
}

impl Criterion {
    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Eigen => "eigen",
            Criterion::Hosvd => "hosvd",
            Criterion::Cpd => "cpd",
            Criterion::Ttd => "ttd",
            Criterion::Factored => "factored",
            Criterion::Tucker => "tucker",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub criterion: Criterion,
    /// Max |λ|, `‖A‖²`, leading weight, σmax, bound or ρ product.
    pub witness: f64,
}

impl StabilityVerdict {
    fn new(verdict: Verdict, criterion: Criterion, witness: f64) -> Self {
        StabilityVerdict { verdict, criterion, witness }
    }

    pub fn is_asymptotically_stable(&self) -> bool {
        self.verdict == Verdict::AsymptoticallyStable
    }
}

/// A one-sided test: asymptotically stable below `1 − tol`.
fn one_sided(criterion: Criterion, value: f64, tol: f64) -> StabilityVerdict {
    let v = if value < 1.0 - tol { Verdict::AsymptoticallyStable } else { Verdict::Inconclusive };
    StabilityVerdict::new(v, criterion, value)
}

/// True when every eigenvalue of `m` with modulus at least `lo` is
/// semisimple: per cluster, the numerical null space of `m − λI` has the
/// cluster's size.
fn peripheral_semisimple(m: &DMatrix<f64>, vals: &[C64], lo: f64) -> bool {
    let n = m.nrows();
    let scale = m.norm().max(1.0);
    let ctol = 1e-6 * scale;
    let mut rest: Vec<C64> = vals.iter().copied().filter(|l| l.norm() >= lo).collect();
    let cm = linalg::to_complex(m);
    while let Some(&lead) = rest.first() {
        let (cluster, others): (Vec<C64>, Vec<C64>) = rest.iter().partition(|l| (**l - lead).norm() <= ctol);
        rest = others;
        let mean = cluster.iter().sum::<C64>() / cluster.len() as f64;
        let mut shifted = cm.clone();
        for i in 0..n {
            shifted[(i, i)] -= mean;
        }
        let (s, _) = linalg::complex_svd_right(&shifted);
        let nullity = s.iter().filter(|&&v| v <= ctol).count();
        if nullity < cluster.len() {
            return false;
        }
    }
    true
}

/// Decides stability from the eigenvalues of `φ(A)` with the boundary band
/// `1 ± 1e-9·(1 + ‖A‖)`.
pub fn stability_eigen(a: &EvenPairedTensor) -> Result<StabilityVerdict> {
    let m = phi(a);
    let vals = linalg::eigenvalues(&m)?;
    let rho = vals.iter().fold(0.0f64, |r, l| r.max(l.norm()));
    let tol = boundary_tol(a);
    let v = if rho > 1.0 + tol {
        Verdict::Unstable
    } else if rho < 1.0 - tol {
        Verdict::AsymptoticallyStable
    } else if peripheral_semisimple(&m, &vals, 1.0 - tol) {
        Verdict::Stable
    } else {
        Verdict::StableMarginal
    };
    Ok(StabilityVerdict::new(v, Criterion::Eigen, rho))
}

/// `‖A‖² < 1`. Every mode gives the same sum of squared n-mode singular
/// values, so one norm suffices.
pub fn stability_hosvd(a: &EvenPairedTensor) -> StabilityVerdict {
    let w = a.frobenius_norm().powi(2);
    one_sided(Criterion::Hosvd, w, boundary_tol(a))
}

fn orthonormal_columns(m: &DMatrix<f64>, tol: f64) -> bool {
    let g = m.transpose() * m;
    (g - DMatrix::identity(m.ncols(), m.ncols())).amax() <= tol
}

/// Leading weight of an order-2N CPD of `A` (weights descending, factors
/// in interleaved order). With unit-norm columns and orthonormal factors
/// at one odd and one even position, `φ(A) = U·diag(λ)·Vᵀ` is an SVD, so
/// `|λ1| < 1` bounds the spectral radius.
pub fn stability_cpd(f: &CpFactors) -> StabilityVerdict {
    let lead = f.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let tol = 1e-10;
    let unit = f
        .factors
        .iter()
        .all(|m| m.column_iter().all(|c| (c.norm() - 1.0).abs() <= tol));
    let odd = f.factors.iter().step_by(2).any(|m| orthonormal_columns(m, tol));
    let even = f.factors.iter().skip(1).step_by(2).any(|m| orthonormal_columns(m, tol));
    if !f.factors.len().is_multiple_of(2) || !unit || !odd || !even {
        return StabilityVerdict::new(Verdict::InconclusivePrecondition, Criterion::Cpd, lead);
    }
    one_sided(Criterion::Cpd, lead, 1e-9 * (1.0 + f.weights.iter().map(|w| w * w).sum::<f64>().sqrt()))
}

/// `σmax(φ(A))` without forming `φ(A)`: TTD of `Ã` (row modes first),
/// cores `1..N−1` left- and `N+1..2N` right-orthonormalized, then the
/// largest singular value of the N-th core's left unfolding.
pub fn ttd_sigma_max(a: &EvenPairedTensor) -> Result<f64> {
    if a.frobenius_norm() == 0.0 {
        return Ok(0.0);
    }
    let n = a.order();
    let t = ttd_permuted(a, &Truncation::exact())?;
    let t = tt_left_orthonormalize(&t, n - 1)?;
    let t = tt_right_orthonormalize(&t, n + 1)?;
    Ok(linalg::singular_values(&t.left_unfolding(n - 1)).first().copied().unwrap_or(0.0))
}

pub fn stability_ttd(a: &EvenPairedTensor) -> Result<StabilityVerdict> {
    Ok(one_sided(Criterion::Ttd, ttd_sigma_max(a)?, boundary_tol(a)))
}

/// [`stability_ttd`] for a tensor held as generalized TT cores; the cores
/// are contracted back to the full tensor first.
pub fn stability_ttd_cores(t: &GenTtCores) -> Result<StabilityVerdict> {
    stability_ttd(&gen_ttd_to_full(t))
}

/// Lyapunov bound `Σ_r Π_n σmax(A_r^(n))` on generalized CPD slices:
/// asymptotically stable below 1, marginal at 1. TT factors fail the
/// precondition.
pub fn stability_factored(f: &Factored) -> StabilityVerdict {
    let Factored::Cp(g) = f else {
        return StabilityVerdict::new(Verdict::InconclusivePrecondition, Criterion::Factored, f64::NAN);
    };
    let bound: f64 = g
        .terms()
        .iter()
        .map(|term| {
            term.iter()
                .map(|m| linalg::singular_values(m).first().copied().unwrap_or(0.0))
                .product::<f64>()
        })
        .sum();
    let tol = 1e-9 * (1.0 + bound);
    let v = if bound < 1.0 - tol {
        Verdict::AsymptoticallyStable
    } else if bound <= 1.0 + tol {
        Verdict::StableMarginal
    } else {
        Verdict::Inconclusive
    };
    StabilityVerdict::new(v, Criterion::Factored, bound)
}

/// Decides stability of a Kronecker-rank-one `A` from `Π_n ρ(An)`. On the
/// boundary every unit-modulus eigenvalue of `φ(A)` is a product of
/// peripheral eigenvalues of the factors, so it is semisimple iff those are.
pub fn stability_tucker(f: &Factored) -> Result<StabilityVerdict> {
    let Factored::Cp(g) = f else {
        return Ok(StabilityVerdict::new(Verdict::InconclusivePrecondition, Criterion::Tucker, f64::NAN));
    };
    if g.rank() != 1 {
        return Ok(StabilityVerdict::new(Verdict::InconclusivePrecondition, Criterion::Tucker, f64::NAN));
    }
    let mats = &g.terms()[0];
    let mut spectra = Vec::with_capacity(mats.len());
    let mut rho = 1.0;
    let mut norm = 1.0;
    for m in mats {
        let vals = linalg::eigenvalues(m)?;
        rho *= vals.iter().fold(0.0f64, |r, l| r.max(l.norm()));
        norm *= m.norm();
        spectra.push(vals);
    }
    let tol = 1e-9 * (1.0 + norm);
    let v = if rho > 1.0 + tol {
        Verdict::Unstable
    } else if rho < 1.0 - tol {
        Verdict::AsymptoticallyStable
    } else {
        let ok = mats.iter().zip(&spectra).all(|(m, vals)| {
            let r = vals.iter().fold(0.0f64, |r, l| r.max(l.norm()));
            peripheral_semisimple(m, vals, r * (1.0 - tol))
        });
        if ok {
            Verdict::Stable
        } else {
            Verdict::Unstable
        }
    };
    Ok(StabilityVerdict::new(v, Criterion::Tucker, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::GenCpFactors;
    use crate::einstein::{paired_outer, phi_inverse, u_diagonal, PairedShape};
    use crate::random::{orthonormal_columns as ortho, rng};
    use crate::system::{small_siso_tucker, tucker_to_einstein};
    use crate::tensor::{DenseTensor, Shape};

    fn diag(v: f64, dims: &[usize]) -> EvenPairedTensor {
        u_diagonal(&DenseTensor::from_fn(Shape::new(dims.to_vec()).unwrap(), |_| v))
    }

    fn tucker(mats: Vec<DMatrix<f64>>) -> Factored {
        let p = PairedShape::square(&mats.iter().map(|m| m.nrows()).collect::<Vec<_>>()).unwrap();
        Factored::Cp(GenCpFactors::new(p, vec![mats]).unwrap())
    }

    #[test]
    fn eigen_trichotomy() {
        let a = diag(0.5, &[2, 3]);
        let v = stability_eigen(&a).unwrap();
        assert_eq!(v.verdict, Verdict::AsymptoticallyStable);
        assert!((v.witness - 0.5).abs() < 1e-12);
        let mut d = DenseTensor::from_fn(Shape::new(vec![2, 2]).unwrap(), |_| 0.5);
        d.set(&[1, 0], 1.1);
        assert_eq!(stability_eigen(&u_diagonal(&d)).unwrap().verdict, Verdict::Unstable);
        assert_eq!(stability_eigen(&diag(1.0, &[2, 2])).unwrap().verdict, Verdict::Stable);
        // a Jordan block at 1
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let jt = phi_inverse(&j, &PairedShape::square(&[2]).unwrap()).unwrap();
        assert_eq!(stability_eigen(&jt).unwrap().verdict, Verdict::StableMarginal);
        // rotation: unit-modulus complex pair, semisimple
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = phi_inverse(&DMatrix::from_row_slice(2, 2, &[c, -s, s, c]), &PairedShape::square(&[2]).unwrap()).unwrap();
        assert_eq!(stability_eigen(&r).unwrap().verdict, Verdict::Stable);
    }

    #[test]
    fn worked_example_spectral_product() {
        let s = tucker_to_einstein(&small_siso_tucker()).unwrap();
        let v = stability_eigen(s.a()).unwrap();
        assert_eq!(v.verdict, Verdict::AsymptoticallyStable);
        assert!((v.witness - 0.9207).abs() < 1e-3);
        let t = stability_tucker(&tucker(small_siso_tucker().a)).unwrap();
        assert_eq!(t.verdict, Verdict::AsymptoticallyStable);
        assert!((t.witness - v.witness).abs() < 1e-12);
        let h = stability_hosvd(s.a());
        assert!(h.verdict != Verdict::AsymptoticallyStable || v.is_asymptotically_stable());
    }

    #[test]
    fn hosvd_norm_criterion() {
        let a = diag(0.9 / 2.0, &[2, 2]);
        let v = stability_hosvd(&a);
        assert!((v.witness - 0.81).abs() < 1e-12);
        assert_eq!(v.verdict, Verdict::AsymptoticallyStable);
        assert_eq!(stability_hosvd(&diag(1.0, &[2, 2])).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn ttd_sigma_matches_dense_and_shear_is_inconclusive() {
        let mut g = rng(241);
        let p = PairedShape::square(&[2, 3, 2]).unwrap();
        let a = crate::einstein::rand_paired(&mut g, &p);
        let dense = linalg::singular_values(&phi(&a))[0];
        assert!((ttd_sigma_max(&a).unwrap() - dense).abs() <= 1e-10 * dense);
        let v = stability_ttd(&diag(0.5, &[2, 2])).unwrap();
        assert!((v.witness - 0.5).abs() < 1e-12);
        assert_eq!(v.verdict, Verdict::AsymptoticallyStable);

        let shear = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 1.8, 0.9]);
        let sh = phi_inverse(&shear, &PairedShape::square(&[2]).unwrap()).unwrap();
        let s = stability_ttd(&sh).unwrap();
        assert!(s.witness > 1.0);
        assert_eq!(s.verdict, Verdict::Inconclusive);
        assert_eq!(stability_eigen(&sh).unwrap().verdict, Verdict::AsymptoticallyStable);
        let cores = crate::decomp::generalized_ttd(&a, &Truncation::exact()).unwrap();
        assert!((stability_ttd_cores(&cores).unwrap().witness - dense).abs() <= 1e-10 * dense);
    }

    #[test]
    fn cpd_weight_criterion() {
        let mut g = rng(242);
        let r = 2;
        let factors: Vec<DMatrix<f64>> = vec![ortho(&mut g, 3, r), ortho(&mut g, 3, r), ortho(&mut g, 2, r), ortho(&mut g, 2, r)];
        let f = CpFactors { weights: vec![0.8, 0.3], factors: factors.clone(), fit: 1.0 };
        let v = stability_cpd(&f);
        assert_eq!(v.verdict, Verdict::AsymptoticallyStable);
        let full = crate::decomp::cp_to_full(&f);
        let sv = linalg::singular_values(&phi(&EvenPairedTensor::from_interleaved(full).unwrap()));
        assert!((sv[0] - 0.8).abs() < 1e-12);
        let f2 = CpFactors { weights: vec![1.2, 0.3], factors: factors.clone(), fit: 1.0 };
        assert_eq!(stability_cpd(&f2).verdict, Verdict::Inconclusive);
        let mut bad = factors;
        bad[1] = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.6, 0.8, 0.0]);
        bad[3] = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.6, 0.8]);
        let f3 = CpFactors { weights: vec![0.5, 0.3], factors: bad, fit: 1.0 };
        assert_eq!(stability_cpd(&f3).verdict, Verdict::InconclusivePrecondition);
    }

    #[test]
    fn factored_bound() {
        let a1 = DMatrix::from_diagonal_element(2, 2, 0.9);
        let v = stability_factored(&tucker(vec![a1.clone(), a1.clone()]));
        assert!((v.witness - 0.81).abs() < 1e-12);
        assert_eq!(v.verdict, Verdict::AsymptoticallyStable);
        let (c, s) = (0.4f64.cos(), 0.4f64.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert_eq!(stability_factored(&tucker(vec![rot.clone(), rot])).verdict, Verdict::StableMarginal);
        // nilpotent-ish slices with large σmax but tiny spectrum
        let sh = DMatrix::from_row_slice(2, 2, &[0.5, 1.2, 0.0, 0.5]);
        let f = tucker(vec![sh.clone(), DMatrix::identity(2, 2)]);
        let b = stability_factored(&f);
        assert!(b.witness > 1.0 && b.verdict == Verdict::Inconclusive);
        assert_eq!(stability_eigen(&f.to_full()).unwrap().verdict, Verdict::AsymptoticallyStable);
    }

    #[test]
    fn tucker_trichotomy() {
        let a = DMatrix::from_diagonal_element(2, 2, 1.2);
        assert_eq!(stability_tucker(&tucker(vec![a, DMatrix::identity(2, 2)])).unwrap().verdict, Verdict::Unstable);
        let ident = DMatrix::identity(2, 2);
        assert_eq!(stability_tucker(&tucker(vec![ident.clone(), ident.clone()])).unwrap().verdict, Verdict::Stable);
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let f = tucker(vec![j, ident]);
        assert_eq!(stability_tucker(&f).unwrap().verdict, Verdict::Unstable);
        assert_eq!(stability_eigen(&f.to_full()).unwrap().verdict, Verdict::StableMarginal);
        let mut g = rng(243);
        let s = crate::system::random_tucker(&mut g, &[2, 3], &[1, 1], &[1, 1], None).unwrap();
        let e = stability_eigen(&paired_outer(&s.a).unwrap()).unwrap();
        let t = stability_tucker(&tucker(s.a)).unwrap();
        assert_eq!(e.verdict, t.verdict);
    }
}
