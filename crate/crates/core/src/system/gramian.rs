//! Finite-horizon Gramians and the infinite-horizon tensor Lyapunov
//! (Stein) equations, solved on the unfolding.

use nalgebra::{DMatrix, DVector};

use super::{stability_eigen, MltiSystem, Verdict};
use crate::einstein::{phi, phi_inverse, EvenPairedTensor, PairedShape};
use crate::error::{Error, Result};
use crate::linalg::kron;

const SMITH_MAX_DOUBLINGS: usize = 64;
const RESIDUAL_TOL: f64 = 1e-10;
const DENSE_FALLBACK_MAX: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramianKind {
    Reach,
    Obs,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn fold(s: &MltiSystem, m: &DMatrix<f64>) -> EvenPairedTensor {
    phi_inverse(m, &PairedShape::square(s.state_dims()).expect("valid state shape")).expect("square unfolding")
}

/// `Σ_{k<h} a^k·q·(a^k)ᵀ` for `h = t1 − t0` terms.
fn finite_sum(a: &DMatrix<f64>, q: &DMatrix<f64>, h: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(q.nrows(), q.ncols());
    let mut term = q.clone();
    for k in 0..h {
        acc += &term;
        if k + 1 < h {
            term = a * term * a.transpose();
        }
    }
    symmetrize(&acc)
}

fn check_horizon(t0: usize, t1: usize) -> Result<usize> {
    if t1 <= t0 {
        return Err(Error::domain(format!("empty horizon [{t0}, {t1}]")));
    }
    Ok(t1 - t0)
}

/// `Σ_{τ=t0}^{t1−1} A^{t1−τ−1}*B*Bᵀ*(A^{t1−τ−1})ᵀ`.
pub fn reach_gramian(s: &MltiSystem, t0: usize, t1: usize) -> Result<EvenPairedTensor> {
    let h = check_horizon(t0, t1)?;
    let b = phi(s.b());
    Ok(fold(s, &finite_sum(&phi(s.a()), &(&b * b.transpose()), h)))
}

/// `Σ_{τ=t0}^{t1−1} (A^{τ−t0})ᵀ*Cᵀ*C*A^{τ−t0}`.
pub fn obs_gramian(s: &MltiSystem, t0: usize, t1: usize) -> Result<EvenPairedTensor> {
    let h = check_horizon(t0, t1)?;
    let c = phi(s.c());
    Ok(fold(s, &finite_sum(&phi(s.a()).transpose(), &(c.transpose() * &c), h)))
}

/// `‖X − a·X·aᵀ − q‖ / max(‖q‖, ‖X‖)` (zero when everything vanishes).
pub fn lyapunov_residual(a: &DMatrix<f64>, q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    let r = (x - a * x * a.transpose() - q).norm();
    let scale = q.norm().max(x.norm());
    if scale == 0.0 {
        0.0
    } else {
        r / scale
    }
}

/// Smith doubling `X ← X + Aₖ·X·Aₖᵀ`, `Aₖ ← Aₖ²` until the increment
/// stops registering.
fn smith(a: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = q.clone();
    let mut ak = a.clone();
    for _ in 0..SMITH_MAX_DOUBLINGS {
        let inc = &ak * &x * ak.transpose();
        let done = inc.norm() <= f64::EPSILON * x.norm();
        x += inc;
        if done {
            break;
        }
        ak = &ak * &ak;
    }
    symmetrize(&x)
}

/// `(I − a⊗a)·vec(X) = vec(q)`.
fn dense_stein(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = DMatrix::identity(n * n, n * n) - kron(a, a);
    let x = m
        .lu()
        .solve(&DVector::from_column_slice(q.as_slice()))
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    Ok(symmetrize(&DMatrix::from_column_slice(n, n, x.as_slice())))
}

/// Solves `X − a·X·aᵀ = q` for a Schur-stable `a` (not checked here).
pub(crate) fn stein_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = smith(a, q);
    let r = lyapunov_residual(a, q, &x);
    if r <= RESIDUAL_TOL {
        return Ok(x);
    }
    if a.nrows() <= DENSE_FALLBACK_MAX {
        let x = dense_stein(a, q)?;
        let r2 = lyapunov_residual(a, q, &x);
        if r2 <= RESIDUAL_TOL {
            return Ok(x);
        }
        return Err(Error::NonConvergence {
            method: "dense Stein solve",
            iterations: 1,
            residual: r2,
        });
    }
    Err(Error::NonConvergence {
        method: "Smith doubling",
        iterations: SMITH_MAX_DOUBLINGS,
        residual: r,
    })
}

/// Infinite-horizon Gramian: `Wr − A*Wr*Aᵀ = B*Bᵀ` or
/// `Wo − Aᵀ*Wo*A = Cᵀ*C`. Requires `stability_eigen` to report asymptotic
/// stability.
pub fn lyapunov_solve(s: &MltiSystem, kind: GramianKind) -> Result<EvenPairedTensor> {
    let v = stability_eigen(s.a())?;
    if v.verdict != Verdict::AsymptoticallyStable {
        return Err(Error::Precondition(format!(
            "Lyapunov solve needs an asymptotically stable system (spectral radius {:.6}, {})",
            v.witness, v.verdict
        )));
    }
    let a = phi(s.a());
    let x = match kind {
        GramianKind::Reach => {
            let b = phi(s.b());
            stein_solve(&a, &(&b * b.transpose()))?
        }
        GramianKind::Obs => {
            let c = phi(s.c());
            stein_solve(&a.transpose(), &(c.transpose() * &c))?
        }
    };
    Ok(fold(s, &x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::{is_u_positive_definite, is_weakly_symmetric, u_transpose};
    use crate::random::rng;
    use crate::system::{random_system, small_siso_tucker, tucker_to_einstein, Construction, SystemSpec, TuckerSystem};

    fn scalar(a: f64, b: f64) -> MltiSystem {
        let m = |v: f64| DMatrix::from_element(1, 1, v);
        tucker_to_einstein(&TuckerSystem::new(vec![m(a)], vec![m(b)], vec![m(1.0)]).unwrap()).unwrap()
    }

    #[test]
    fn scalar_closed_forms() {
        let s = scalar(0.5, 1.0);
        let w = reach_gramian(&s, 0, 2).unwrap();
        assert!((w.as_dense().data()[0] - 1.25).abs() < 1e-15);
        let w = lyapunov_solve(&s, GramianKind::Reach).unwrap();
        assert!((w.as_dense().data()[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!(matches!(lyapunov_solve(&scalar(1.5, 1.0), GramianKind::Reach), Err(Error::Precondition(_))));
        assert!(reach_gramian(&s, 3, 3).is_err());
    }

    #[test]
    fn zero_state_tensor_gives_bbt() {
        let mut g = rng(251);
        let s = random_system(&mut g, &SystemSpec::new(&[2, 2], &[1, 2], &[1, 1], Construction::Dense)).unwrap();
        let z = s.with_a(EvenPairedTensor::zeros(s.a().pshape().clone())).unwrap();
        let w = lyapunov_solve(&z, GramianKind::Reach).unwrap();
        let b = phi(s.b());
        assert!((phi(&w) - &b * b.transpose()).norm() < 1e-13);
        let zb = z.clone();
        let zero_b = MltiSystem::new(zb.a().clone(), EvenPairedTensor::zeros(s.b().pshape().clone()), zb.c().clone()).unwrap();
        let w = reach_gramian(&zero_b, 0, 4).unwrap();
        assert_eq!(w.frobenius_norm(), 0.0);
        assert!(!is_u_positive_definite(&w, 1e-12).unwrap());
    }

    #[test]
    fn worked_example_limits() {
        let s = tucker_to_einstein(&small_siso_tucker()).unwrap();
        let wr = reach_gramian(&s, 0, 6).unwrap();
        let wo = obs_gramian(&s, 0, 6).unwrap();
        assert!(is_u_positive_definite(&wr, 1e-12).unwrap());
        assert!(is_u_positive_definite(&wo, 1e-12).unwrap());
        assert!(is_weakly_symmetric(&wr, 1e-14));
        for kind in [GramianKind::Reach, GramianKind::Obs] {
            let w = lyapunov_solve(&s, kind).unwrap();
            let finite = match kind {
                GramianKind::Reach => reach_gramian(&s, 0, 200).unwrap(),
                GramianKind::Obs => obs_gramian(&s, 0, 200).unwrap(),
            };
            assert!(w.sub(&finite).unwrap().frobenius_norm() <= 1e-8 * w.frobenius_norm());
            let a = phi(s.a());
            let (a, q) = match kind {
                GramianKind::Reach => (a, phi(s.b()) * phi(s.b()).transpose()),
                GramianKind::Obs => (a.transpose(), phi(s.c()).transpose() * phi(s.c())),
            };
            assert!(lyapunov_residual(&a, &q, &phi(&w)) <= 1e-10);
        }
    }

    #[test]
    fn duality_and_dense_fallback_agree() {
        let mut g = rng(252);
        let s = random_system(&mut g, &SystemSpec::new(&[2, 3], &[1, 2], &[2, 1], Construction::Dense).stable(0.95))
            .unwrap();
        let wo = lyapunov_solve(&s, GramianKind::Obs).unwrap();
        let wd = lyapunov_solve(&s.dual(), GramianKind::Reach).unwrap();
        assert!(wo.sub(&wd).unwrap().frobenius_norm() <= 1e-12 * wo.frobenius_norm());
        assert!(wo.sub(&u_transpose(&wo)).unwrap().frobenius_norm() <= 1e-14 * wo.frobenius_norm());
        let a = phi(s.a());
        let q = phi(s.b()) * phi(s.b()).transpose();
        let x1 = smith(&a, &q);
        let x2 = dense_stein(&a, &q).unwrap();
        assert!((&x1 - &x2).norm() <= 1e-10 * x2.norm());
    }
}
