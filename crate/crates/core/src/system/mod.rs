//! MLTI systems `X_{t+1} = A*X_t + B*U_t`, `Y_t = C*X_t` with tensor
//! states `X ∈ R^{J1×···×JN}`, inputs `U ∈ R^{K1×···×KN}` and outputs
//! `Y ∈ R^{I1×···×IN}`.

mod balanced;
mod factored;
mod generate;
mod gramian;
mod reach;
mod simulate;
mod stability;
mod transfer;

pub use balanced::{balanced_truncation_baseline, BalancedReduction};
pub use factored::{compress, factored_unforced, CompressFormat, CompressReport, Factored, FactoredMltiSystem};
pub use generate::{random_gen_tt, random_system, random_tucker, small_siso_tucker, Construction, SystemSpec};
pub use gramian::{lyapunov_solve, lyapunov_residual, obs_gramian, reach_gramian, GramianKind};
pub use reach::{
    is_observable, is_reachable, observability_tensor, reachability_tensor, reachability_tensor_opts, Answer,
    RankMethod, RankVerdict,
};
pub use simulate::{factored_simulate, simulate, Trajectory};
pub use stability::{
    stability_cpd, stability_eigen, stability_factored, stability_hosvd, stability_ttd, stability_ttd_cores,
    stability_tucker, ttd_sigma_max, Criterion, StabilityVerdict, Verdict,
};
pub use transfer::{bode_magnitudes, hinf_norm, hinf_relative_error, transfer_eval, HinfEstimate, DEFAULT_GRID};

use nalgebra::DMatrix;

use crate::einstein::{paired_outer, phi, u_transpose, EvenPairedTensor, PairedShape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MltiSystem {
    a: EvenPairedTensor,
    b: EvenPairedTensor,
    c: EvenPairedTensor,
}

impl MltiSystem {
    /// `a` square on `J`, `b` of paired shape `(J, K)`, `c` of `(I, J)`.
    pub fn new(a: EvenPairedTensor, b: EvenPairedTensor, c: EvenPairedTensor) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::domain(format!("state tensor has paired shape {:?}", a.pshape().pairs())));
        }
        let j = a.pshape().rows();
        if b.pshape().rows() != j {
            return Err(Error::domain(format!(
                "input tensor rows {:?} do not match state shape {j:?}",
                b.pshape().rows()
            )));
        }
        if c.pshape().cols() != j {
            return Err(Error::domain(format!(
                "output tensor columns {:?} do not match state shape {j:?}",
                c.pshape().cols()
            )));
        }
        Ok(MltiSystem { a, b, c })
    }

    pub fn a(&self) -> &EvenPairedTensor {
        &self.a
    }

    pub fn b(&self) -> &EvenPairedTensor {
        &self.b
    }

    pub fn c(&self) -> &EvenPairedTensor {
        &self.c
    }

    pub fn order(&self) -> usize {
        self.a.order()
    }

    pub fn state_dims(&self) -> &[usize] {
        self.a.pshape().rows()
    }

    pub fn input_dims(&self) -> &[usize] {
        self.b.pshape().cols()
    }

    pub fn output_dims(&self) -> &[usize] {
        self.c.pshape().rows()
    }

    /// `Π_J`.
    pub fn state_count(&self) -> usize {
        self.a.pshape().row_count()
    }

    /// Entries of `A`, `B` and `C`.
    pub fn param_count(&self) -> usize {
        self.a.as_dense().numel() + self.b.as_dense().numel() + self.c.as_dense().numel()
    }

    /// `(Aᵀ, Cᵀ, Bᵀ)`: observability of `(A, C)` is reachability of the dual.
    pub fn dual(&self) -> MltiSystem {
        MltiSystem {
            a: u_transpose(&self.a),
            b: u_transpose(&self.c),
            c: u_transpose(&self.b),
        }
    }

    pub fn with_a(&self, a: EvenPairedTensor) -> Result<Self> {
        MltiSystem::new(a, self.b.clone(), self.c.clone())
    }
}

/// Per-mode matrices `An: Jn×Jn`, `Bn: Jn×Kn`, `Cn: In×Jn` of the Tucker
/// form `X_{t+1} = X_t ×{A1..AN} + U_t ×{B1..BN}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerSystem {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub c: Vec<DMatrix<f64>>,
}

impl TuckerSystem {
    pub fn new(a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>, c: Vec<DMatrix<f64>>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() || a.len() != c.len() {
            return Err(Error::domain(format!(
                "mode counts differ: {} state, {} input, {} output matrices",
                a.len(),
                b.len(),
                c.len()
            )));
        }
        for (n, ((an, bn), cn)) in a.iter().zip(&b).zip(&c).enumerate() {
            let j = an.nrows();
            if an.ncols() != j || bn.nrows() != j || cn.ncols() != j || j == 0 || bn.ncols() == 0 || cn.nrows() == 0 {
                return Err(Error::domain(format!(
                    "mode {}: A {:?}, B {:?}, C {:?} are not conformable",
                    n + 1,
                    an.shape(),
                    bn.shape(),
                    cn.shape()
                )));
            }
        }
        Ok(TuckerSystem { a, b, c })
    }

    pub fn order(&self) -> usize {
        self.a.len()
    }
}

/// Packs each matrix list as an interleaved outer product, so that
/// `A*X = X ×{A1..AN}`.
pub fn tucker_to_einstein(s: &TuckerSystem) -> Result<MltiSystem> {
    let s = TuckerSystem::new(s.a.clone(), s.b.clone(), s.c.clone())?;
    MltiSystem::new(paired_outer(&s.a)?, paired_outer(&s.b)?, paired_outer(&s.c)?)
}

/// A classical state-space triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Lti {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl Lti {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n {
            return Err(Error::domain(format!(
                "state-space matrices {:?}, {:?}, {:?} are not conformable",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Lti { a, b, c })
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// `n² + n·m + p·n`.
    pub fn param_count(&self) -> usize {
        self.a.len() + self.b.len() + self.c.len()
    }
}

/// Anything with an unfolded state-space form.
pub trait LinearModel {
    fn lti(&self) -> Lti;
}

impl LinearModel for Lti {
    fn lti(&self) -> Lti {
        self.clone()
    }
}

impl LinearModel for MltiSystem {
    fn lti(&self) -> Lti {
        unfold_to_lti(self)
    }
}

/// `(φ(A), φ(B), φ(C))`.
pub fn unfold_to_lti(s: &MltiSystem) -> Lti {
    Lti {
        a: phi(&s.a),
        b: phi(&s.b),
        c: phi(&s.c),
    }
}

/// Inverse of [`unfold_to_lti`] for the given state, input and output shapes.
pub fn lti_to_mlti(l: &Lti, state: &[usize], input: &[usize], output: &[usize]) -> Result<MltiSystem> {
    use crate::einstein::phi_inverse;
    MltiSystem::new(
        phi_inverse(&l.a, &PairedShape::square(state)?)?,
        phi_inverse(&l.b, &PairedShape::from_row_col(state, input)?)?,
        phi_inverse(&l.c, &PairedShape::from_row_col(output, state)?)?,
    )
}

/// Stability boundary tolerance `1e-9·(1 + ‖A‖)`.
pub(crate) fn boundary_tol(a: &EvenPairedTensor) -> f64 {
    1e-9 * (1.0 + a.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::einstein::{einstein_apply, rand_paired};
    use crate::linalg::kron;
    use crate::random::{rand_matrix, rand_tensor, rng};
    use crate::tensor::tucker_product;

    #[test]
    fn tucker_packaging_matches_mode_products() {
        let mut g = rng(201);
        let a: Vec<DMatrix<f64>> = vec![rand_matrix(&mut g, 3, 3), rand_matrix(&mut g, 2, 2)];
        let b = vec![rand_matrix(&mut g, 3, 1), rand_matrix(&mut g, 2, 2)];
        let c = vec![rand_matrix(&mut g, 2, 3), rand_matrix(&mut g, 1, 2)];
        let s = tucker_to_einstein(&TuckerSystem::new(a.clone(), b, c).unwrap()).unwrap();
        for _ in 0..5 {
            let x = rand_tensor(&mut g, &[3, 2]);
            let lhs = einstein_apply(s.a(), &x).unwrap();
            let rhs = tucker_product(&x, &a).unwrap();
            assert!(lhs.sub(&rhs).unwrap().frobenius_norm() < 1e-13);
        }
        assert!((phi(s.a()) - kron(&a[1], &a[0])).norm() < 1e-14);
        assert_eq!(s.input_dims(), &[1, 2]);
        assert_eq!(s.output_dims(), &[2, 1]);
    }

    #[test]
    fn order_one_is_the_matrix_system() {
        let mut g = rng(202);
        let a = rand_matrix(&mut g, 3, 3);
        let b = rand_matrix(&mut g, 3, 2);
        let c = rand_matrix(&mut g, 1, 3);
        let s = tucker_to_einstein(&TuckerSystem::new(vec![a.clone()], vec![b.clone()], vec![c.clone()]).unwrap())
            .unwrap();
        let l = unfold_to_lti(&s);
        assert_eq!(l, Lti { a, b, c });
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut g = rng(203);
        let a = rand_paired(&mut g, &PairedShape::square(&[2, 2]).unwrap());
        let b = rand_paired(&mut g, &PairedShape::new(&[(2, 1), (3, 1)]).unwrap());
        let c = rand_paired(&mut g, &PairedShape::new(&[(1, 2), (1, 2)]).unwrap());
        assert!(MltiSystem::new(a.clone(), b, c.clone()).is_err());
        let nonsq = rand_paired(&mut g, &PairedShape::new(&[(2, 1), (2, 2)]).unwrap());
        let b = rand_paired(&mut g, &PairedShape::new(&[(2, 1), (2, 1)]).unwrap());
        assert!(MltiSystem::new(nonsq, b.clone(), c.clone()).is_err());
        let s = MltiSystem::new(a, b, c).unwrap();
        let d = s.dual();
        assert_eq!(d.input_dims(), &[1, 1]);
        assert_eq!(d.dual(), s);
        assert!(TuckerSystem::new(vec![DMatrix::zeros(2, 2)], vec![DMatrix::zeros(3, 1)], vec![DMatrix::zeros(1, 2)])
            .is_err());
    }
}
