use nalgebra::DMatrix;

use crate::linalg::{self, complete_orthonormal};
use crate::tensor::{n_mode_matricize, tucker_product, DenseTensor};

/// `X = S ×1 U1 ··· ×N UN` with orthogonal `Un` and n-mode singular values
/// `γ^(n)` (padded with zeros to length `Jn`).
#[derive(Debug, Clone)]
pub struct HosvdResult {
    pub core: DenseTensor,
    pub factors: Vec<DMatrix<f64>>,
    pub singular_values: Vec<Vec<f64>>,
}

impl HosvdResult {
    pub fn reconstruct(&self) -> DenseTensor {
        tucker_product(&self.core, &self.factors).expect("factor count matches order")
    }
}

pub fn hosvd(x: &DenseTensor) -> HosvdResult {
    let mut factors = Vec::with_capacity(x.order());
    let mut singular_values = Vec::with_capacity(x.order());
    for n in 0..x.order() {
        let xn = n_mode_matricize(x, n).expect("mode in range");
        let dec = linalg::svd(&xn);
        let u = if dec.u.ncols() < xn.nrows() {
            complete_orthonormal(&dec.u)
        } else {
            dec.u
        };
        let mut s = dec.s;
        s.resize(xn.nrows(), 0.0);
        factors.push(u);
        singular_values.push(s);
    }
    let ut: Vec<DMatrix<f64>> = factors.iter().map(|u| u.transpose()).collect();
    let core = tucker_product(x, &ut).expect("factor count matches order");
    HosvdResult {
        core,
        factors,
        singular_values,
    }
}

/// Numerical ranks of the n-mode matricizations.
pub fn multilinear_ranks(x: &DenseTensor, tol: f64) -> Vec<usize> {
    (0..x.order())
        .map(|n| linalg::matrix_rank(&n_mode_matricize(x, n).expect("mode in range"), tol))
        .collect()
}
