//! Dense matrix kernels shared by the tensor layers. Matrices are nalgebra
//! types; the factorizations run on faer.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Default relative tolerance for numerical ranks: 2^-45.
pub const DEFAULT_RANK_TOL: f64 = 2.842_170_943_040_401e-14;

/// Thin SVD with singular values in descending order. Each left singular
/// vector has its largest-magnitude entry positive (the matching right
/// vector is flipped along).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<f64>,
}

impl Svd {
    pub fn rank(&self, tol: f64) -> usize {
        numerical_rank(&self.s, self.u.nrows(), self.vt.ncols(), tol)
    }

    /// Keeps the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> Svd {
        let k = k.min(self.s.len());
        Svd {
            u: self.u.columns(0, k).into_owned(),
            s: self.s[..k].to_vec(),
            vt: self.vt.rows(0, k).into_owned(),
        }
    }
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn to_faer_complex(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

// nalgebra's bidiagonal SVD loses accuracy on tall rank-deficient inputs
// (reconstruction errors near 1e-2 observed), so decompositions go through
// faer and results come back as nalgebra matrices.
pub fn svd(m: &DMatrix<f64>) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd {
            u: DMatrix::zeros(r, 0),
            s: Vec::new(),
            vt: DMatrix::zeros(0, c),
        };
    }
    let dec = to_faer(m).thin_svd().expect("SVD converges on finite input");
    let u0 = from_faer(dec.U());
    let v0 = from_faer(dec.V());
    let s0: Vec<f64> = dec.S().column_vector().iter().copied().collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s0[b].total_cmp(&s0[a]));
    let mut u = DMatrix::zeros(r, k);
    let mut vt = DMatrix::zeros(k, c);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        let col = u0.column(src);
        let (imax, _) = col
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        let sign = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        u.set_column(dst, &(col * sign));
        vt.set_row(dst, &(v0.column(src).transpose() * sign));
        s.push(s0[src]);
    }
    Svd { u, s, vt }
}

pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m).singular_values().expect("SVD converges on finite input");
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values (descending) and right singular vectors (as columns) of
/// a complex matrix.
pub fn complex_svd_right(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let dec = to_faer_complex(m).svd().expect("SVD converges on finite input");
    let s: Vec<f64> = dec.S().column_vector().iter().map(|z| z.re).collect();
    let v = dec.V();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let vs = CMatrix::from_fn(v.nrows(), order.len(), |i, j| v[(i, order[j])]);
    (order.iter().map(|&k| s[k]).collect(), vs)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut e = to_faer(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .expect("symmetric eigensolver converges on finite input");
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric
/// matrix; only the lower triangle is read.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let dec = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigensolver converges on finite input");
    let vals: Vec<f64> = dec.S().column_vector().iter().copied().collect();
    let vecs = from_faer(dec.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let v = DMatrix::from_fn(n, n, |i, j| vecs[(i, order[j])]);
    (order.iter().map(|&k| vals[k]).collect(), v)
}

/// `L` with `L·Lᵀ = W` for a symmetric positive semidefinite `W`, taken from
/// the eigendecomposition; negative rounding-level eigenvalues are clipped.
pub fn psd_sqrt_factor(w: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, mut v) = symmetric_eigen(w);
    for (j, &l) in vals.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        v.column_mut(j).scale_mut(s);
    }
    v
}

/// Solves `m·x = rhs` by partial-pivot LU. Also returns the ratio of the
/// largest to the smallest pivot magnitude, a cheap lower estimate of the
/// condition number (infinite for an exactly singular `m`).
pub fn complex_solve(m: &faer::Mat<C64>, rhs: &faer::Mat<C64>) -> (faer::Mat<C64>, f64) {
    use faer::linalg::solvers::Solve;
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..u.nrows().min(u.ncols()) {
        let d = u[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let cond = if lo == 0.0 { f64::INFINITY } else { hi / lo };
    (lu.solve(rhs), cond)
}

/// Largest singular value of a faer complex matrix.
pub fn faer_sigma_max(m: faer::MatRef<'_, C64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.singular_values()
        .expect("SVD converges on finite input")
        .into_iter()
        .fold(0.0f64, f64::max)
}

const LANCZOS_MIN_DIM: usize = 24;
const LANCZOS_MAX_STEPS: usize = 80;

/// Largest singular value by Lanczos on the smaller Gram matrix with full
/// reorthogonalization. Stops when the top Ritz pair's residual falls below
/// 1e-10 of its value, which bounds the relative error of σmax by 5e-11;
/// small matrices and unconverged runs use the dense SVD.
pub fn sigma_max(m: faer::MatRef<'_, C64>) -> f64 {
    sigma_max_from(m, None).0
}

/// [`sigma_max`] started from `start` (for instance the vector returned at
/// a nearby matrix). Also returns the converged top Ritz vector of the Gram
/// matrix, or `None` when the dense path was taken.
pub fn sigma_max_from(m: faer::MatRef<'_, C64>, start: Option<&DVector<C64>>) -> (f64, Option<DVector<C64>>) {
    let (p, q) = (m.nrows(), m.ncols());
    let n = p.min(q);
    if n <= LANCZOS_MIN_DIM {
        return (faer_sigma_max(m), None);
    }
    let g = from_faer_c(m);
    let apply = |v: &DVector<C64>| -> DVector<C64> {
        if p >= q {
            g.ad_mul(&(&g * v))
        } else {
            &g * g.ad_mul(v)
        }
    };
    let mut v = match start {
        Some(s) if s.len() == n && s.norm() > 0.0 => s.clone(),
        // fixed, generic start so the result is reproducible
        _ => DVector::from_fn(n, |i, _| {
            let t = i as f64;
            C64::new(1.0 + (t * 0.754_877_666).fract(), (t * 0.569_840_291).fract() - 0.5)
        }),
    };
    v /= C64::new(v.norm(), 0.0);
    let mut basis: Vec<DVector<C64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    for j in 0..LANCZOS_MAX_STEPS.min(n) {
        let mut w = apply(&v);
        let a = v.dotc(&w).re;
        alpha.push(a);
        basis.push(v.clone());
        for _ in 0..2 {
            for u in &basis {
                let c = u.dotc(&w);
                w -= u * c;
            }
        }
        let b = w.norm();
        let k = j + 1;
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let (vals, vecs) = symmetric_eigen(&t);
        let theta = vals[k - 1];
        if theta <= 0.0 {
            if g.iter().all(|z| *z == C64::new(0.0, 0.0)) {
                return (0.0, None);
            }
            return (faer_sigma_max(m), None);
        }
        let res = b * vecs[(k - 1, k - 1)].abs();
        if res <= 1e-10 * theta || b <= 1e-300 {
            let mut ritz = DVector::zeros(n);
            for (i, u) in basis.iter().enumerate() {
                ritz += u * C64::new(vecs[(i, k - 1)], 0.0);
            }
            return (theta.sqrt(), Some(ritz));
        }
        beta.push(b);
        v = w / C64::new(b, 0.0);
    }
    (faer_sigma_max(m), None)
}

pub fn to_faer_c(m: &DMatrix<f64>) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

pub fn from_faer_c(m: faer::MatRef<'_, C64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Count of singular values above `tol * s_max * max(rows, cols)`.
pub fn numerical_rank(s: &[f64], rows: usize, cols: usize, tol: f64) -> usize {
    let smax = s.iter().fold(0.0f64, |m, &v| m.max(v));
    if smax == 0.0 {
        return 0;
    }
    let cut = tol * smax * rows.max(cols) as f64;
    s.iter().filter(|&&v| v > cut).count()
}

pub fn matrix_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    numerical_rank(&singular_values(m), m.nrows(), m.ncols(), tol)
}

/// Extends orthonormal columns `u` (n x k) to an n x n orthogonal matrix.
pub fn complete_orthonormal(u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    let mut cols: Vec<DVector<f64>> = u.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[e] = 1.0;
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&v);
                v -= c * d;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            cols.push(v / nv);
        }
    }
    DMatrix::from_columns(&cols)
}

/// Eigenvalues of a real square matrix (Hessenberg QR).
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<C64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::domain("eigenvalues of a non-square matrix"));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    to_faer(m).eigenvalues().map_err(|_| Error::NonConvergence {
        method: "nonsymmetric eigensolver",
        iterations: 0,
        residual: f64::NAN,
    })
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().fold(0.0f64, |r, l| r.max(l.norm())))
}

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| C64::new(v, 0.0))
}

/// Largest singular value of a complex matrix.
pub fn complex_sigma_max(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let s = to_faer_complex(m).singular_values().expect("SVD converges on finite input");
    s.into_iter().fold(0.0f64, f64::max)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// 2-norm condition estimate from the singular values.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}
