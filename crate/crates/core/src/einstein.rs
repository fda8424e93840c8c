//! Even-order paired tensors and the Einstein product.
//!
//! A paired tensor `A ∈ R^{J1×I1×···×JN×IN}` is stored as an order-2N
//! [`DenseTensor`] with interleaved extents. The unfolding `φ` sends
//! `A[j1,i1,...,jN,iN]` to row `ivec(j)` and column `ivec(i)` of a
//! `Π_J × Π_I` matrix, and turns the Einstein product into the matrix
//! product. The Einstein kernels below contract directly over the paired
//! storage; φ is only used where a dense matrix factorization is needed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, DEFAULT_RANK_TOL};
use crate::random;
use crate::tensor::{self, increment, DenseTensor, Permutation, Shape};

#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PairedShape {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl PairedShape {
    /// From `((J1,I1), ..., (JN,IN))`.
    pub fn new(pairs: &[(usize, usize)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::domain("paired shape needs at least one pair"));
        }
        let rows: Vec<usize> = pairs.iter().map(|p| p.0).collect();
        let cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        let interleaved: Vec<usize> = pairs.iter().flat_map(|&(j, i)| [j, i]).collect();
        Shape::new(interleaved)?;
        Ok(PairedShape { rows, cols })
    }

    pub fn from_row_col(rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.len() != cols.len() {
            return Err(Error::domain(format!(
                "row shape {rows:?} and column shape {cols:?} differ in order"
            )));
        }
        let pairs: Vec<(usize, usize)> = rows.iter().copied().zip(cols.iter().copied()).collect();
        Self::new(&pairs)
    }

    pub fn square(rows: &[usize]) -> Result<Self> {
        Self::from_row_col(rows, rows)
    }

    /// Reads the pairs off interleaved extents `(J1,I1,...,JN,IN)`.
    pub fn from_interleaved(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || !dims.len().is_multiple_of(2) {
            return Err(Error::domain(format!("order {} is not even and positive", dims.len())));
        }
        let pairs: Vec<(usize, usize)> = dims.chunks(2).map(|c| (c[0], c[1])).collect();
        Self::new(&pairs)
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn row_shape(&self) -> Shape {
        Shape::new(self.rows.clone()).expect("validated")
    }

    pub fn col_shape(&self) -> Shape {
        Shape::new(self.cols.clone()).expect("validated")
    }

    pub fn row_count(&self) -> usize {
        self.rows.iter().product()
    }

    pub fn col_count(&self) -> usize {
        self.cols.iter().product()
    }

    pub fn interleaved(&self) -> Vec<usize> {
        self.rows.iter().zip(&self.cols).flat_map(|(&j, &i)| [j, i]).collect()
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.rows.iter().copied().zip(self.cols.iter().copied()).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transposed(&self) -> PairedShape {
        PairedShape {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
        }
    }

    /// Flat offsets (into interleaved storage) contributed by each row
    /// multi-index and each column multi-index, both listed in ivec order.
    /// The entry `A[j,i]` lives at `row_off[ivec(j)] + col_off[ivec(i)]`.
    pub(crate) fn offsets(&self) -> (Vec<usize>, Vec<usize>) {
        let strides = Shape::new(self.interleaved()).expect("validated").strides();
        let row_strides: Vec<usize> = (0..self.order()).map(|n| strides[2 * n]).collect();
        let col_strides: Vec<usize> = (0..self.order()).map(|n| strides[2 * n + 1]).collect();
        (
            mode_offsets(&self.rows, &row_strides),
            mode_offsets(&self.cols, &col_strides),
        )
    }
}

fn mode_offsets(dims: &[usize], strides: &[usize]) -> Vec<usize> {
    let n: usize = dims.iter().product();
    let mut out = Vec::with_capacity(n);
    let mut idx = vec![0usize; dims.len()];
    for _ in 0..n {
        out.push(idx.iter().zip(strides).map(|(j, s)| j * s).sum());
        increment(&mut idx, dims);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvenPairedTensor {
    pshape: PairedShape,
    data: DenseTensor,
}

impl EvenPairedTensor {
    pub fn new(pshape: PairedShape, data: DenseTensor) -> Result<Self> {
        if data.dims() != pshape.interleaved().as_slice() {
            return Err(Error::domain(format!(
                "tensor extents {:?} do not match paired shape {:?}",
                data.dims(),
                pshape.pairs()
            )));
        }
        Ok(EvenPairedTensor { pshape, data })
    }

    /// Interprets an even-order tensor as paired `(J1,I1,...,JN,IN)`.
    pub fn from_interleaved(data: DenseTensor) -> Result<Self> {
        let pshape = PairedShape::from_interleaved(data.dims())?;
        Ok(EvenPairedTensor { pshape, data })
    }

    pub fn zeros(pshape: PairedShape) -> Self {
        let data = DenseTensor::zeros(Shape::new(pshape.interleaved()).expect("validated"));
        EvenPairedTensor { pshape, data }
    }

    pub fn pshape(&self) -> &PairedShape {
        &self.pshape
    }

    pub fn order(&self) -> usize {
        self.pshape.order()
    }

    pub fn as_dense(&self) -> &DenseTensor {
        &self.data
    }

    pub fn into_dense(self) -> DenseTensor {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.pshape.is_square()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.frobenius_norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        EvenPairedTensor {
            pshape: self.pshape.clone(),
            data: self.data.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(EvenPairedTensor {
            pshape: self.pshape.clone(),
            data: self.data.add(&other.data)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(EvenPairedTensor {
            pshape: self.pshape.clone(),
            data: self.data.sub(&other.data)?,
        })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.pshape != other.pshape {
            return Err(Error::domain(format!(
                "paired shapes {:?} and {:?} differ",
                self.pshape.pairs(),
                other.pshape.pairs()
            )));
        }
        Ok(())
    }

    /// `A^k` under the Einstein product (`A^0` is the U-identity).
    pub fn power(&self, k: usize) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::domain("power of a non-square paired tensor"));
        }
        let mut acc = u_identity(&self.pshape.row_shape());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = einstein_compose(&acc, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = einstein_compose(&base, &base)?;
            }
        }
        Ok(acc)
    }
}

/// `A * X`, contracting the second index of every pair of `A` with `X`.
pub fn einstein_apply(a: &EvenPairedTensor, x: &DenseTensor) -> Result<DenseTensor> {
    if x.dims() != a.pshape.cols() {
        return Err(Error::domain(format!(
            "tensor of shape {:?} against column shape {:?}",
            x.dims(),
            a.pshape.cols()
        )));
    }
    let (ro, co) = a.pshape.offsets();
    let ad = a.data.data();
    let xd = x.data();
    let out: Vec<f64> = ro
        .iter()
        .map(|&r| co.iter().zip(xd).map(|(&c, &xv)| ad[r + c] * xv).sum())
        .collect();
    Ok(DenseTensor::from_raw(a.pshape.row_shape(), out))
}

/// `A * B` for `A ∈ R^{J×K}` and `B ∈ R^{K×I}` in paired form.
pub fn einstein_compose(a: &EvenPairedTensor, b: &EvenPairedTensor) -> Result<EvenPairedTensor> {
    if a.pshape.cols() != b.pshape.rows() {
        return Err(Error::domain(format!(
            "column shape {:?} does not match row shape {:?}",
            a.pshape.cols(),
            b.pshape.rows()
        )));
    }
    let pshape = PairedShape::from_row_col(a.pshape.rows(), b.pshape.cols())?;
    let (ra, ca) = a.pshape.offsets();
    let (rb, cb) = b.pshape.offsets();
    let (rc, cc) = pshape.offsets();
    let ad = a.data.data();
    let bd = b.data.data();
    let mut out = vec![0.0; ra.len() * cb.len()];
    let mut col = vec![0.0; ra.len()];
    for (q, &cbq) in cb.iter().enumerate() {
        col.iter_mut().for_each(|v| *v = 0.0);
        for (k, &cak) in ca.iter().enumerate() {
            let bkq = bd[rb[k] + cbq];
            if bkq == 0.0 {
                continue;
            }
            for (acc, &rap) in col.iter_mut().zip(&ra) {
                *acc += ad[rap + cak] * bkq;
            }
        }
        for (p, &v) in col.iter().enumerate() {
            out[rc[p] + cc[q]] = v;
        }
    }
    let data = DenseTensor::from_raw(Shape::new(pshape.interleaved())?, out);
    Ok(EvenPairedTensor { pshape, data })
}

/// The unfolding `φ(A)` (`Π_J × Π_I`).
pub fn phi(a: &EvenPairedTensor) -> DMatrix<f64> {
    let (ro, co) = a.pshape.offsets();
    let d = a.data.data();
    DMatrix::from_fn(ro.len(), co.len(), |p, q| d[ro[p] + co[q]])
}

pub fn phi_inverse(m: &DMatrix<f64>, pshape: &PairedShape) -> Result<EvenPairedTensor> {
    if m.nrows() != pshape.row_count() || m.ncols() != pshape.col_count() {
        return Err(Error::domain(format!(
            "{}x{} matrix for paired shape {:?}",
            m.nrows(),
            m.ncols(),
            pshape.pairs()
        )));
    }
    let (ro, co) = pshape.offsets();
    let mut out = vec![0.0; ro.len() * co.len()];
    for (q, &c) in co.iter().enumerate() {
        for (p, &r) in ro.iter().enumerate() {
            out[r + c] = m[(p, q)];
        }
    }
    let data = DenseTensor::from_raw(Shape::new(pshape.interleaved())?, out);
    Ok(EvenPairedTensor {
        pshape: pshape.clone(),
        data,
    })
}

pub fn u_transpose(a: &EvenPairedTensor) -> EvenPairedTensor {
    let n = a.order();
    let image: Vec<usize> = (0..n).flat_map(|k| [2 * k + 1, 2 * k]).collect();
    let perm = Permutation::new(image).expect("pair swap");
    let data = tensor::s_transpose(&a.data, &perm).expect("order matches");
    EvenPairedTensor {
        pshape: a.pshape.transposed(),
        data,
    }
}

pub fn is_weakly_symmetric(a: &EvenPairedTensor, tol: f64) -> bool {
    a.is_square()
        && a.sub(&u_transpose(a))
            .map(|d| d.frobenius_norm() <= tol * a.frobenius_norm().max(f64::MIN_POSITIVE))
            .unwrap_or(false)
}

pub fn u_identity(shape: &Shape) -> EvenPairedTensor {
    u_diagonal(&DenseTensor::from_raw(shape.clone(), vec![1.0; shape.numel()]))
}

/// U-diagonal tensor with `D[j1,j1,...,jN,jN] = diag[j1,...,jN]`.
pub fn u_diagonal(diag: &DenseTensor) -> EvenPairedTensor {
    let pshape = PairedShape::square(diag.dims()).expect("valid shape");
    let (ro, co) = pshape.offsets();
    let mut out = vec![0.0; ro.len() * co.len()];
    for (p, &v) in diag.data().iter().enumerate() {
        out[ro[p] + co[p]] = v;
    }
    let data = DenseTensor::from_raw(Shape::new(pshape.interleaved()).expect("valid"), out);
    EvenPairedTensor { pshape, data }
}

fn require_square(a: &EvenPairedTensor) -> Result<()> {
    if !a.is_square() {
        return Err(Error::domain(format!(
            "paired shape {:?} is not square",
            a.pshape.pairs()
        )));
    }
    Ok(())
}

/// U-inverse. Fails when `φ(A)` is numerically rank deficient under the
/// default rank tolerance.
pub fn u_inverse(a: &EvenPairedTensor) -> Result<EvenPairedTensor> {
    require_square(a)?;
    let m = phi(a);
    let n = m.nrows();
    let s = linalg::singular_values(&m);
    if linalg::numerical_rank(&s, n, n, DEFAULT_RANK_TOL) < n {
        let cond = match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        };
        return Err(Error::Singular { condition: cond });
    }
    let inv = m
        .try_inverse()
        .ok_or(Error::Singular { condition: f64::INFINITY })?;
    phi_inverse(&inv, &a.pshape)
}

pub fn unfolding_rank(a: &EvenPairedTensor, tol: f64) -> usize {
    linalg::matrix_rank(&phi(a), tol)
}

pub fn unfolding_det(a: &EvenPairedTensor) -> Result<f64> {
    require_square(a)?;
    Ok(phi(a).determinant())
}

/// Symmetric part of `φ(A)` has smallest eigenvalue above
/// `tol * max|eigenvalue|`. The quadratic form `Xᵀ*A*X` only sees the
/// symmetric part, so this decides U-positive definiteness exactly; `tol`
/// is relative to the spectrum's scale.
pub fn is_u_positive_definite(a: &EvenPairedTensor, tol: f64) -> Result<bool> {
    require_square(a)?;
    let m = phi(a);
    let sym = (&m + m.transpose()) * 0.5;
    let ev = linalg::symmetric_eigenvalues(&sym);
    let scale = ev.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if scale == 0.0 {
        return Ok(false);
    }
    let min = ev.iter().fold(f64::INFINITY, |s, &v| s.min(v));
    Ok(min > tol * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeOutcome {
    /// Trial index whose rank-one quadratic form was `<= 0`.
    Falsified { trial: usize },
    NotFalsified,
}

/// Evaluates `Xᵀ*A*X` on random rank-one tensors `X = x1∘···∘xN`. A
/// one-sided test of M-positive definiteness.
pub fn m_positive_probe(a: &EvenPairedTensor, trials: usize, seed: u64) -> Result<ProbeOutcome> {
    require_square(a)?;
    let mut g = random::rng(seed);
    for trial in 0..trials {
        let x = a
            .pshape
            .rows()
            .iter()
            .map(|&d| random::randn_tensor(&mut g, &[d]))
            .reduce(|acc, v| tensor::outer(&acc, &v))
            .expect("order >= 1");
        let ax = einstein_apply(a, &x)?;
        if tensor::inner(&x, &ax)? <= 0.0 {
            return Ok(ProbeOutcome::Falsified { trial });
        }
    }
    Ok(ProbeOutcome::NotFalsified)
}

/// A U-eigenvalue with its unit-norm eigentensor (split into real and
/// imaginary parts).
#[derive(Debug, Clone, PartialEq)]
pub struct UEigenPair {
    pub value: C64,
    pub re: DenseTensor,
    pub im: DenseTensor,
}

impl UEigenPair {
    /// `‖A*X − λX‖` over the complex eigentensor.
    pub fn residual(&self, a: &EvenPairedTensor) -> Result<f64> {
        let ar = einstein_apply(a, &self.re)?;
        let ai = einstein_apply(a, &self.im)?;
        let (l, r, i) = (self.value, self.re.data(), self.im.data());
        let mut s = 0.0;
        for k in 0..r.len() {
            let re = ar.data()[k] - (l.re * r[k] - l.im * i[k]);
            let im = ai.data()[k] - (l.re * i[k] + l.im * r[k]);
            s += re * re + im * im;
        }
        Ok(s.sqrt())
    }
}

/// Orders eigenvalues by descending modulus; moduli equal to 1e-12
/// (relative) tie and are ordered by descending real, then imaginary part.
pub(crate) fn sort_eigenvalues(vals: &mut [C64]) {
    vals.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let mut start = 0;
    while start < vals.len() {
        let lead = vals[start].norm();
        let mut end = start + 1;
        while end < vals.len() && (lead - vals[end].norm()) <= 1e-12 * lead.max(1e-300) {
            end += 1;
        }
        vals[start..end].sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        start = end;
    }
}

/// All U-eigenvalues, ordered as in [`u_eigen`].
pub fn u_eigenvalues(a: &EvenPairedTensor) -> Result<Vec<C64>> {
    require_square(a)?;
    let mut vals = linalg::eigenvalues(&phi(a))?;
    sort_eigenvalues(&mut vals);
    Ok(vals)
}

/// U-eigenpairs of a square paired tensor. Eigenvalues are those of `φ(A)`; eigentensors span the numerical null space of
/// `φ(A) − λI` for each eigenvalue cluster. A defective cluster repeats its
/// best eigentensor.
pub fn u_eigen(a: &EvenPairedTensor) -> Result<Vec<UEigenPair>> {
    let vals = u_eigenvalues(a)?;
    let m = phi(a);
    let n = m.nrows();
    let scale = m.norm().max(1.0);
    let cm = linalg::to_complex(&m);
    let shape = a.pshape.row_shape();

    let mut done = vec![false; vals.len()];
    let mut vectors: Vec<Option<DVector<C64>>> = vec![None; vals.len()];
    for i in 0..vals.len() {
        if done[i] {
            continue;
        }
        let members: Vec<usize> = (i..vals.len())
            .filter(|&k| !done[k] && (vals[k] - vals[i]).norm() <= 1e-6 * scale)
            .collect();
        let center = members.iter().map(|&k| vals[k]).sum::<C64>() / members.len() as f64;
        let shifted = &cm - CMatrix::identity(n, n) * center;
        let (sv, v) = linalg::complex_svd_right(&shifted);
        // smallest singular values last
        for (slot, &k) in members.iter().enumerate() {
            let last = sv.len() - 1;
            let pick = if slot <= last && sv[last - slot] <= 1e-6 * scale {
                last - slot
            } else {
                last
            };
            let v: DVector<C64> = v.column(pick).into_owned();
            vectors[k] = Some(v);
            done[k] = true;
        }
    }

    vals.iter()
        .zip(vectors)
        .map(|(&value, v)| {
            let v = v.expect("assigned");
            let v = &v / C64::new(v.norm(), 0.0);
            // rotate so the largest entry is real positive
            let big = v.iter().fold(C64::new(0.0, 0.0), |b, z| if z.norm() > b.norm() { *z } else { b });
            let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { C64::new(1.0, 0.0) };
            let v = v * phase;
            let re = DenseTensor::from_raw(shape.clone(), v.iter().map(|z| z.re).collect());
            let im = DenseTensor::from_raw(shape.clone(), v.iter().map(|z| z.im).collect());
            Ok(UEigenPair { value, re, im })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BicgStatus {
    Converged,
    Breakdown,
    MaxIter,
}

struct BicgOutcome {
    x: DenseTensor,
    residual: f64,
    iterations: usize,
    status: BicgStatus,
}

fn axpy(y: &mut DenseTensor, alpha: f64, x: &DenseTensor) {
    for (a, b) in y.data_mut().iter_mut().zip(x.data()) {
        *a += alpha * b;
    }
}

fn dot(x: &DenseTensor, y: &DenseTensor) -> f64 {
    x.data().iter().zip(y.data()).map(|(a, b)| a * b).sum()
}

/// Biconjugate gradients on `(A − shift·I) X = rhs`, touching `A` only
/// through `A*·` and `Aᵀ*·`. `tilt` mixes a fixed deterministic vector into
/// the shadow residual; with `tilt = 0` the shadow starts equal to `rhs`.
fn bicg(
    a: &EvenPairedTensor,
    at: &EvenPairedTensor,
    shift: f64,
    rhs: &DenseTensor,
    tol: f64,
    max_iter: usize,
    tilt: f64,
) -> Result<BicgOutcome> {
    let apply = |op: &EvenPairedTensor, v: &DenseTensor| -> Result<DenseTensor> {
        let mut y = einstein_apply(op, v)?;
        if shift != 0.0 {
            axpy(&mut y, -shift, v);
        }
        Ok(y)
    };
    let bnorm = rhs.frobenius_norm();
    let mut x = DenseTensor::zeros(rhs.shape().clone());
    if bnorm == 0.0 {
        return Ok(BicgOutcome { x, residual: 0.0, iterations: 0, status: BicgStatus::Converged });
    }
    let mut r = rhs.clone();
    let mut rs = rhs.clone();
    if tilt != 0.0 {
        let w: Vec<f64> = (0..rs.numel()).map(|k| ((k + 1) as f64 * 0.618_033_988_75).sin()).collect();
        let wn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (v, wk) in rs.data_mut().iter_mut().zip(&w) {
            *v += tilt * bnorm * wk / wn;
        }
    }
    let mut p = r.clone();
    let mut ps = rs.clone();
    let mut rho = dot(&rs, &r);
    let mut res = bnorm;
    for it in 1..=max_iter {
        let q = apply(a, &p)?;
        let qs = apply(at, &ps)?;
        let denom = dot(&ps, &q);
        if denom.abs() <= f64::EPSILON * f64::EPSILON * ps.frobenius_norm() * q.frobenius_norm() || !denom.is_finite() {
            return Ok(BicgOutcome { x, residual: res, iterations: it, status: BicgStatus::Breakdown });
        }
        let alpha = rho / denom;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &q);
        axpy(&mut rs, -alpha, &qs);
        res = r.frobenius_norm();
        if res <= tol * bnorm {
            // confirm against the true residual; recurrences drift
            let true_r = rhs.sub(&apply(a, &x)?)?;
            res = true_r.frobenius_norm();
            if res <= tol * bnorm {
                return Ok(BicgOutcome { x, residual: res, iterations: it, status: BicgStatus::Converged });
            }
            r = true_r;
        }
        let rho_new = dot(&rs, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return Ok(BicgOutcome { x, residual: res, iterations: it, status: BicgStatus::Breakdown });
        }
        let beta = rho_new / rho;
        rho = rho_new;
        for (pv, rv) in p.data_mut().iter_mut().zip(r.data()) {
            *pv = rv + beta * *pv;
        }
        for (pv, rv) in ps.data_mut().iter_mut().zip(rs.data()) {
            *pv = rv + beta * *pv;
        }
    }
    Ok(BicgOutcome { x, residual: res, iterations: max_iter, status: BicgStatus::MaxIter })
}

/// Matrix-free solve of `A * X = rhs` (higher-order biconjugate gradients).
pub fn hobg_solve(a: &EvenPairedTensor, rhs: &DenseTensor, tol: f64, max_iter: usize) -> Result<DenseTensor> {
    require_square(a)?;
    if rhs.dims() != a.pshape.rows() {
        return Err(Error::domain(format!(
            "right-hand side of shape {:?} against {:?}",
            rhs.dims(),
            a.pshape.rows()
        )));
    }
    let at = u_transpose(a);
    let out = bicg(a, &at, 0.0, rhs, tol, max_iter, 0.0)?;
    match out.status {
        BicgStatus::Converged => Ok(out.x),
        BicgStatus::Breakdown => Err(Error::Breakdown {
            method: "HOBG",
            iteration: out.iterations,
            residual: out.residual / rhs.frobenius_norm(),
        }),
        BicgStatus::MaxIter => Err(Error::NonConvergence {
            method: "HOBG",
            iterations: out.iterations,
            residual: out.residual / rhs.frobenius_norm(),
        }),
    }
}

#[derive(Debug, Clone)]
pub struct HorqiResult {
    pub pair: UEigenPair,
    pub iterations: usize,
    pub residual: f64,
}

/// Higher-order Rayleigh quotient iteration for a real U-eigenpair.
///
/// Each step solves `(A − λ I) * Y = X` with the HOBG iteration and
/// renormalizes. The Rayleigh shift makes `Xᵀ(A − λI)X` vanish, so the
/// inner solve starts its shadow residual away from `X`. When the shifted
/// solve still breaks down (the shift is an exact eigenvalue) the shift moves
/// by `1e-10 (1 + |λ|)` and the solve is retried.
pub fn horqi(a: &EvenPairedTensor, x0: &DenseTensor, tol: f64, max_iter: usize) -> Result<HorqiResult> {
    require_square(a)?;
    if x0.dims() != a.pshape.rows() {
        return Err(Error::domain("start tensor does not match the row shape"));
    }
    let n0 = x0.frobenius_norm();
    if n0 == 0.0 {
        return Err(Error::domain("start tensor is zero"));
    }
    let at = u_transpose(a);
    let inner_iters = 4 * a.pshape.row_count() + 20;
    let mut x = x0.scale(1.0 / n0);
    let mut ax = einstein_apply(a, &x)?;
    let mut lambda = dot(&x, &ax);
    let residual = |x: &DenseTensor, ax: &DenseTensor, l: f64| -> f64 {
        ax.data().iter().zip(x.data()).map(|(a, b)| (a - l * b).powi(2)).sum::<f64>().sqrt()
    };
    let mut res = residual(&x, &ax, lambda);
    for k in 1..=max_iter {
        if res <= tol {
            return Ok(finish(x, lambda, k - 1, res));
        }
        let mut shift = lambda;
        let mut solved = None;
        for _attempt in 0..3 {
            let out = bicg(a, &at, shift, &x, 1e-12, inner_iters, 0.5)?;
            let ny = out.x.frobenius_norm();
            if out.status != BicgStatus::Breakdown && ny > 0.0 && ny.is_finite() {
                solved = Some(out.x);
                break;
            }
            if out.status == BicgStatus::Breakdown && ny > 0.0 && ny.is_finite() && out.iterations > 1 {
                solved = Some(out.x);
                break;
            }
            shift += 1e-10 * (1.0 + shift.abs());
        }
        let Some(y) = solved else {
            if res <= tol {
                return Ok(finish(x, lambda, k, res));
            }
            return Err(Error::Breakdown { method: "HORQI", iteration: k, residual: res });
        };
        x = y.scale(1.0 / y.frobenius_norm());
        ax = einstein_apply(a, &x)?;
        lambda = dot(&x, &ax);
        res = residual(&x, &ax, lambda);
        if res <= tol {
            return Ok(finish(x, lambda, k, res));
        }
    }
    Err(Error::NonConvergence { method: "HORQI", iterations: max_iter, residual: res })
}

fn finish(x: DenseTensor, lambda: f64, iterations: usize, residual: f64) -> HorqiResult {
    let im = DenseTensor::zeros(x.shape().clone());
    HorqiResult {
        pair: UEigenPair { value: C64::new(lambda, 0.0), re: x, im },
        iterations,
        residual,
    }
}

/// Random paired tensor, entries uniform in [-1, 1].
pub fn rand_paired(rng: &mut impl Rng, pshape: &PairedShape) -> EvenPairedTensor {
    let data = random::rand_tensor(rng, &pshape.interleaved());
    EvenPairedTensor { pshape: pshape.clone(), data }
}

/// Random paired tensor with standard normal entries.
pub fn randn_paired(rng: &mut impl Rng, pshape: &PairedShape) -> EvenPairedTensor {
    let data = random::randn_tensor(rng, &pshape.interleaved());
    EvenPairedTensor { pshape: pshape.clone(), data }
}

/// Interleaved outer product of matrices: the paired tensor whose Einstein
/// action is the Tucker product with `mats`.
pub fn paired_outer(mats: &[DMatrix<f64>]) -> Result<EvenPairedTensor> {
    let first = mats.first().ok_or_else(|| Error::domain("no matrices"))?;
    let mut acc = DenseTensor::from_matrix(first);
    for m in &mats[1..] {
        acc = tensor::outer(&acc, &DenseTensor::from_matrix(m));
    }
    EvenPairedTensor::from_interleaved(acc)
}
