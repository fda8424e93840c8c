//! Dense real tensors stored in `ivec` order (first index fastest).
//!
//! Multi-indices passed to [`ivec`] and returned by [`ivec_inverse`] are
//! 1-based, matching the usual vectorization formula
//! `ivec(j) = j1 + sum_k (jk - 1) * prod_{l<k} Jl`. Everything else in this
//! crate (element accessors, mode ids) is 0-based.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Ordered list of tensor extents. The empty shape is a scalar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.contains(&0) {
            return Err(Error::domain(format!("zero extent in shape {dims:?}")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::domain(format!("element count of {dims:?} overflows")))?;
        Ok(Shape(dims))
    }

    pub fn scalar() -> Self {
        Shape(Vec::new())
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    /// Product of all extents (1 for a scalar).
    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    /// Column-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.0.len());
        let mut acc = 1;
        for &d in &self.0 {
            s.push(acc);
            acc *= d;
        }
        s
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.0
    }
}

/// Bijection on mode positions. `image[k]` is the input mode placed at output
/// position `k` (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(image: impl Into<Vec<usize>>) -> Result<Self> {
        let image = image.into();
        let mut seen = vec![false; image.len()];
        for &m in &image {
            if m >= image.len() || seen[m] {
                return Err(Error::domain(format!("{image:?} is not a permutation")));
            }
            seen[m] = true;
        }
        Ok(Permutation(image))
    }

    /// Builds from a 1-based image, e.g. `(2,3,1)`.
    pub fn from_one_based(image: &[usize]) -> Result<Self> {
        if image.contains(&0) {
            return Err(Error::domain("1-based permutation contains 0"));
        }
        Self::new(image.iter().map(|m| m - 1).collect::<Vec<_>>())
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (k, &m) in self.0.iter().enumerate() {
            inv[m] = k;
        }
        Permutation(inv)
    }
}

/// 1-based linear position of a 1-based multi-index.
pub fn ivec(idx: &[usize], shape: &Shape) -> Result<usize> {
    if idx.len() != shape.order() {
        return Err(Error::domain(format!(
            "index of length {} for order-{} shape",
            idx.len(),
            shape.order()
        )));
    }
    let mut p = 0;
    let mut stride = 1;
    for (&j, &d) in idx.iter().zip(shape.dims()) {
        if j == 0 || j > d {
            return Err(Error::domain(format!("index {idx:?} outside shape {:?}", shape.dims())));
        }
        p += (j - 1) * stride;
        stride *= d;
    }
    Ok(p + 1)
}

/// Inverse of [`ivec`]: 1-based position to 1-based multi-index.
pub fn ivec_inverse(p: usize, shape: &Shape) -> Result<Vec<usize>> {
    if p == 0 || p > shape.numel() {
        return Err(Error::domain(format!("position {p} outside 1..={}", shape.numel())));
    }
    let mut rest = p - 1;
    Ok(shape
        .dims()
        .iter()
        .map(|&d| {
            let j = rest % d;
            rest /= d;
            j + 1
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: Shape) -> Self {
        let n = shape.numel();
        DenseTensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn scalar(v: f64) -> Self {
        DenseTensor {
            shape: Shape::scalar(),
            data: vec![v],
        }
    }

    /// Wraps `data` (ivec order). Rejects length mismatches and non-finite entries.
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(Error::domain(format!(
                "{} entries for shape {:?} ({} expected)",
                data.len(),
                shape.dims(),
                shape.numel()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite entry at flat position {pos}")));
        }
        Ok(DenseTensor { shape, data })
    }

    /// Same as [`from_vec`](Self::from_vec) without the finiteness scan.
    pub(crate) fn from_raw(shape: Shape, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.numel(), data.len());
        DenseTensor { shape, data }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let n = shape.numel();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.order()];
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, shape.dims());
        }
        DenseTensor { shape, data }
    }

    pub fn vector(v: &[f64]) -> Self {
        DenseTensor {
            shape: Shape(vec![v.len().max(1)]),
            data: if v.is_empty() { vec![0.0] } else { v.to_vec() },
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        DenseTensor {
            shape: Shape(vec![m.nrows(), m.ncols()]),
            data: m.as_slice().to_vec(),
        }
    }

    /// Order-2 tensor as a matrix. Errors for other orders.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        match self.shape.dims() {
            [r, c] => Ok(DMatrix::from_column_slice(*r, *c, &self.data)),
            d => Err(Error::domain(format!("order-{} tensor is not a matrix", d.len()))),
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Flat offset of a 0-based multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        let mut p = 0;
        let mut stride = 1;
        for (&j, &d) in idx.iter().zip(self.dims()) {
            debug_assert!(j < d);
            p += j * stride;
            stride *= d;
        }
        p
    }

    /// Entry at a 0-based multi-index.
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let p = self.offset(idx);
        self.data[p] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &DenseTensor, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::domain(format!(
                "shape {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Odometer step over a column-major index box. Returns false on wrap-around.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) -> bool {
    for (j, &d) in idx.iter_mut().zip(dims) {
        *j += 1;
        if *j < d {
            return true;
        }
        *j = 0;
    }
    false
}

/// `X^S` with `X^S[j_{S(1)}, ..., j_{S(N)}] = X[j_1, ..., j_N]`.
pub fn s_transpose(x: &DenseTensor, s: &Permutation) -> Result<DenseTensor> {
    if s.len() != x.order() {
        return Err(Error::domain(format!(
            "permutation of length {} for order-{} tensor",
            s.len(),
            x.order()
        )));
    }
    let in_strides = x.shape.strides();
    let out_dims: Vec<usize> = s.image().iter().map(|&m| x.dims()[m]).collect();
    let steps: Vec<usize> = s.image().iter().map(|&m| in_strides[m]).collect();
    let n = x.numel();
    let mut data = Vec::with_capacity(n);
    let mut idx = vec![0usize; out_dims.len()];
    let mut src = 0usize;
    for _ in 0..n {
        data.push(x.data[src]);
        // advance the output odometer and keep `src` in sync
        for k in 0..idx.len() {
            idx[k] += 1;
            src += steps[k];
            if idx[k] < out_dims[k] {
                break;
            }
            src -= steps[k] * out_dims[k];
            idx[k] = 0;
        }
    }
    Ok(DenseTensor::from_raw(Shape(out_dims), data))
}

/// The rc-unfolding: modes in `row_modes` index rows, `col_modes` columns,
/// each group vectorized in the listed order.
pub fn rc_unfold(x: &DenseTensor, row_modes: &[usize], col_modes: &[usize]) -> Result<DenseTensor> {
    if row_modes.is_empty() || col_modes.is_empty() {
        return Err(Error::domain("rc-unfolding needs nonempty row and column groups"));
    }
    let image: Vec<usize> = row_modes.iter().chain(col_modes).copied().collect();
    let perm = Permutation::new(image)
        .map_err(|_| Error::domain("row and column modes must partition the tensor modes"))?;
    if perm.len() != x.order() {
        return Err(Error::domain("row and column modes must partition the tensor modes"));
    }
    let t = s_transpose(x, &perm)?;
    let rows: usize = row_modes.iter().map(|&m| x.dims()[m]).product();
    let cols: usize = col_modes.iter().map(|&m| x.dims()[m]).product();
    Ok(DenseTensor::from_raw(Shape(vec![rows, cols]), t.data))
}

/// n-mode matricization `X_(n)` (0-based mode), columns enumerating the
/// remaining modes in their original order.
pub fn n_mode_matricize(x: &DenseTensor, n: usize) -> Result<DMatrix<f64>> {
    if n >= x.order() {
        return Err(Error::domain(format!("mode {n} of order-{} tensor", x.order())));
    }
    let rest: Vec<usize> = (0..x.order()).filter(|&m| m != n).collect();
    if rest.is_empty() {
        return Ok(DMatrix::from_column_slice(x.numel(), 1, x.data()));
    }
    rc_unfold(x, &[n], &rest)?.to_matrix()
}

pub fn outer(x: &DenseTensor, y: &DenseTensor) -> DenseTensor {
    let mut dims = x.dims().to_vec();
    dims.extend_from_slice(y.dims());
    let mut data = Vec::with_capacity(x.numel() * y.numel());
    for &b in &y.data {
        data.extend(x.data.iter().map(|&a| a * b));
    }
    DenseTensor::from_raw(Shape(dims), data)
}

pub fn inner(x: &DenseTensor, y: &DenseTensor) -> Result<f64> {
    if x.shape != y.shape {
        return Err(Error::domain(format!("inner product of {:?} and {:?}", x.dims(), y.dims())));
    }
    Ok(x.data.iter().zip(&y.data).map(|(a, b)| a * b).sum())
}

pub fn frobenius_norm(x: &DenseTensor) -> f64 {
    x.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `X ×_n A`: the mode-`n` extent becomes `a.nrows()`.
pub fn n_mode_product(x: &DenseTensor, a: &DMatrix<f64>, n: usize) -> Result<DenseTensor> {
    if n >= x.order() {
        return Err(Error::domain(format!("mode {n} of order-{} tensor", x.order())));
    }
    let jn = x.dims()[n];
    if a.ncols() != jn {
        return Err(Error::domain(format!(
            "matrix with {} columns against mode extent {jn}",
            a.ncols()
        )));
    }
    let left: usize = x.dims()[..n].iter().product();
    let right: usize = x.dims()[n + 1..].iter().product();
    let rows = a.nrows();
    let mut out = vec![0.0; left * rows * right];
    for r in 0..right {
        let src = &x.data[r * left * jn..(r + 1) * left * jn];
        let dst = &mut out[r * left * rows..(r + 1) * left * rows];
        for j in 0..jn {
            let col = &src[j * left..(j + 1) * left];
            for i in 0..rows {
                let aij = a[(i, j)];
                if aij == 0.0 {
                    continue;
                }
                let d = &mut dst[i * left..(i + 1) * left];
                for (dv, &sv) in d.iter_mut().zip(col) {
                    *dv += aij * sv;
                }
            }
        }
    }
    let mut dims = x.dims().to_vec();
    dims[n] = rows;
    Ok(DenseTensor::from_raw(Shape(dims), out))
}

/// `X × {A_1, ..., A_N}`.
pub fn tucker_product(x: &DenseTensor, mats: &[DMatrix<f64>]) -> Result<DenseTensor> {
    if mats.len() != x.order() {
        return Err(Error::domain(format!(
            "{} matrices for order-{} tensor",
            mats.len(),
            x.order()
        )));
    }
    mats.iter()
        .enumerate()
        .try_fold(x.clone(), |acc, (n, m)| n_mode_product(&acc, m, n))
}

pub fn reshape(x: &DenseTensor, new_shape: Shape) -> Result<DenseTensor> {
    if new_shape.numel() != x.numel() {
        return Err(Error::domain(format!(
            "cannot reshape {:?} into {:?}",
            x.dims(),
            new_shape.dims()
        )));
    }
    Ok(DenseTensor::from_raw(new_shape, x.data.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{rand_tensor, rng};

    fn shp(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn ivec_examples() {
        let s = shp(&[3, 2]);
        assert_eq!(ivec(&[1, 1], &s).unwrap(), 1);
        assert_eq!(ivec(&[3, 2], &s).unwrap(), 6);
        assert_eq!(ivec(&[2, 2], &s).unwrap(), 5);
        assert!(ivec(&[4, 1], &s).is_err());
        assert!(ivec(&[0, 1], &s).is_err());
        // enumeration oracle: j1 runs fastest
        let mut pos = 0;
        for j2 in 1..=2 {
            for j1 in 1..=3 {
                pos += 1;
                assert_eq!(ivec(&[j1, j2], &s).unwrap(), pos);
            }
        }
    }

    #[test]
    fn ivec_inverse_examples() {
        let s = shp(&[3, 2]);
        assert_eq!(ivec_inverse(1, &s).unwrap(), vec![1, 1]);
        assert_eq!(ivec_inverse(6, &s).unwrap(), vec![3, 2]);
        assert_eq!(ivec_inverse(5, &s).unwrap(), vec![2, 2]);
        assert!(ivec_inverse(0, &s).is_err());
        assert!(ivec_inverse(7, &s).is_err());
    }

    #[test]
    fn ivec_bijection_exhaustive() {
        for dims in [vec![1], vec![7], vec![3, 2], vec![2, 3, 4], vec![5, 1, 4, 3], vec![10, 10, 10, 10]] {
            let s = shp(&dims);
            for p in 1..=s.numel() {
                let idx = ivec_inverse(p, &s).unwrap();
                assert_eq!(ivec(&idx, &s).unwrap(), p);
            }
        }
    }

    #[test]
    fn zero_extent_rejected() {
        assert!(Shape::new(vec![2, 0]).is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(DenseTensor::from_vec(shp(&[2]), vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn s_transpose_examples() {
        let mut g = rng(1);
        let x = rand_tensor(&mut g, &[2, 3, 4]);
        let id = Permutation::identity(3);
        assert_eq!(s_transpose(&x, &id).unwrap(), x);

        let m = rand_tensor(&mut g, &[3, 5]);
        let t = s_transpose(&m, &Permutation::new(vec![1, 0]).unwrap()).unwrap();
        assert_eq!(t.to_matrix().unwrap(), m.to_matrix().unwrap().transpose());

        // triple-loop oracle for S = (2,3,1)
        let s = Permutation::from_one_based(&[2, 3, 1]).unwrap();
        let t = s_transpose(&x, &s).unwrap();
        assert_eq!(t.dims(), &[3, 4, 2]);
        for j1 in 0..2 {
            for j2 in 0..3 {
                for j3 in 0..4 {
                    assert_eq!(t.get(&[j2, j3, j1]), x.get(&[j1, j2, j3]));
                }
            }
        }
        assert_eq!(t.frobenius_norm(), x.frobenius_norm());
        assert!(s_transpose(&x, &Permutation::identity(2)).is_err());
    }

    #[test]
    fn rc_unfold_examples() {
        let mut g = rng(2);
        let m = rand_tensor(&mut g, &[3, 4]);
        assert_eq!(rc_unfold(&m, &[0], &[1]).unwrap(), m);

        let x = rand_tensor(&mut g, &[2, 3, 4]);
        let u = rc_unfold(&x, &[1], &[0, 2]).unwrap().to_matrix().unwrap();
        assert_eq!((u.nrows(), u.ncols()), (3, 8));
        for j1 in 0..2 {
            for j2 in 0..3 {
                for j3 in 0..4 {
                    assert_eq!(u[(j2, j1 + 2 * j3)], x.get(&[j1, j2, j3]));
                }
            }
        }
        let v = rc_unfold(&x, &[0, 1], &[2]).unwrap();
        assert_eq!(v.dims(), &[6, 4]);
        assert_eq!(v.frobenius_norm(), x.frobenius_norm());

        assert!(rc_unfold(&x, &[], &[0, 1, 2]).is_err());
        assert!(rc_unfold(&x, &[0, 0], &[2]).is_err());
        assert!(rc_unfold(&x, &[0], &[2]).is_err());
    }

    #[test]
    fn matricize_examples() {
        let mut g = rng(3);
        let m = rand_tensor(&mut g, &[3, 4]);
        let mm = m.to_matrix().unwrap();
        assert_eq!(n_mode_matricize(&m, 0).unwrap(), mm);
        assert_eq!(n_mode_matricize(&m, 1).unwrap(), mm.transpose());
        let x = rand_tensor(&mut g, &[2, 3, 4]);
        let x2 = n_mode_matricize(&x, 1).unwrap();
        assert_eq!((x2.nrows(), x2.ncols()), (3, 8));
        for j1 in 0..2 {
            for j3 in 0..4 {
                for j2 in 0..3 {
                    assert_eq!(x2[(j2, ivec(&[j1 + 1, j3 + 1], &shp(&[2, 4])).unwrap() - 1)], x.get(&[j1, j2, j3]));
                }
            }
        }
        assert!(n_mode_matricize(&x, 3).is_err());
    }

    #[test]
    fn outer_examples() {
        let s = outer(&DenseTensor::scalar(2.0), &DenseTensor::scalar(3.0));
        assert_eq!(s.data(), &[6.0]);
        let e1 = DenseTensor::vector(&[1.0, 0.0]);
        let o = outer(&e1, &e1);
        assert_eq!(o.data(), &[1.0, 0.0, 0.0, 0.0]);
        let mut g = rng(4);
        let a = rand_tensor(&mut g, &[2, 2]);
        let b = rand_tensor(&mut g, &[3]);
        let o = outer(&a, &b);
        assert_eq!(o.dims(), &[2, 2, 3]);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    assert_eq!(o.get(&[i, j, k]), a.get(&[i, j]) * b.get(&[k]));
                }
            }
        }
        let rel = (o.frobenius_norm() - a.frobenius_norm() * b.frobenius_norm()).abs();
        assert!(rel < 1e-14);
    }

    #[test]
    fn inner_and_norm_examples() {
        let mut g = rng(5);
        let x = rand_tensor(&mut g, &[2, 3]);
        assert_eq!(inner(&x, &DenseTensor::zeros(shp(&[2, 3]))).unwrap(), 0.0);
        let e1 = DenseTensor::vector(&[1.0, 0.0]);
        let e2 = DenseTensor::vector(&[0.0, 1.0]);
        assert_eq!(inner(&e1, &e2).unwrap(), 0.0);
        let y = rand_tensor(&mut g, &[2, 3]);
        let flat: f64 = x.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        assert!((inner(&x, &y).unwrap() - flat).abs() < 1e-15);
        assert!(inner(&x, &e1).is_err());
        assert_eq!(frobenius_norm(&DenseTensor::zeros(shp(&[3]))), 0.0);
        assert_eq!(frobenius_norm(&DenseTensor::vector(&[3.0])), 3.0);
        let z = rand_tensor(&mut g, &[2, 3, 4]);
        let u = rc_unfold(&z, &[2, 0], &[1]).unwrap();
        assert!((frobenius_norm(&u) - frobenius_norm(&z)).abs() <= 1e-14 * frobenius_norm(&z));
    }

    #[test]
    fn n_mode_product_examples() {
        let mut g = rng(6);
        let x = rand_tensor(&mut g, &[2, 3, 4]);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(n_mode_product(&x, &id, 1).unwrap(), x);

        let v = rand_tensor(&mut g, &[3]);
        let a = rand_tensor(&mut g, &[4, 3]).to_matrix().unwrap();
        let av = n_mode_product(&v, &a, 0).unwrap();
        let oracle = &a * DMatrix::from_column_slice(3, 1, v.data());
        assert!((DMatrix::from_column_slice(4, 1, av.data()) - oracle).norm() < 1e-14);

        let m = rand_tensor(&mut g, &[2, 3]);
        let y = n_mode_product(&m, &a, 1).unwrap().to_matrix().unwrap();
        let oracle = (&a * m.to_matrix().unwrap().transpose()).transpose();
        assert!((y - oracle).norm() < 1e-14);

        assert!(n_mode_product(&m, &a, 0).is_err());
    }

    #[test]
    fn tucker_product_examples() {
        let mut g = rng(7);
        let x = rand_tensor(&mut g, &[2, 3, 4]);
        let ids: Vec<_> = x.dims().iter().map(|&d| DMatrix::identity(d, d)).collect();
        assert_eq!(tucker_product(&x, &ids).unwrap(), x);
        let ones: Vec<_> = x.dims().iter().map(|&d| DMatrix::from_element(1, d, 1.0)).collect();
        let s = tucker_product(&x, &ones).unwrap();
        assert_eq!(s.numel(), 1);
        assert!((s.data()[0] - x.data().iter().sum::<f64>()).abs() < 1e-13);

        let y = rand_tensor(&mut g, &[2, 2, 2]);
        let mats: Vec<_> = (0..3).map(|_| rand_tensor(&mut g, &[2, 2]).to_matrix().unwrap()).collect();
        let fwd = tucker_product(&y, &mats).unwrap();
        let mut rev = y.clone();
        for n in (0..3).rev() {
            rev = n_mode_product(&rev, &mats[n], n).unwrap();
        }
        assert!(fwd.sub(&rev).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn reshape_examples() {
        let mut g = rng(8);
        let x = rand_tensor(&mut g, &[2, 3]);
        assert_eq!(reshape(&x, shp(&[2, 3])).unwrap(), x);
        let v = reshape(&x, shp(&[6])).unwrap();
        for p in 1..=6 {
            let idx: Vec<usize> = ivec_inverse(p, x.shape()).unwrap().iter().map(|j| j - 1).collect();
            assert_eq!(v.data()[p - 1], x.get(&idx));
        }
        let y = rand_tensor(&mut g, &[2, 3, 4]);
        let back = reshape(&reshape(&y, shp(&[6, 4])).unwrap(), shp(&[2, 3, 4])).unwrap();
        assert_eq!(back, y);
        assert!(reshape(&y, shp(&[5, 5])).is_err());
    }
}
