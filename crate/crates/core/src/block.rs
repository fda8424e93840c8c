//! n-mode row/column block tensors and staged multi-block concatenation.

use crate::einstein::{einstein_compose, u_transpose, EvenPairedTensor, PairedShape};
use crate::error::{Error, Result};
use crate::tensor::{increment, DenseTensor, Shape};

/// Block counts per mode `(K1, ..., KN)`; block `k` of a flat list sits at
/// multi-index `ivec_inverse(k)` (K1 fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockFactorization(Vec<usize>);

impl BlockFactorization {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::domain(format!("invalid block factorization {factors:?}")));
        }
        Ok(BlockFactorization(factors))
    }

    pub fn factors(&self) -> &[usize] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().product()
    }
}

/// Concatenates tensors of equal shape except along `axis`.
fn concat_axis(parts: &[&DenseTensor], axis: usize) -> Result<DenseTensor> {
    let first = parts.first().ok_or_else(|| Error::domain("nothing to concatenate"))?;
    let dims = first.dims();
    for p in parts {
        let ok = p.order() == dims.len()
            && p.dims().iter().zip(dims).enumerate().all(|(k, (a, b))| k == axis || a == b);
        if !ok {
            return Err(Error::domain(format!(
                "cannot concatenate {:?} with {:?} along axis {axis}",
                p.dims(),
                dims
            )));
        }
    }
    // column-major: everything below `axis` is a contiguous run per slab
    let inner: usize = dims[..axis].iter().product();
    let outer: usize = dims[axis + 1..].iter().product();
    let total_axis: usize = parts.iter().map(|p| p.dims()[axis]).sum();
    let mut out = Vec::with_capacity(inner * total_axis * outer);
    for o in 0..outer {
        for p in parts {
            let run = inner * p.dims()[axis];
            out.extend_from_slice(&p.data()[o * run..(o + 1) * run]);
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[axis] = total_axis;
    Ok(DenseTensor::from_raw(Shape::new(new_dims)?, out))
}

fn check_mode(a: &EvenPairedTensor, n: usize) -> Result<()> {
    if n == 0 || n > a.order() {
        return Err(Error::domain(format!("mode {n} outside 1..={}", a.order())));
    }
    Ok(())
}

fn same_shape(a: &EvenPairedTensor, b: &EvenPairedTensor) -> Result<()> {
    if a.pshape() != b.pshape() {
        return Err(Error::domain(format!(
            "block shapes {:?} and {:?} differ",
            a.pshape().pairs(),
            b.pshape().pairs()
        )));
    }
    Ok(())
}

/// `|A B|ₙ`: `In` doubles, the first `In` column indices of mode `n` read
/// `A` and the rest read `B`. `n` is 1-based.
pub fn n_mode_row_block(a: &EvenPairedTensor, b: &EvenPairedTensor, n: usize) -> Result<EvenPairedTensor> {
    check_mode(a, n)?;
    same_shape(a, b)?;
    let data = concat_axis(&[a.as_dense(), b.as_dense()], 2 * n - 1)?;
    EvenPairedTensor::from_interleaved(data)
}

/// `|A; B|ₙ`: `Jn` doubles. `n` is 1-based.
pub fn n_mode_col_block(a: &EvenPairedTensor, b: &EvenPairedTensor, n: usize) -> Result<EvenPairedTensor> {
    check_mode(a, n)?;
    same_shape(a, b)?;
    let data = concat_axis(&[a.as_dense(), b.as_dense()], 2 * n - 2)?;
    EvenPairedTensor::from_interleaved(data)
}

fn staged_block(blocks: &[EvenPairedTensor], f: &BlockFactorization, row: bool) -> Result<EvenPairedTensor> {
    let first = blocks.first().ok_or_else(|| Error::domain("no blocks"))?;
    if f.factors().len() != first.order() {
        return Err(Error::domain(format!(
            "factorization {:?} for order-{} blocks",
            f.factors(),
            first.order()
        )));
    }
    if f.count() != blocks.len() {
        return Err(Error::domain(format!(
            "factorization {:?} covers {} blocks, got {}",
            f.factors(),
            f.count(),
            blocks.len()
        )));
    }
    for b in blocks {
        same_shape(first, b)?;
    }
    // stage n merges consecutive runs of Kn blocks along mode n
    let mut level: Vec<DenseTensor> = blocks.iter().map(|b| b.as_dense().clone()).collect();
    for (n, &kn) in f.factors().iter().enumerate() {
        let axis = if row { 2 * n + 1 } else { 2 * n };
        level = level
            .chunks(kn)
            .map(|group| concat_axis(&group.iter().collect::<Vec<_>>(), axis))
            .collect::<Result<_>>()?;
    }
    EvenPairedTensor::from_interleaved(level.pop().expect("one block remains"))
}

/// Generalized row block: `In` multiplied by `Kn`, assembled by the staged
/// 1-mode, 2-mode, ..., N-mode concatenation.
pub fn mode_row_block(blocks: &[EvenPairedTensor], f: &BlockFactorization) -> Result<EvenPairedTensor> {
    staged_block(blocks, f, true)
}

/// Generalized column block: `Jn` multiplied by `Kn`.
pub fn mode_col_block(blocks: &[EvenPairedTensor], f: &BlockFactorization) -> Result<EvenPairedTensor> {
    staged_block(blocks, f, false)
}

/// Extracts block `k` (flat index, K1 fastest) of a generalized block tensor
/// whose blocks have paired shape `base`.
pub fn extract_block(t: &EvenPairedTensor, f: &BlockFactorization, k: usize, base: &PairedShape, row: bool) -> Result<EvenPairedTensor> {
    let kdims = f.factors();
    if k >= f.count() || kdims.len() != base.order() {
        return Err(Error::domain(format!("block {k} outside factorization {kdims:?}")));
    }
    let expected: Vec<usize> = base
        .pairs()
        .iter()
        .zip(kdims)
        .flat_map(|(&(j, i), &kn)| if row { [j, i * kn] } else { [j * kn, i] })
        .collect();
    if t.as_dense().dims() != expected.as_slice() {
        return Err(Error::domain("block tensor shape does not match base shape and factorization"));
    }
    let mut kidx = vec![0usize; kdims.len()];
    for _ in 0..k {
        increment(&mut kidx, kdims);
    }
    let shape = Shape::new(base.interleaved())?;
    let out = DenseTensor::from_fn(shape, |idx| {
        let mut src = idx.to_vec();
        for (n, &kn) in kidx.iter().enumerate() {
            if row {
                src[2 * n + 1] += kn * base.cols()[n];
            } else {
                src[2 * n] += kn * base.rows()[n];
            }
        }
        t.as_dense().get(&src)
    });
    EvenPairedTensor::new(base.clone(), out)
}

/// Checks `P*|A B|ₙ = |P*A P*B|ₙ` and `|A B|ₙ * |Aᵀ; Bᵀ|ₙ = A*Aᵀ + B*Bᵀ`
/// to `1e-12` relative.
pub fn block_distribute_check(p: &EvenPairedTensor, a: &EvenPairedTensor, b: &EvenPairedTensor, n: usize) -> Result<bool> {
    let close = |x: &EvenPairedTensor, y: &EvenPairedTensor| -> Result<bool> {
        let scale = x.frobenius_norm().max(y.frobenius_norm()).max(f64::MIN_POSITIVE);
        Ok(x.sub(y)?.frobenius_norm() <= 1e-12 * scale)
    };
    let ab = n_mode_row_block(a, b, n)?;
    let lhs = einstein_compose(p, &ab)?;
    let rhs = n_mode_row_block(&einstein_compose(p, a)?, &einstein_compose(p, b)?, n)?;
    let first = close(&lhs, &rhs)?;

    let stacked = n_mode_col_block(&u_transpose(a), &u_transpose(b), n)?;
    let lhs = einstein_compose(&ab, &stacked)?;
    let rhs = einstein_compose(a, &u_transpose(a))?.add(&einstein_compose(b, &u_transpose(b))?)?;
    Ok(first && close(&lhs, &rhs)?)
}
