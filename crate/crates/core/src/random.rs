//! Seeded generators for tensors, paired tensors and test instances.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{DenseTensor, Shape};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in [-1, 1].
pub fn rand_tensor(rng: &mut impl Rng, dims: &[usize]) -> DenseTensor {
    let shape = Shape::new(dims.to_vec()).expect("valid dims");
    let n = shape.numel();
    let data = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DenseTensor::from_raw(shape, data)
}

/// Standard normal entries.
pub fn randn_tensor(rng: &mut impl Rng, dims: &[usize]) -> DenseTensor {
    let shape = Shape::new(dims.to_vec()).expect("valid dims");
    let n = shape.numel();
    let data = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    DenseTensor::from_raw(shape, data)
}

/// Bernoulli(`fill`) mask times standard normal entries.
pub fn sparse_tensor(rng: &mut impl Rng, dims: &[usize], fill: f64) -> DenseTensor {
    let shape = Shape::new(dims.to_vec()).expect("valid dims");
    let n = shape.numel();
    let data = (0..n)
        .map(|_| {
            if rng.random_bool(fill.clamp(0.0, 1.0)) {
                StandardNormal.sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    DenseTensor::from_raw(shape, data)
}

pub fn randn_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn rand_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..=1.0))
}

/// Random matrix with orthonormal columns (`rows >= cols`).
pub fn orthonormal_columns(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    assert!(rows >= cols);
    let q = randn_matrix(rng, rows, cols).qr().q();
    q.columns(0, cols).into_owned()
}
