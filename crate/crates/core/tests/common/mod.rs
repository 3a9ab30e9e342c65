#![allow(dead_code)]

use lrlab_core::Matrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Entries uniform in `[-1, 1)`.
pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut r = rng(seed);
    Matrix::from_dmatrix(DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0))).unwrap()
}

pub struct Planted {
    pub observed: Matrix,
    pub low_rank: DMatrix<f64>,
}

/// `A (rows x rank) * B (rank x cols)`, unit-variance factors, plus +-1 at
/// `fraction` of the entries chosen without replacement.
pub fn planted(rows: usize, cols: usize, rank: usize, fraction: f64, seed: u64) -> Planted {
    let mut r = rng(seed ^ 0x5eed);
    let a = DMatrix::<f64>::from_fn(rows, rank, |_, _| r.sample(StandardNormal));
    let b = DMatrix::<f64>::from_fn(rank, cols, |_, _| r.sample(StandardNormal));
    let low = &a * &b;
    let mut cells: Vec<usize> = (0..rows * cols).collect();
    let count = (fraction * (rows * cols) as f64).round() as usize;
    let mut sparse = DMatrix::<f64>::zeros(rows, cols);
    for k in 0..count {
        let j = r.random_range(k..cells.len());
        cells.swap(k, j);
        let idx = cells[k];
        sparse[(idx % rows, idx / rows)] = if r.random_bool(0.5) { 1.0 } else { -1.0 };
    }
    Planted {
        observed: Matrix::from_dmatrix(&low + &sparse).unwrap(),
        low_rank: low,
    }
}

pub fn rel_err(got: &Matrix, want: &DMatrix<f64>) -> f64 {
    (got.as_dmatrix() - want).norm() / want.norm()
}
