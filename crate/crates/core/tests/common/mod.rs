#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pasm_core::linalg::sample_cn;
use pasm_core::Cx;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cn_vec(n: usize, rng: &mut ChaCha8Rng) -> DVector<Cx<f64>> {
    DVector::from_fn(n, |_, _| sample_cn(rng))
}

pub fn cn_mat(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<Cx<f64>> {
    DMatrix::from_fn(r, c, |_, _| sample_cn(rng))
}

/// `A·Aᴴ / n` for a square Gaussian `A`.
pub fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Cx<f64>> {
    let a = cn_mat(n, n, rng);
    (&a * a.adjoint()) / Cx::from(n as f64)
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
pub fn chol(c: &DMatrix<Cx<f64>>) -> DMatrix<Cx<f64>> {
    c.clone().cholesky().expect("positive definite").l()
}

/// Sample mean and standard error of a real sample.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn bit_errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
