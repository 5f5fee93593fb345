//! Small dense linear-algebra helpers shared by the channel, detector and
//! analysis modules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Cx, PasmError, Real, Result};

/// Column-major `vec(·)` of a matrix.
pub fn vec_of<T: nalgebra::Scalar>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_column_slice(m.as_slice())
}

/// Draws one circularly-symmetric `CN(0, 1)` sample.
pub fn sample_cn<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Cx<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Cx::new(T::lit(re * s), T::lit(im * s))
}

/// Draws a vector of i.i.d. `N(0, 1)` samples.
pub fn sample_normal_vec<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<T> {
    DVector::from_fn(n, |_, _| T::lit(rng.sample::<f64, _>(StandardNormal)))
}

/// Symmetric square root `S = V·diag(√λ)·Vᵀ` of a real symmetric PSD matrix.
///
/// Eigenvalues within a relative tolerance below zero are treated as zero.
/// If a clearly negative eigenvalue shows up, `jitter·I` is added once and the
/// factorization retried before giving up.
pub fn psd_sqrt<T: Real>(cov: &DMatrix<T>, jitter: T) -> Result<DMatrix<T>> {
    match try_psd_sqrt(cov) {
        Some(s) => Ok(s),
        None => {
            let n = cov.nrows();
            let bumped = cov + DMatrix::<T>::identity(n, n) * jitter;
            try_psd_sqrt(&bumped).ok_or_else(|| {
                PasmError::Factorization("covariance is not positive semidefinite".into())
            })
        }
    }
}

fn try_psd_sqrt<T: Real>(cov: &DMatrix<T>) -> Option<DMatrix<T>> {
    let n = cov.nrows();
    if n == 0 {
        return Some(DMatrix::zeros(0, 0));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let eig = cov.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let tol = scale * T::lit(1e-9);
    if eig.eigenvalues.iter().any(|&v| v < -tol) {
        return None;
    }
    let roots = eig.eigenvalues.map(|v| v.max(T::zero()).sqrt());
    let v = &eig.eigenvectors;
    Some(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Hermitian square root of a complex Hermitian PSD matrix.
pub fn hermitian_sqrt<T: Real>(cov: &DMatrix<Cx<T>>) -> Result<DMatrix<Cx<T>>> {
    let n = cov.nrows();
    let eig = cov.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(T::zero(), |a, &v| a.max(v.abs()));
    let tol = scale * T::lit(1e-9);
    if eig.eigenvalues.iter().any(|&v| v < -tol || !v.is_finite()) {
        return Err(PasmError::Factorization(
            "matrix is not Hermitian positive semidefinite".into(),
        ));
    }
    let roots = DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&v| Cx::new(v.max(T::zero()).sqrt(), T::zero())),
    );
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.adjoint())
}

/// Squared Euclidean norm of a complex slice.
pub fn norm_sqr<T: Real>(v: &[Cx<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Squared Euclidean distance between two complex slices of equal length.
pub fn dist_sqr<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + (*x - *y).norm_sqr())
}

/// Hermitian part `(A + Aᴴ)/2`, used to scrub round-off asymmetry.
pub fn hermitian_part<T: Real>(a: &DMatrix<Cx<T>>) -> DMatrix<Cx<T>> {
    (a + a.adjoint()) * Cx::new(T::lit(0.5), T::zero())
}
