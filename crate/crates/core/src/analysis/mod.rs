//! Pairwise error probabilities, the ML union bound and complexity counts.
//!
//! For a codeword pair with difference `Ψ = x_i − x_j` the conditional PEP is
//! `Q(√(δ‖HΨ‖²/(2N_0)))`. Writing `‖HΨ‖² = uᴴQu` with `u = vec(Hᴴ)` and
//! `Q = I_{N_r} ⊗ ΨΨᴴ` turns the average over a Gaussian `u` into an integral
//! of the quadratic-form MGF
//!
//! ```text
//! M(a) = exp(a·ūᴴQ(I − aC_uQ)⁻¹ū) / det(I − aC_uQ)
//! ```
//!
//! over Craig's form of the Q-function.

mod bound;
mod flops;

pub use bound::{codebook, union_bound_ber, BoundOptions, BoundResult, PepMethod};
pub use flops::{flop_estimate, FlopModel};

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};

use crate::{Cx, PasmError, Real, Result};

/// Permutation `K` with `K·vec(Aᵀ) = vec(A)` for `A` of shape `N_t × N_r`,
/// built as `Σ_j (e_jᵀ ⊗ I_{N_r} ⊗ e_j)` over the standard basis of `ℝ^{N_t}`.
///
/// Maps `vec(H*)` (waveguide-major) onto `vec(Hᴴ)` (receiver-major).
pub fn commutation_matrix<T: Real>(n_r: usize, n_t: usize) -> DMatrix<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    let mut k = DMatrix::<Cx<T>>::zeros(n_r * n_t, n_r * n_t);
    let eye_r = DMatrix::<Cx<T>>::identity(n_r, n_r);
    for j in 0..n_t {
        let mut e = DMatrix::<Cx<T>>::zeros(n_t, 1);
        e[j] = one;
        k += e.transpose().kronecker(&eye_r).kronecker(&e);
    }
    k
}

/// Mean and covariance of `u = vec(Hᴴ)`; entry `j·N_t + k` belongs to
/// receive element `j` and antenna `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMoments<T: Real> {
    pub n_r: usize,
    pub n_t: usize,
    pub u_bar: DVector<Cx<T>>,
    pub c_u: DMatrix<Cx<T>>,
}

impl<T: Real> ChannelMoments<T> {
    /// Diagonal of `C_u` when every off-diagonal entry is zero.
    pub fn diagonal(&self) -> Option<DVector<T>> {
        let n = self.c_u.nrows();
        for c in 0..n {
            for r in 0..n {
                if r != c && self.c_u[(r, c)] != Cx::new(T::zero(), T::zero()) {
                    return None;
                }
            }
        }
        Some(DVector::from_fn(n, |i, _| self.c_u[(i, i)].re))
    }

    /// `E[‖H‖_F²] = ‖ū‖² + tr C_u`.
    pub fn mean_energy(&self) -> T {
        self.u_bar.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
            + (0..self.c_u.nrows()).fold(T::zero(), |a, i| a + self.c_u[(i, i)].re)
    }
}

/// One ordered codeword pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PepTerm<T: Real> {
    pub x_i: DVector<Cx<T>>,
    pub x_j: DVector<Cx<T>>,
    pub psi: DVector<Cx<T>>,
    /// Number of differing bits between the two words.
    pub hamming: usize,
}

impl<T: Real> PepTerm<T> {
    pub fn new(x_i: DVector<Cx<T>>, x_j: DVector<Cx<T>>, hamming: usize) -> Self {
        let psi = &x_i - &x_j;
        Self { x_i, x_j, psi, hamming }
    }

    /// `Q = I_{N_r} ⊗ ΨΨᴴ`.
    pub fn q_matrix(&self, n_r: usize) -> DMatrix<Cx<T>> {
        let outer = &self.psi * self.psi.adjoint();
        DMatrix::<Cx<T>>::identity(n_r, n_r).kronecker(&outer)
    }
}

/// Standard Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `ln M(a)` for a general Gaussian `u`, evaluated densely with an LU
/// factorization of `I − aC_uQ`.
pub fn log_mgf_quadratic<T: Real>(a: T, moments: &ChannelMoments<T>, q: &DMatrix<Cx<T>>) -> Result<T> {
    if a > T::zero() {
        return Err(PasmError::InvalidArgument("MGF argument must be non-positive".into()));
    }
    let n = q.nrows();
    if moments.u_bar.len() != n || moments.c_u.shape() != (n, n) {
        return Err(PasmError::Dimension(format!("Q is {n}×{n} but moments have length {}", moments.u_bar.len())));
    }
    if a == T::zero() {
        return Ok(T::zero());
    }
    let ca = Cx::new(a, T::zero());
    let m = DMatrix::<Cx<T>>::identity(n, n) - &moments.c_u * q * ca;
    let lu = m.lu();
    let z = lu
        .solve(&moments.u_bar)
        .ok_or_else(|| PasmError::Factorization("I − aC_uQ is singular".into()))?;
    let quad = (moments.u_bar.adjoint() * q * z)[(0, 0)].re;
    let u = lu.u();
    let log_det = (0..n).fold(T::zero(), |acc, i| acc + u[(i, i)].norm_sqr().ln() * T::lit(0.5));
    Ok(a * quad - log_det)
}

/// Quadratic-form MGF `M(a) = E[exp(a·uᴴQu)]`, `a ≤ 0`.
pub fn mgf_quadratic<T: Real>(a: T, moments: &ChannelMoments<T>, q: &DMatrix<Cx<T>>) -> Result<T> {
    Ok(log_mgf_quadratic(a, moments, q)?.exp())
}

/// `ln M(a)` of `γ = uᴴQu` reduced for one codeword difference.
///
/// With a diagonal `C_u` the receive blocks decouple and each is a rank-one
/// update, so `ln M(a) = Σ_j a·|Ψᴴū_j|²/(1 − a·s_j) − ln(1 − a·s_j)` with
/// `s_j = Σ_k c_{jk}|Ψ_k|²`. Otherwise the dense form is used.
#[derive(Debug, Clone)]
enum PreparedMgf<T: Real> {
    Decoupled(Vec<(T, T)>),
    Dense(DMatrix<Cx<T>>),
}

impl<T: Real> PreparedMgf<T> {
    fn new(psi: &DVector<Cx<T>>, moments: &ChannelMoments<T>, diag: Option<&DVector<T>>) -> Self {
        let n_t = moments.n_t;
        match diag {
            Some(c) => PreparedMgf::Decoupled(
                (0..moments.n_r)
                    .map(|j| {
                        let mut mean = Cx::new(T::zero(), T::zero());
                        let mut s = T::zero();
                        for k in 0..n_t {
                            mean += psi[k].conj() * moments.u_bar[j * n_t + k];
                            s += c[j * n_t + k] * psi[k].norm_sqr();
                        }
                        (mean.norm_sqr(), s)
                    })
                    .collect(),
            ),
            None => {
                let outer = psi * psi.adjoint();
                PreparedMgf::Dense(DMatrix::<Cx<T>>::identity(moments.n_r, moments.n_r).kronecker(&outer))
            }
        }
    }

    fn log_mgf(&self, a: T, moments: &ChannelMoments<T>) -> Result<T> {
        match self {
            PreparedMgf::Decoupled(blocks) => Ok(blocks.iter().fold(T::zero(), |acc, &(m, s)| {
                let d = T::one() - a * s;
                acc + a * m / d - d.ln()
            })),
            PreparedMgf::Dense(q) => log_mgf_quadratic(a, moments, q),
        }
    }
}

/// Gauss–Legendre evaluator of `(1/π)∫₀^{π/2} M(−δ/(4N_0 sin²θ)) dθ`.
#[derive(Debug, Clone)]
pub struct PepEvaluator {
    /// `(sin²θ_i, w_i)` mapped onto `(0, π/2)` with the `1/π` folded in.
    nodes: Vec<(f64, f64)>,
}

impl PepEvaluator {
    pub const DEFAULT_ORDER: usize = 64;

    pub fn new(order: usize) -> Result<Self> {
        let rule = GaussLegendre::new(order)
            .map_err(|_| PasmError::InvalidArgument(format!("quadrature order {order} must be at least 2")))?;
        let q = std::f64::consts::FRAC_PI_4;
        let nodes = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| ((q * (x + 1.0)).sin().powi(2), w * q / std::f64::consts::PI))
            .collect();
        Ok(Self { nodes })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Exact unconditional PEP by quadrature.
    pub fn pep_exact<T: Real>(&self, term: &PepTerm<T>, moments: &ChannelMoments<T>, delta: f64, n0: f64) -> Result<f64> {
        let diag = moments.diagonal();
        self.pep_prepared(&PreparedMgf::new(&term.psi, moments, diag.as_ref()), moments, delta, n0)
    }

    fn pep_prepared<T: Real>(&self, prep: &PreparedMgf<T>, moments: &ChannelMoments<T>, delta: f64, n0: f64) -> Result<f64> {
        let scale = delta / (4.0 * n0);
        let mut acc = 0.0;
        for &(s2, w) in &self.nodes {
            let a = T::lit(-scale / s2);
            acc += w * prep.log_mgf(a, moments)?.as_f64().exp();
        }
        Ok(acc)
    }
}

impl Default for PepEvaluator {
    fn default() -> Self {
        Self::new(Self::DEFAULT_ORDER).expect("default order is valid")
    }
}

/// Exact PEP with the default quadrature order.
pub fn pep_exact<T: Real>(term: &PepTerm<T>, moments: &ChannelMoments<T>, delta: f64, n0: f64) -> Result<f64> {
    PepEvaluator::default().pep_exact(term, moments, delta, n0)
}

/// Two-exponential Q-function approximation
/// `(1/12)·M(−δ/(4N_0)) + (1/4)·M(−δ/(3N_0))`.
pub fn pep_approx<T: Real>(term: &PepTerm<T>, moments: &ChannelMoments<T>, delta: f64, n0: f64) -> Result<f64> {
    let diag = moments.diagonal();
    pep_approx_prepared(&PreparedMgf::new(&term.psi, moments, diag.as_ref()), moments, delta, n0)
}

fn pep_approx_prepared<T: Real>(prep: &PreparedMgf<T>, moments: &ChannelMoments<T>, delta: f64, n0: f64) -> Result<f64> {
    let m1 = prep.log_mgf(T::lit(-delta / (4.0 * n0)), moments)?.as_f64().exp();
    let m2 = prep.log_mgf(T::lit(-delta / (3.0 * n0)), moments)?.as_f64().exp();
    Ok(m1 / 12.0 + m2 / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sample_cn, vec_of};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type C = Cx<f64>;

    fn random_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<C> {
        DMatrix::from_fn(r, c, |_, _| sample_cn(rng))
    }

    #[test]
    fn commutation_scalar_and_two_by_two() {
        assert_eq!(commutation_matrix::<f64>(1, 1), DMatrix::from_element(1, 1, C::new(1.0, 0.0)));
        let k = commutation_matrix::<f64>(2, 2);
        let o = C::new(1.0, 0.0);
        let z = C::new(0.0, 0.0);
        let expect = DMatrix::from_row_slice(4, 4, &[o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o]);
        assert_eq!(k, expect);
    }

    #[test]
    fn commutation_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n_r in 1..=8 {
            for n_t in 1..=8 {
                let k = commutation_matrix::<f64>(n_r, n_t);
                let a = random_matrix(n_t, n_r, &mut rng);
                assert_eq!(&k * vec_of(&a.transpose()), vec_of(&a));
                let kk = &k * k.transpose();
                assert_eq!(kk, DMatrix::identity(n_r * n_t, n_r * n_t));
            }
        }
    }

    fn moments(n: usize, u_bar: DVector<C>, c_u: DMatrix<C>) -> ChannelMoments<f64> {
        ChannelMoments { n_r: 1, n_t: n, u_bar, c_u }
    }

    #[test]
    fn mgf_at_zero_is_one() {
        let m = moments(2, DVector::from_element(2, C::new(0.3, 0.1)), DMatrix::identity(2, 2));
        assert_eq!(mgf_quadratic(0.0, &m, &DMatrix::identity(2, 2)).unwrap(), 1.0);
    }

    #[test]
    fn mgf_of_exponential_sum() {
        for n in 1..5 {
            let m = moments(n, DVector::zeros(n), DMatrix::identity(n, n));
            for a in [-0.1, -1.0, -7.5] {
                let v = mgf_quadratic(a, &m, &DMatrix::identity(n, n)).unwrap();
                assert!((v - (1.0 - a).powi(-(n as i32))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mgf_rejects_positive_argument() {
        let m = moments(1, DVector::zeros(1), DMatrix::identity(1, 1));
        assert!(mgf_quadratic(0.5, &m, &DMatrix::identity(1, 1)).is_err());
    }

    fn diag_moments(n_r: usize, n_t: usize, rng: &mut ChaCha8Rng) -> ChannelMoments<f64> {
        use rand::Rng;
        let n = n_r * n_t;
        ChannelMoments {
            n_r,
            n_t,
            u_bar: DVector::from_fn(n, |_, _| sample_cn(rng)),
            c_u: DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| C::new(rng.random_range(0.0..2.0), 0.0))),
        }
    }

    #[test]
    fn decoupled_mgf_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (n_r, n_t) in [(1, 2), (2, 2), (3, 4), (4, 1)] {
            let m = diag_moments(n_r, n_t, &mut rng);
            let psi = DVector::from_fn(n_t, |_, _| sample_cn(&mut rng));
            let term = PepTerm::new(psi.clone(), DVector::zeros(n_t), 1);
            let q = term.q_matrix(n_r);
            let prep = PreparedMgf::new(&psi, &m, m.diagonal().as_ref());
            for a in [-0.01, -0.5, -3.0] {
                let dense = log_mgf_quadratic(a, &m, &q).unwrap();
                let fast = prep.log_mgf(a, &m).unwrap();
                assert!((dense - fast).abs() < 1e-10 * (1.0 + dense.abs()), "{dense} {fast}");
            }
        }
    }

    #[test]
    fn identical_codewords() {
        let m = moments(2, DVector::from_element(2, C::new(1.0, 0.0)), DMatrix::identity(2, 2));
        let x = DVector::from_element(2, C::new(1.0, 0.0));
        let t = PepTerm::new(x.clone(), x, 0);
        assert!((pep_exact(&t, &m, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((pep_approx(&t, &m, 1.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn deterministic_channel_reduces_to_q_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n_r, n_t) in [(1, 2), (2, 2), (2, 4)] {
            let h = random_matrix(n_r, n_t, &mut rng);
            let n = n_r * n_t;
            let m = ChannelMoments { n_r, n_t, u_bar: vec_of(&h.adjoint()), c_u: DMatrix::zeros(n, n) };
            let psi = DVector::from_fn(n_t, |_, _| sample_cn(&mut rng)) * C::new(0.4, 0.0);
            let t = PepTerm::new(psi.clone(), DVector::zeros(n_t), 1);
            for (delta, n0) in [(1.0, 1.0), (0.5, 0.2), (2.0, 0.3)] {
                let g = (&h * &psi).norm_squared();
                let expect = q_function((delta * g / (2.0 * n0)).sqrt());
                let got = pep_exact(&t, &m, delta, n0).unwrap();
                assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
            }
        }
    }

    #[test]
    fn pep_decreases_with_snr() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = diag_moments(2, 2, &mut rng);
        let t = PepTerm::new(DVector::from_fn(2, |_, _| sample_cn(&mut rng)), DVector::zeros(2), 1);
        let mut prev = (1.0, 1.0);
        for snr_db in (0..=40).step_by(5) {
            let r = 10f64.powf(snr_db as f64 / 10.0);
            let e = pep_exact(&t, &m, r, 1.0).unwrap();
            let a = pep_approx(&t, &m, r, 1.0).unwrap();
            assert!(e < prev.0 && a < prev.1);
            prev = (e, a);
        }
    }

    #[test]
    fn quadrature_is_converged() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let e64 = PepEvaluator::new(64).unwrap();
        let e128 = PepEvaluator::new(128).unwrap();
        for _ in 0..10 {
            let m = diag_moments(2, 2, &mut rng);
            let t = PepTerm::new(DVector::from_fn(2, |_, _| sample_cn(&mut rng)), DVector::zeros(2), 1);
            for r in [1.0, 10.0, 1e3] {
                let a = e64.pep_exact(&t, &m, r, 1.0).unwrap();
                let b = e128.pep_exact(&t, &m, r, 1.0).unwrap();
                assert!((a - b).abs() <= 1e-9 * b, "{a} {b}");
            }
        }
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(1.0) - 0.158_655_253_931_457).abs() < 1e-12, "{}", q_function(1.0));
        assert!((q_function(3.0) - 1.349_898_031_630_094_6e-3).abs() < 1e-15);
    }
}
