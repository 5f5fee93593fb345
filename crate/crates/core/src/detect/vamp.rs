//! Waveguide-structured VAMP.
//!
//! The prior-side module is the exact posterior mean of each waveguide's
//! `N_a`-vector under the discrete composite prior; the linear module is the
//! LMMSE estimator for `y = √δ·H·x + n` with a Gaussian prior. Messages are
//! exchanged with the usual extrinsic (Onsager) correction.

use nalgebra::{DMatrix, DVector};

use super::linear::{linear_detect, LinearKind};
use super::{check_dims, effective_channel, DetectionResult, LLR_CLIP};
use crate::modem::{demap_soft, CompositeConstellation};
use crate::{Cx, PasmConfig, PasmError, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VampParams<T> {
    pub t_max: usize,
    /// Weight of the fresh extrinsic message, in `(0, 1]`; `1` disables damping.
    pub damping: T,
    pub gamma_min: T,
    pub gamma_max: T,
    /// Relative change of `r₁` below which iteration stops.
    pub tol: T,
}

impl<T: Real> Default for VampParams<T> {
    fn default() -> Self {
        Self {
            t_max: 50,
            damping: T::lit(0.6),
            gamma_min: T::lit(1e-11),
            gamma_max: T::lit(1e11),
            tol: T::lit(1e-4),
        }
    }
}

impl<T: Real> VampParams<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.t_max >= 1
            && self.damping > T::zero()
            && self.damping <= T::one()
            && self.gamma_min > T::zero()
            && self.gamma_min < self.gamma_max
            && self.tol > T::zero();
        if ok {
            Ok(())
        } else {
            Err(PasmError::InvalidConfig(
                "VAMP needs t_max >= 1, damping in (0, 1], 0 < gamma_min < gamma_max and tol > 0".into(),
            ))
        }
    }
}

/// Iterate of the detector after the last completed iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct VampState<T: Real> {
    pub r1: DVector<Cx<T>>,
    pub r2: DVector<Cx<T>>,
    pub gamma1: T,
    pub gamma2: T,
    pub x1: DVector<Cx<T>>,
    pub x2: DVector<Cx<T>>,
    pub alpha1: T,
    pub alpha2: T,
    pub eta1: T,
    pub eta2: T,
    pub k: usize,
}

/// Posterior mean of one waveguide and its divergence contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Denoised<T: Real> {
    pub mean: Vec<Cx<T>>,
    /// `γ₁` times the average per-antenna posterior variance.
    pub divergence: T,
}

/// Exact posterior mean of `x^{(m)}` given `r = x + w`, `w ~ CN(0, γ⁻¹I)`,
/// under the composite prior.
///
/// Weights are normalized after subtracting the largest log-weight. If the
/// normalizer is not a positive finite number, the nearest composite point is
/// returned with zero divergence.
pub fn denoise_waveguide<T: Real>(r: &[Cx<T>], gamma: T, constellation: &CompositeConstellation<T>) -> Denoised<T> {
    let n_a = constellation.n_a();
    let log_w: Vec<T> = constellation
        .points()
        .zip(constellation.prior())
        .map(|(p, &rho)| rho.ln() - gamma * crate::linalg::dist_sqr(r, p))
        .collect();
    let top = log_w.iter().copied().fold(T::min_value().unwrap(), T::max);
    let w: Vec<T> = log_w.iter().map(|&l| (l - top).exp()).collect();
    let total = w.iter().fold(T::zero(), |a, &b| a + b);
    if !(total > T::zero()) || !total.is_finite() || !top.is_finite() {
        let l = constellation.nearest(r);
        return Denoised { mean: constellation.point(l).to_vec(), divergence: T::zero() };
    }
    let mut mean = vec![Cx::new(T::zero(), T::zero()); n_a];
    for (p, &wl) in constellation.points().zip(&w) {
        for (m, &x) in mean.iter_mut().zip(p) {
            *m += x * (wl / total);
        }
    }
    let mut var = T::zero();
    for (p, &wl) in constellation.points().zip(&w) {
        var += crate::linalg::dist_sqr(p, &mean) * (wl / total);
    }
    Denoised { mean, divergence: gamma * var / T::lit(n_a as f64) }
}

/// LMMSE module with the eigendecomposition `G = V·Λ·Vᴴ` of the effective
/// Gram matrix cached, so each call costs two matrix-vector products.
#[derive(Debug, Clone)]
pub struct LmmseStage<T: Real> {
    v: DMatrix<Cx<T>>,
    lambda: DVector<T>,
    /// `Vᴴ·(√δH)ᴴ·y`
    rhs: DVector<Cx<T>>,
    gamma_w: T,
}

impl<T: Real> LmmseStage<T> {
    pub fn new(heff: &DMatrix<Cx<T>>, y: &DVector<Cx<T>>, gamma_w: T) -> Self {
        let gram = heff.adjoint() * heff;
        let eig = gram.symmetric_eigen();
        let lambda = eig.eigenvalues.map(|l| l.max(T::zero()));
        let rhs = eig.eigenvectors.adjoint() * (heff.adjoint() * y);
        Self { v: eig.eigenvectors, lambda, rhs, gamma_w }
    }

    /// `x̂₂ = (γ_w·G + γ₂I)⁻¹(γ_w·Hᴴy + γ₂·r₂)` and
    /// `α₂ = (γ₂/N_t)·tr[(γ_w·G + γ₂I)⁻¹]`.
    pub fn estimate(&self, r2: &DVector<Cx<T>>, gamma2: T) -> (DVector<Cx<T>>, T) {
        let n = self.lambda.len();
        let inv: Vec<T> = self.lambda.iter().map(|&l| T::one() / (self.gamma_w * l + gamma2)).collect();
        let proj = self.v.adjoint() * r2;
        let z = DVector::from_fn(n, |i, _| {
            (self.rhs[i] * self.gamma_w + proj[i] * gamma2) * inv[i]
        });
        let trace = inv.iter().fold(T::zero(), |a, &b| a + b);
        (&self.v * z, gamma2 * trace / T::lit(n as f64))
    }
}

/// One LMMSE evaluation on the unscaled channel `H`.
pub fn lmmse_stage<T: Real>(
    r2: &DVector<Cx<T>>,
    gamma2: T,
    h: &DMatrix<Cx<T>>,
    y: &DVector<Cx<T>>,
    cfg: &PasmConfig,
) -> Result<(DVector<Cx<T>>, T)> {
    check_dims(y, h, cfg)?;
    if !(gamma2 > T::zero()) {
        return Err(PasmError::InvalidArgument("gamma2 must be positive".into()));
    }
    let stage = LmmseStage::new(&effective_channel(h, cfg), y, T::lit(1.0 / cfg.noise_w));
    Ok(stage.estimate(r2, gamma2))
}

/// Per-bit LLRs `ln(Σ_{bit=1} p)/(Σ_{bit=0} p)` of each waveguide's
/// composite posterior, in bit-word order and clipped to `±LLR_CLIP`.
pub fn compute_llrs<T: Real>(
    r1: &[Cx<T>],
    gamma1: T,
    constellation: &CompositeConstellation<T>,
) -> (Vec<T>, Vec<T>) {
    let n_a = constellation.n_a();
    let bb = constellation.apm_bits();
    let width = constellation.label_bits();
    let clip = T::lit(LLR_CLIP);
    let mut apm = Vec::new();
    let mut phase = Vec::new();
    for r in r1.chunks_exact(n_a) {
        let log_p: Vec<T> = constellation
            .points()
            .zip(constellation.prior())
            .map(|(p, &rho)| rho.ln() - gamma1 * crate::linalg::dist_sqr(r, p))
            .collect();
        for b in 0..width {
            let lse = |bit: bool| {
                let vals = log_p.iter().enumerate().filter(|(l, _)| constellation.label_bit(*l, b) == bit);
                let top = vals.clone().map(|(_, &v)| v).fold(T::min_value().unwrap(), T::max);
                let s = vals.fold(T::zero(), |a, (_, &v)| a + (v - top).exp());
                top + s.ln()
            };
            let l = lse(true) - lse(false);
            let l = if l.is_finite() { l.max(-clip).min(clip) } else { T::zero() };
            if b < bb {
                apm.push(l);
            } else {
                phase.push(l);
            }
        }
    }
    (apm, phase)
}

/// `α` clipped so that the extrinsic precision `γ/α − γ` lands in
/// `[γ_min, γ_max]`.
fn clip_divergence<T: Real>(gamma: T, alpha: T, p: &VampParams<T>) -> T {
    let lo = gamma / (gamma + p.gamma_max);
    let hi = gamma / (gamma + p.gamma_min);
    alpha.max(lo).min(hi)
}

fn finite<T: Real>(v: &DVector<Cx<T>>) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn denoise_all<T: Real>(r1: &DVector<Cx<T>>, gamma1: T, constellation: &CompositeConstellation<T>) -> (DVector<Cx<T>>, T) {
    let n_a = constellation.n_a();
    let mut x = Vec::with_capacity(r1.len());
    let mut alpha = T::zero();
    let blocks = r1.len() / n_a;
    for r in r1.as_slice().chunks_exact(n_a) {
        let d = denoise_waveguide(r, gamma1, constellation);
        x.extend(d.mean);
        alpha += d.divergence;
    }
    (DVector::from_vec(x), alpha / T::lit(blocks as f64))
}

/// Combines a fresh precision with the previous one as
/// `(β/√γ + (1−β)/√γ_prev)⁻²`, i.e. damping on the standard-deviation scale.
fn damp_precision<T: Real>(fresh: T, old: T, beta: T) -> T {
    let s = beta / fresh.sqrt() + (T::one() - beta) / old.sqrt();
    T::one() / (s * s)
}

fn mix<T: Real>(fresh: DVector<Cx<T>>, old: &DVector<Cx<T>>, beta: T) -> DVector<Cx<T>> {
    fresh * Cx::from(beta) + old * Cx::from(T::one() - beta)
}

/// Runs the iteration and returns its final state, or `None` if the state
/// became non-finite.
///
/// Damping acts on the extrinsic messages `(r₂, γ₂)` and `(r₁, γ₁)` once the
/// previous message is informative: `r₁` from the second iteration and `r₂`
/// from the third, since the first `r₂` comes from the zero initialisation.
/// Posterior means and divergences are used as computed, so each Onsager
/// correction stays consistent with its module.
pub fn vamp_iterate<T: Real>(
    y: &DVector<Cx<T>>,
    h: &DMatrix<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
    params: &VampParams<T>,
) -> Result<(Option<VampState<T>>, bool)> {
    check_dims(y, h, cfg)?;
    params.validate()?;
    let n_t = cfg.n_t();
    let stage = LmmseStage::new(&effective_channel(h, cfg), y, T::lit(1.0 / cfg.noise_w));
    let beta = params.damping;
    let mut r1 = DVector::zeros(n_t);
    let mut gamma1 = T::one();
    let mut prev_r2: Option<(DVector<Cx<T>>, T)> = None;
    let mut converged = false;
    let mut state = None;
    for k in 0..params.t_max {
        let (x1, a1) = denoise_all(&r1, gamma1, constellation);
        let alpha1 = clip_divergence(gamma1, a1, params);
        let eta1 = gamma1 / alpha1;
        let mut gamma2 = eta1 - gamma1;
        let mut r2 = (&x1 * Cx::from(eta1) - &r1 * Cx::from(gamma1)) / Cx::from(gamma2);
        if let Some((old_r2, old_gamma2)) = &prev_r2 {
            r2 = mix(r2, old_r2, beta);
            gamma2 = damp_precision(gamma2, *old_gamma2, beta);
        }

        let (x2, a2) = stage.estimate(&r2, gamma2);
        let alpha2 = clip_divergence(gamma2, a2, params);
        let eta2 = gamma2 / alpha2;
        let mut gamma1_next = eta2 - gamma2;
        let mut r1_next = (&x2 * Cx::from(eta2) - &r2 * Cx::from(gamma2)) / Cx::from(gamma1_next);
        if k > 0 {
            r1_next = mix(r1_next, &r1, beta);
            gamma1_next = damp_precision(gamma1_next, gamma1, beta);
        }

        if !finite(&r1_next) || !finite(&r2) || !gamma1_next.is_finite() || !gamma2.is_finite() {
            return Ok((None, false));
        }
        let change = (&r1_next - &r1).norm();
        let scale = r1_next.norm();
        r1 = r1_next;
        gamma1 = gamma1_next;
        state = Some(VampState {
            r1: r1.clone(),
            r2: r2.clone(),
            gamma1,
            gamma2,
            x1,
            x2,
            alpha1,
            alpha2,
            eta1,
            eta2,
            k: k + 1,
        });
        if k > 0 {
            prev_r2 = Some((r2, gamma2));
        }
        if change < params.tol * scale {
            converged = true;
            break;
        }
    }
    Ok((state, converged))
}

/// VAMP detection with LLR output; hard bits are the LLR signs.
///
/// Falls back to the MMSE decision, flagged as not converged, when the
/// iteration produces a non-finite state.
pub fn vamp_detect<T: Real>(
    y: &DVector<Cx<T>>,
    h: &DMatrix<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
    params: &VampParams<T>,
) -> Result<DetectionResult<T>> {
    let (state, converged) = vamp_iterate(y, h, cfg, constellation, params)?;
    match state {
        Some(s) => {
            let (llr_apm, llr_phase) = compute_llrs(s.r1.as_slice(), s.gamma1, constellation);
            let bits = demap_soft(&llr_apm, &llr_phase, cfg)?;
            Ok(DetectionResult { bits, llr_apm, llr_phase, iterations: s.k, converged })
        }
        None => {
            let mut r = linear_detect(y, h, cfg, constellation, LinearKind::Mmse)?;
            r.converged = false;
            r.iterations = params.t_max;
            Ok(r)
        }
    }
}
