//! Rician fading with distance-dependent LoS probability, COST-231
//! Walfisch–Ikegami path loss and spatially correlated shadowing.
//!
//! Entry `(j, k)` of `H` links receive element `j` to activated antenna `k`
//! (antenna order `m·N_a + i`):
//!
//! ```text
//! h = √β · ( √(K/(K+1)) · h̄ + √(1/(K+1)) · ĥ ),   h̄ = exp(−j2πd/λ),  ĥ ~ CN(0,1)
//! ```
//!
//! The large-scale part (shadowing, LoS indicators, `β`, `K`) is drawn
//! separately from the small-scale part so callers can hold it fixed over a
//! block of frames, and so the exact moments of `vec(Hᴴ)` can be formed
//! conditioned on it.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{commutation_matrix, ChannelMoments};
use crate::linalg::{psd_sqrt, sample_cn, sample_normal_vec};
use crate::scene::{ActivationPattern, DeploymentGeometry, Point3};
use crate::{Cx, PasmConfig, PasmError, Real, Result};

/// Fixed values that replace the stochastic large-scale model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelOverrides {
    /// Rician factor for every link; `inf` removes the scattered part.
    pub rician_k: Option<f64>,
    /// Path gain in dB for every link, shadowing included.
    pub beta_db: Option<f64>,
    /// LoS state for every link.
    pub los: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LargeScaleParams {
    /// Share of the shadowing variance carried by the transmit side.
    pub xi: f64,
    /// Shadowing standard deviation (dB).
    pub sigma_db: f64,
    /// Distance at which the shadowing covariance halves (m).
    pub d_decorr: f64,
    /// Distance beyond which LoS is impossible (m).
    pub los_cutoff: f64,
    pub los_intercept_db: f64,
    pub los_slope_db: f64,
    pub nlos_intercept_db: f64,
    pub nlos_slope_db: f64,
    /// `K = 10^(k_intercept − k_slope·d)` on LoS links.
    pub k_intercept: f64,
    pub k_slope: f64,
    pub overrides: ChannelOverrides,
}

impl Default for LargeScaleParams {
    fn default() -> Self {
        Self {
            xi: 0.5,
            sigma_db: 8.0,
            d_decorr: 100.0,
            los_cutoff: 300.0,
            los_intercept_db: -30.18,
            los_slope_db: 26.0,
            nlos_intercept_db: -34.53,
            nlos_slope_db: 38.0,
            k_intercept: 1.3,
            k_slope: 0.003,
            overrides: ChannelOverrides::default(),
        }
    }
}

fn check_distance(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(PasmError::NonPositiveDistance(d))
    }
}

impl LargeScaleParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(PasmError::InvalidConfig(s.to_string()));
        if !(0.0..=1.0).contains(&self.xi) {
            return bad("xi must lie in [0, 1]");
        }
        if !(self.sigma_db >= 0.0) || !(self.d_decorr > 0.0) || !(self.los_cutoff > 0.0) {
            return bad("sigma must be non-negative, decorrelation and cutoff distances positive");
        }
        if matches!(self.overrides.rician_k, Some(k) if !(k >= 0.0)) {
            return bad("overridden Rician factor must be non-negative");
        }
        if matches!(self.overrides.beta_db, Some(b) if !b.is_finite()) {
            return bad("overridden path gain must be finite");
        }
        Ok(())
    }

    pub fn los_probability(&self, d: f64) -> Result<f64> {
        check_distance(d)?;
        Ok(if d < self.los_cutoff { 1.0 - d / self.los_cutoff } else { 0.0 })
    }

    pub fn rician_k(&self, d: f64, has_los: bool) -> Result<f64> {
        check_distance(d)?;
        Ok(if has_los { 10f64.powf(self.k_intercept - self.k_slope * d) } else { 0.0 })
    }

    pub fn path_loss_db(&self, d: f64, has_los: bool, shadow_db: f64) -> Result<f64> {
        check_distance(d)?;
        let (a, b) = if has_los {
            (self.los_intercept_db, self.los_slope_db)
        } else {
            (self.nlos_intercept_db, self.nlos_slope_db)
        };
        Ok(a - b * d.log10() + shadow_db)
    }
}

/// LoS probability under the default model.
pub fn los_probability(d: f64) -> Result<f64> {
    LargeScaleParams::default().los_probability(d)
}

/// Rician factor (linear) under the default model.
pub fn rician_k(d: f64, has_los: bool) -> Result<f64> {
    LargeScaleParams::default().rician_k(d, has_los)
}

/// Path gain in dB under the default COST-231 constants.
pub fn path_loss_db(d: f64, has_los: bool, shadow_db: f64) -> Result<f64> {
    LargeScaleParams::default().path_loss_db(d, has_los, shadow_db)
}

/// LoS and NLoS amplitude weights `(√(K/(K+1)), √(1/(K+1)))`.
pub fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

fn correlation(points: &[Point3], d_decorr: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |a, b| 2f64.powf(-(points[a] - points[b]).norm() / d_decorr))
}

/// Distances, LoS phases and shadowing factorizations for one activation
/// pattern, reused across every draw on that geometry.
#[derive(Debug, Clone)]
pub struct LinkGeometry<T: Real> {
    params: LargeScaleParams,
    n_a: usize,
    /// `N_r × N_t` link distances (m).
    pub distance: DMatrix<f64>,
    /// `N_r × N_t` unit-modulus LoS components.
    pub h_bar: DMatrix<Cx<T>>,
    /// Square root of the transmit-side shadowing correlation.
    tx_sqrt: DMatrix<f64>,
    /// Square root of the receive-side shadowing correlation.
    rx_sqrt: DMatrix<f64>,
}

impl<T: Real> LinkGeometry<T> {
    pub fn new(
        pattern: &ActivationPattern,
        geom: &DeploymentGeometry,
        params: &LargeScaleParams,
    ) -> Result<Self> {
        params.validate()?;
        let tx: Vec<Point3> = pattern.flat().copied().collect();
        let rx = &geom.receiver_elements;
        let distance = DMatrix::from_fn(rx.len(), tx.len(), |j, k| (rx[j] - tx[k]).norm());
        if let Some(&d) = distance.iter().find(|d| !(**d > 0.0)) {
            return Err(PasmError::NonPositiveDistance(d));
        }
        let lambda = geom.wavelength;
        let h_bar = distance.map(|d| {
            let theta = -2.0 * std::f64::consts::PI * (d / lambda).rem_euclid(1.0);
            Cx::new(T::lit(theta.cos()), T::lit(theta.sin()))
        });
        let tx_sqrt = psd_sqrt(&correlation(&tx, params.d_decorr), 1e-10)?;
        let rx_sqrt = psd_sqrt(&correlation(rx, params.d_decorr), 1e-10)?;
        Ok(Self { params: params.clone(), n_a: pattern.n_a(), distance, h_bar, tx_sqrt, rx_sqrt })
    }

    pub fn from_config(pattern: &ActivationPattern, geom: &DeploymentGeometry, cfg: &PasmConfig) -> Result<Self> {
        Self::new(pattern, geom, &cfg.large_scale)
    }

    pub fn n_r(&self) -> usize {
        self.distance.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.distance.ncols()
    }

    pub fn params(&self) -> &LargeScaleParams {
        &self.params
    }

    /// Shadowing field `F[j,k] = √ξ·e_k + √(1−ξ)·b_j` in dB.
    pub fn draw_shadow_field<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let sigma = self.params.sigma_db;
        let e = &self.tx_sqrt * sample_normal_vec::<f64, _>(self.n_t(), rng) * sigma;
        let b = &self.rx_sqrt * sample_normal_vec::<f64, _>(self.n_r(), rng) * sigma;
        let (se, sb) = (self.params.xi.sqrt(), (1.0 - self.params.xi).sqrt());
        DMatrix::from_fn(self.n_r(), self.n_t(), |j, k| se * e[k] + sb * b[j])
    }

    /// Draws shadowing and LoS states and derives `β` and `K` per link.
    pub fn draw_large_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> LargeScaleState<T> {
        let shadow_db = self.draw_shadow_field(rng);
        let ov = &self.params.overrides;
        let (n_r, n_t) = (self.n_r(), self.n_t());
        let mut los = DMatrix::from_element(n_r, n_t, false);
        for k in 0..n_t {
            for j in 0..n_r {
                let p = self.params.los_probability(self.distance[(j, k)]).unwrap_or(0.0);
                let u: f64 = rng.random();
                los[(j, k)] = ov.los.unwrap_or(u < p);
            }
        }
        let mut k_factor = DMatrix::zeros(n_r, n_t);
        let mut beta_db = DMatrix::zeros(n_r, n_t);
        for k in 0..n_t {
            for j in 0..n_r {
                let d = self.distance[(j, k)];
                let kf = match ov.rician_k {
                    Some(v) => v,
                    None => self.params.rician_k(d, los[(j, k)]).unwrap_or(0.0),
                };
                k_factor[(j, k)] = kf;
                beta_db[(j, k)] = match ov.beta_db {
                    Some(b) => b,
                    None => self
                        .params
                        .path_loss_db(d, kf != 0.0, shadow_db[(j, k)])
                        .unwrap_or(f64::NEG_INFINITY),
                };
            }
        }
        LargeScaleState::assemble(shadow_db, los, k_factor, beta_db, self.h_bar.clone(), self.n_a)
    }

    /// Large-scale and small-scale draw from one RNG.
    pub fn draw_channel<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization<T> {
        let large = Arc::new(self.draw_large_scale(rng));
        ChannelRealization::draw(large, rng)
    }
}

/// Large-scale quantities of one realization; constant over a fading block.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleState<T: Real> {
    pub n_a: usize,
    pub shadow_db: DMatrix<f64>,
    pub los: DMatrix<bool>,
    pub k_factor: DMatrix<f64>,
    pub beta_db: DMatrix<f64>,
    /// Amplitude factors `B = √β` (linear).
    pub b: DMatrix<T>,
    pub k_los: DMatrix<T>,
    pub k_nlos: DMatrix<T>,
    pub h_bar: DMatrix<Cx<T>>,
    /// Deterministic part `B ⊙ K_LoS ⊙ H̄`.
    pub mean: DMatrix<Cx<T>>,
    /// Scattered amplitude `B ⊙ K_NLoS`.
    pub scatter: DMatrix<T>,
}

impl<T: Real> LargeScaleState<T> {
    pub fn assemble(
        shadow_db: DMatrix<f64>,
        los: DMatrix<bool>,
        k_factor: DMatrix<f64>,
        beta_db: DMatrix<f64>,
        h_bar: DMatrix<Cx<T>>,
        n_a: usize,
    ) -> Self {
        let b = beta_db.map(|db| T::lit(10f64.powf(db / 20.0)));
        let k_los = k_factor.map(|k| T::lit(rician_weights(k).0));
        let k_nlos = k_factor.map(|k| T::lit(rician_weights(k).1));
        let mean = DMatrix::from_fn(b.nrows(), b.ncols(), |j, k| {
            h_bar[(j, k)] * (b[(j, k)] * k_los[(j, k)])
        });
        let scatter = b.component_mul(&k_nlos);
        Self { n_a, shadow_db, los, k_factor, beta_db, b, k_los, k_nlos, h_bar, mean, scatter }
    }

    pub fn n_r(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.b.ncols()
    }

    /// Exact mean and covariance of `u = vec(Hᴴ)` given this state.
    pub fn moments(&self) -> ChannelMoments<T> {
        channel_moments(self)
    }
}

/// One channel realization `H` with its constituent factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    pub large: Arc<LargeScaleState<T>>,
    /// Scattered components `Ĥ`.
    pub nlos: DMatrix<Cx<T>>,
    pub h: DMatrix<Cx<T>>,
}

impl<T: Real> ChannelRealization<T> {
    /// Draws `Ĥ` and composes `H` on a fixed large-scale state.
    pub fn draw<R: Rng + ?Sized>(large: Arc<LargeScaleState<T>>, rng: &mut R) -> Self {
        let (n_r, n_t) = (large.n_r(), large.n_t());
        let nlos = DMatrix::from_fn(n_r, n_t, |_, _| sample_cn::<T, _>(rng));
        Self::compose(large, nlos)
    }

    pub fn compose(large: Arc<LargeScaleState<T>>, nlos: DMatrix<Cx<T>>) -> Self {
        let h = DMatrix::from_fn(nlos.nrows(), nlos.ncols(), |j, k| {
            large.mean[(j, k)] + nlos[(j, k)] * large.scatter[(j, k)]
        });
        Self { large, nlos, h }
    }

    /// Sub-channel `H_m` of waveguide `m`.
    pub fn block(&self, m: usize) -> DMatrix<Cx<T>> {
        let n_a = self.large.n_a;
        self.h.columns(m * n_a, n_a).into_owned()
    }
}

/// Correlated shadowing field for a pattern, in dB.
pub fn draw_shadow_field<R: Rng + ?Sized>(
    pattern: &ActivationPattern,
    geom: &DeploymentGeometry,
    params: &LargeScaleParams,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    Ok(LinkGeometry::<f64>::new(pattern, geom, params)?.draw_shadow_field(rng))
}

/// Draws a full channel realization for a pattern.
pub fn draw_channel<T: Real, R: Rng + ?Sized>(
    pattern: &ActivationPattern,
    geom: &DeploymentGeometry,
    params: &LargeScaleParams,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    Ok(LinkGeometry::<T>::new(pattern, geom, params)?.draw_channel(rng))
}

/// Mean `ū` and covariance `C_u` of `u = vec(Hᴴ)` conditioned on the
/// large-scale state.
///
/// `ū = vec((B ⊙ K_LoS ⊙ H̄)ᴴ)`. The covariance is assembled per waveguide
/// on `vec(H_m*)` and permuted into `vec(Hᴴ)` order with the commutation
/// matrix. Scattered entries are independent, so each block is diagonal with
/// entries `β·K_NLoS²`.
pub fn channel_moments<T: Real>(state: &LargeScaleState<T>) -> ChannelMoments<T> {
    let (n_r, n_t) = (state.n_r(), state.n_t());
    let n_a = state.n_a;
    let n = n_r * n_t;
    let u_bar = DVector::from_fn(n, |idx, _| {
        let (j, k) = (idx / n_t, idx % n_t);
        state.mean[(j, k)].conj()
    });
    // Covariance of vec(H*) with waveguide blocks on the diagonal.
    let mut blocks = DMatrix::<Cx<T>>::zeros(n, n);
    for m in 0..n_t / n_a {
        for i in 0..n_a {
            for j in 0..n_r {
                let k = m * n_a + i;
                let idx = k * n_r + j;
                let s = state.scatter[(j, k)];
                blocks[(idx, idx)] = Cx::new(s * s, T::zero());
            }
        }
    }
    let perm = commutation_matrix::<T>(n_r, n_t);
    let c_u = &perm * blocks * perm.transpose();
    ChannelMoments { n_r, n_t, u_bar, c_u }
}
