//! Detectors for the PASM link `y = √δ·H·x + n`.
//!
//! Every detector works on the effective channel `√δ·H` and returns a
//! [`DetectionResult`] with the decoded bit word and per-bit LLRs in
//! bit-word order. Hard-decision detectors report LLRs of `±LLR_CLIP`.

mod linear;
mod ml;
mod vamp;

pub use linear::{linear_detect, linear_estimate, recover_symbols, sic_detect, LinearKind};
pub use ml::{ml_detect, ml_detect_with_guard, ML_GUARD};
pub use vamp::{
    compute_llrs, denoise_waveguide, lmmse_stage, vamp_detect, vamp_iterate, Denoised, LmmseStage, VampParams,
    VampState,
};

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::modem::{bits_from_labels, CompositeConstellation};
use crate::{Cx, PasmConfig, PasmError, Real, Result};

/// Magnitude at which LLRs are clipped.
pub const LLR_CLIP: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult<T: Real> {
    pub bits: Vec<u8>,
    /// Baseband-bit LLRs, `N_wg·log2 M_b` entries; positive favors 1.
    pub llr_apm: Vec<T>,
    /// Phase-bit LLRs, `N_wg·(N_a−1)·log2 M_p` entries.
    pub llr_phase: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> DetectionResult<T> {
    /// Result of a hard decision on composite labels.
    pub fn from_labels(labels: &[usize], cfg: &PasmConfig) -> Self {
        let bits = bits_from_labels(labels, cfg);
        let split = cfg.n_wg * cfg.apm_bits();
        let llr = |b: &u8| T::lit(if *b == 1 { LLR_CLIP } else { -LLR_CLIP });
        Self {
            llr_apm: bits[..split].iter().map(llr).collect(),
            llr_phase: bits[split..].iter().map(llr).collect(),
            bits,
            iterations: 0,
            converged: true,
        }
    }
}

/// Detector selector used by the harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    Ml,
    Zf,
    Mmse,
    SicZf,
    SicMmse,
    Vamp,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Ml,
        DetectorKind::Zf,
        DetectorKind::Mmse,
        DetectorKind::SicZf,
        DetectorKind::SicMmse,
        DetectorKind::Vamp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Ml => "ML",
            DetectorKind::Zf => "ZF",
            DetectorKind::Mmse => "MMSE",
            DetectorKind::SicZf => "SIC-ZF",
            DetectorKind::SicMmse => "SIC-MMSE",
            DetectorKind::Vamp => "VAMP",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = PasmError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
            .ok_or_else(|| PasmError::InvalidArgument(format!("unknown detector '{s}'")))
    }
}

/// `√δ·H`.
pub fn effective_channel<T: Real>(h: &DMatrix<Cx<T>>, cfg: &PasmConfig) -> DMatrix<Cx<T>> {
    h * Cx::new(T::lit(cfg.delta().sqrt()), T::zero())
}

pub(crate) fn check_dims<T: Real>(y: &DVector<Cx<T>>, h: &DMatrix<Cx<T>>, cfg: &PasmConfig) -> Result<()> {
    if h.shape() != (cfg.n_r, cfg.n_t()) || y.len() != cfg.n_r {
        return Err(PasmError::Dimension(format!(
            "expected y of length {} and H of shape {}×{}, got {} and {}×{}",
            cfg.n_r,
            cfg.n_r,
            cfg.n_t(),
            y.len(),
            h.nrows(),
            h.ncols()
        )));
    }
    Ok(())
}

/// Runs one detector.
#[allow(clippy::too_many_arguments)]
pub fn detect<T: Real>(
    kind: DetectorKind,
    y: &DVector<Cx<T>>,
    h: &DMatrix<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
    params: &VampParams<T>,
) -> Result<DetectionResult<T>> {
    match kind {
        DetectorKind::Ml => ml_detect(y, h, cfg, constellation),
        DetectorKind::Zf => linear_detect(y, h, cfg, constellation, LinearKind::Zf),
        DetectorKind::Mmse => linear_detect(y, h, cfg, constellation, LinearKind::Mmse),
        DetectorKind::SicZf => sic_detect(y, h, cfg, constellation, LinearKind::Zf),
        DetectorKind::SicMmse => sic_detect(y, h, cfg, constellation, LinearKind::Mmse),
        DetectorKind::Vamp => vamp_detect(y, h, cfg, constellation, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in DetectorKind::ALL {
            assert_eq!(k.name().parse::<DetectorKind>().unwrap(), k);
        }
        assert_eq!("sic_mmse".parse::<DetectorKind>().unwrap(), DetectorKind::SicMmse);
        assert!("foo".parse::<DetectorKind>().is_err());
    }
}
