use serde::{Deserialize, Serialize};

use crate::analysis::{BoundOptions, PepMethod};
use crate::detect::{DetectorKind, VampParams};
use crate::{PasmConfig, PasmError, Result};

/// Transmitter geometry being simulated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Pinching antennas activated next to the user.
    #[default]
    Pasm,
    /// Fixed half-wavelength array at the region center.
    Pssm,
}

impl Baseline {
    pub fn label(self) -> &'static str {
        match self {
            Baseline::Pasm => "PASM",
            Baseline::Pssm => "PSSM",
        }
    }
}

/// VAMP settings in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VampSettings {
    pub t_max: usize,
    pub damping: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub tol: f64,
}

impl Default for VampSettings {
    fn default() -> Self {
        let p = VampParams::<f64>::default();
        Self { t_max: p.t_max, damping: p.damping, gamma_min: p.gamma_min, gamma_max: p.gamma_max, tol: p.tol }
    }
}

impl VampSettings {
    pub fn params(&self) -> VampParams<f64> {
        VampParams {
            t_max: self.t_max,
            damping: self.damping,
            gamma_min: self.gamma_min,
            gamma_max: self.gamma_max,
            tol: self.tol,
        }
    }
}

/// Union-bound evaluation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSettings {
    /// Large-scale realizations averaged per power point; `0` reuses every
    /// block the simulation would draw.
    pub draws: usize,
    pub method: PepMethod,
    pub max_pairs: u64,
    pub truncate: bool,
    pub quadrature_order: usize,
}

impl Default for BoundSettings {
    fn default() -> Self {
        let o = BoundOptions::default();
        Self {
            draws: 100,
            method: o.method,
            max_pairs: o.max_pairs,
            truncate: o.truncate,
            quadrature_order: o.quadrature_order,
        }
    }
}

impl BoundSettings {
    pub fn options(&self) -> BoundOptions {
        BoundOptions {
            method: self.method,
            max_pairs: self.max_pairs,
            truncate: self.truncate,
            quadrature_order: self.quadrature_order,
        }
    }
}

/// Complete description of one Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub name: String,
    pub seed: u64,
    pub baseline: Baseline,
    pub detectors: Vec<DetectorKind>,
    pub powers_dbm: Vec<f64>,
    /// Frames per power point.
    pub frames: u64,
    /// Frames sharing one large-scale draw; `1` redraws every frame.
    pub block_frames: u64,
    /// Stop a detector at a power point after this many bit errors; `0`
    /// disables early stopping.
    pub max_bit_errors: u64,
    /// Frames per deterministic work unit; early stopping is checked
    /// between units.
    pub chunk_frames: u64,
    /// Cap on frames given to the ML detector.
    pub ml_max_frames: Option<u64>,
    /// Record wall time in the CSV `seconds` column.
    pub timing: bool,
    pub system: PasmConfig,
    pub vamp: VampSettings,
    pub bound: BoundSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            seed: 1,
            baseline: Baseline::Pasm,
            detectors: vec![DetectorKind::Ml],
            powers_dbm: vec![0.0, 10.0, 20.0],
            frames: 10_000,
            block_frames: 100,
            max_bit_errors: 500,
            chunk_frames: 250,
            ml_max_frames: None,
            timing: false,
            system: PasmConfig::default(),
            vamp: VampSettings::default(),
            bound: BoundSettings::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(PasmError::InvalidConfig(s.to_string()));
        if self.frames == 0 {
            return bad("frames must be at least 1");
        }
        if self.powers_dbm.is_empty() || self.powers_dbm.iter().any(|p| !p.is_finite()) {
            return bad("power grid must be a nonempty list of finite values");
        }
        if self.detectors.is_empty() {
            return bad("at least one detector is required");
        }
        if self.block_frames == 0 || self.chunk_frames == 0 {
            return bad("block_frames and chunk_frames must be at least 1");
        }
        self.system.validate()?;
        self.vamp.params().validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| PasmError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }

    /// Number of large-scale blocks covering `frames`.
    pub fn blocks(&self) -> u64 {
        self.frames.div_ceil(self.block_frames)
    }

    /// Built-in reproduction recipe by name.
    pub fn profile(name: &str) -> Result<Self> {
        let base = SweepConfig::default();
        let sys = PasmConfig::default();
        let all = DetectorKind::ALL.to_vec();
        let cfg = match name {
            "fig4" => SweepConfig {
                name: name.into(),
                detectors: vec![DetectorKind::Ml],
                powers_dbm: grid(-30.0, 40.0, 5.0),
                frames: 100_000,
                max_bit_errors: 0,
                system: PasmConfig { n_wg: 1, n_a: 2, n_r: 2, m_b: 2, m_p: 2, ..sys },
                bound: BoundSettings { draws: 0, ..BoundSettings::default() },
                ..base
            },
            "fig5" => SweepConfig {
                name: name.into(),
                detectors: vec![DetectorKind::Ml],
                powers_dbm: grid(-30.0, 60.0, 5.0),
                frames: 20_000,
                max_bit_errors: 0,
                system: PasmConfig { n_wg: 1, n_a: 2, n_r: 2, m_b: 4, m_p: 4, ..sys },
                ..base
            },
            "fig6a" => SweepConfig {
                name: name.into(),
                detectors: all,
                powers_dbm: grid(0.0, 40.0, 5.0),
                frames: 10_000,
                ml_max_frames: Some(1_000),
                system: PasmConfig { n_wg: 1, n_a: 4, n_r: 4, m_b: 16, m_p: 4, ..sys },
                ..base
            },
            "fig6b" => SweepConfig {
                name: name.into(),
                detectors: all,
                powers_dbm: grid(0.0, 40.0, 5.0),
                frames: 10_000,
                ml_max_frames: Some(1_000),
                system: PasmConfig { n_wg: 1, n_a: 4, n_r: 6, m_b: 16, m_p: 4, ..sys },
                ..base
            },
            "fig9" => SweepConfig {
                name: name.into(),
                detectors: vec![DetectorKind::Ml],
                powers_dbm: grid(-10.0, 20.0, 5.0),
                frames: 10_000,
                max_bit_errors: 0,
                system: PasmConfig { n_wg: 1, n_a: 4, n_r: 4, m_b: 4, m_p: 4, ..sys },
                ..base
            },
            _ => {
                return Err(PasmError::InvalidArgument(format!(
                    "unknown profile '{name}' (expected one of {})",
                    PROFILES.join(", ")
                )))
            }
        };
        Ok(cfg)
    }
}

/// Names accepted by [`SweepConfig::profile`].
pub const PROFILES: [&str; 5] = ["fig4", "fig5", "fig6a", "fig6b", "fig9"];

/// Inclusive arithmetic grid.
pub fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| start + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_validate_and_round_trip() {
        for p in PROFILES {
            let cfg = SweepConfig::profile(p).unwrap();
            cfg.validate().unwrap();
            let back = SweepConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg, "{p}");
        }
        assert!(SweepConfig::profile("fig7").is_err());
    }

    #[test]
    fn zero_frames_rejected() {
        let cfg = SweepConfig { frames: 0, ..SweepConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(grid(0.0, 10.0, 5.0), vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = SweepConfig::from_toml("frames = 10\n[system]\nn_r = 3\n").unwrap();
        assert_eq!(cfg.frames, 10);
        assert_eq!(cfg.system.n_r, 3);
        assert_eq!(cfg.system.n_a, 2);
    }
}
