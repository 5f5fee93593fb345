use crate::detect::DetectorKind;
use crate::PasmConfig;

/// Real-operation weights of the complexity model.
///
/// A complex multiply-accumulate is 8 real operations (4 multiplies,
/// 4 additions); that is the unit for ML metric evaluation and matrix
/// inversion. The VAMP denoiser spends per composite point and antenna one
/// complex difference, one squared magnitude, one weighted accumulation of
/// the mean and one of the second moment, about 14 operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlopModel {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for FlopModel {
    fn default() -> Self {
        Self { c: 8.0, c1: 8.0, c2: 14.0 }
    }
}

impl FlopModel {
    pub fn estimate(&self, kind: DetectorKind, cfg: &PasmConfig, iterations: usize) -> f64 {
        let n_t = cfg.n_t() as f64;
        let n_r = cfg.n_r as f64;
        let (m_b, m_p) = (cfg.m_b as f64, cfg.m_p as f64);
        let (n_wg, n_a) = (cfg.n_wg as f64, cfg.n_a as f64);
        match kind {
            DetectorKind::Ml => self.c * n_r * n_t * m_b.powf(n_wg) * m_p.powf(n_t - n_wg),
            DetectorKind::Vamp => {
                iterations as f64
                    * (self.c1 * n_t.powi(3) + self.c2 * n_wg * n_a * m_b * m_p.powf(n_a - 1.0))
            }
            DetectorKind::Zf | DetectorKind::Mmse => self.c * n_t.powi(3),
            DetectorKind::SicZf | DetectorKind::SicMmse => (0..cfg.n_wg)
                .map(|s| self.c * ((cfg.n_wg - s) as f64 * n_a).powi(3))
                .sum(),
        }
    }
}

/// Dominant-term operation count with the default [`FlopModel`].
pub fn flop_estimate(kind: DetectorKind, cfg: &PasmConfig, iterations: usize) -> f64 {
    FlopModel::default().estimate(kind, cfg, iterations)
}
