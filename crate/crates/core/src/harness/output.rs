use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::SweepConfig;
use crate::Result;

/// Exact CSV header of every results file.
pub const CSV_HEADER: &str = "power_dbm,detector,frames,bits,errors,ber,ci95,iters_mean,seconds";

/// One (power, detector) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub power_dbm: f64,
    pub detector: String,
    pub frames: u64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Half-width of the 95 % normal-approximation binomial interval.
    pub ci95: f64,
    pub iters_mean: f64,
    pub seconds: f64,
}

impl BerRecord {
    pub fn from_counts(power_dbm: f64, detector: &str, frames: u64, bits: u64, errors: u64, iters: u64, seconds: f64) -> Self {
        let ber = if bits == 0 { 0.0 } else { errors as f64 / bits as f64 };
        let ci95 = if bits == 0 { 0.0 } else { 1.96 * (ber * (1.0 - ber) / bits as f64).sqrt() };
        let iters_mean = if frames == 0 { 0.0 } else { iters as f64 / frames as f64 };
        Self { power_dbm, detector: detector.to_string(), frames, bits, errors, ber, ci95, iters_mean, seconds }
    }

    pub fn lower(&self) -> f64 {
        (self.ber - self.ci95).max(0.0)
    }

    pub fn upper(&self) -> f64 {
        self.ber + self.ci95
    }
}

/// Renders records as CSV text, header included.
pub fn to_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6e},{:.6e},{:.3},{:.3}",
            r.power_dbm, r.detector, r.frames, r.bits, r.errors, r.ber, r.ci95, r.iters_mean, r.seconds
        );
    }
    out
}

pub fn write_csv(path: &Path, records: &[BerRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_csv(records))?;
    Ok(())
}

/// Companion metadata path: `results.csv` → `results.meta.toml`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.toml")
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    wall_seconds: f64,
    config: &'a SweepConfig,
}

/// Writes the resolved configuration, seed and wall time next to `csv`.
pub fn write_metadata(csv: &Path, command: &str, cfg: &SweepConfig, wall_seconds: f64) -> Result<PathBuf> {
    let meta = Metadata { command, version: env!("CARGO_PKG_VERSION"), seed: cfg.seed, wall_seconds, config: cfg };
    let text = toml::to_string_pretty(&meta).map_err(|e| crate::PasmError::Io(e.to_string()))?;
    let path = metadata_path(csv);
    fs::write(&path, text)?;
    Ok(path)
}
