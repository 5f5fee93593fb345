use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Baseline, BerRecord, SweepConfig};
use crate::analysis::{union_bound_ber, PepMethod};
use crate::channel::{ChannelRealization, LargeScaleState, LinkGeometry};
use crate::detect::{detect, effective_channel, DetectorKind, VampParams};
use crate::linalg::sample_cn;
use crate::modem::{build_constellation, map_bits, spectral_efficiency, CompositeConstellation};
use crate::scene::{build_deployment, select_activation, ActivationPattern, DeploymentGeometry, Point3};
use crate::{PasmConfig, Result};

const TAG_FRAME: u64 = 1;
const TAG_LARGE: u64 = 2;

/// Generator for substream `(tag, point, index)` of `seed`.
///
/// Each substream is a distinct ChaCha stream, so draws never depend on
/// scheduling or on how many other substreams were consumed.
pub fn substream(seed: u64, tag: u64, point: u64, index: u64) -> ChaCha8Rng {
    debug_assert!(point < 1 << 20 && index < 1 << 40);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 60) | (point << 40) | index);
    rng
}

/// Geometry, link cache and constellation shared by every frame of a run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: PasmConfig,
    pub geometry: DeploymentGeometry,
    pub pattern: ActivationPattern,
    pub link: LinkGeometry<f64>,
    pub constellation: CompositeConstellation<f64>,
}

impl Scenario {
    pub fn new(system: &PasmConfig, baseline: Baseline) -> Result<Self> {
        let geometry = build_deployment(system)?;
        let pattern = match baseline {
            Baseline::Pasm => select_activation(&geometry, &Point3::from(system.user_center), system)?,
            Baseline::Pssm => ActivationPattern::uniform_array(&geometry, system),
        };
        let link = LinkGeometry::new(&pattern, &geometry, &system.large_scale)?;
        let constellation = build_constellation(system)?;
        Ok(Self { system: system.clone(), geometry, pattern, link, constellation })
    }

    /// Large-scale state of block `block`; identical for every power point.
    pub fn large_scale(&self, seed: u64, block: u64) -> LargeScaleState<f64> {
        self.link.draw_large_scale(&mut substream(seed, TAG_LARGE, 0, block))
    }

    pub fn large_scale_blocks(&self, seed: u64, blocks: u64) -> Vec<Arc<LargeScaleState<f64>>> {
        (0..blocks).into_par_iter().map(|b| Arc::new(self.large_scale(seed, b))).collect()
    }
}

/// Per-detector outcome of one frame.
#[derive(Debug, Clone, Copy, Default)]
struct Outcome {
    errors: u64,
    iterations: u64,
    seconds: f64,
}

/// Simulates one frame and runs each requested detector on the same `y`.
/// `None` entries mark detectors that are skipped for this frame.
#[allow(clippy::too_many_arguments)]
fn simulate_frame(
    scn: &Scenario,
    cfg: &PasmConfig,
    large: &Arc<LargeScaleState<f64>>,
    rng: &mut ChaCha8Rng,
    detectors: &[Option<DetectorKind>],
    vamp: &VampParams<f64>,
    timing: bool,
) -> Result<Vec<Outcome>> {
    let eta = spectral_efficiency(cfg);
    let bits: Vec<u8> = (0..eta).map(|_| rng.random_range(0..2u8)).collect();
    let frame = map_bits(&bits, cfg, &scn.constellation)?;
    let ch = ChannelRealization::draw(large.clone(), rng);
    let sigma = cfg.noise_w.sqrt();
    let noise = DVector::from_fn(cfg.n_r, |_, _| sample_cn::<f64, _>(rng) * sigma);
    let y = effective_channel(&ch.h, cfg) * &frame.x + noise;
    detectors
        .iter()
        .map(|kind| {
            let Some(kind) = kind else { return Ok(Outcome::default()) };
            let start = timing.then(Instant::now);
            let r = detect(*kind, &y, &ch.h, cfg, &scn.constellation, vamp)?;
            let errors = r.bits.iter().zip(&bits).filter(|(a, b)| a != b).count() as u64;
            Ok(Outcome {
                errors,
                iterations: r.iterations as u64,
                seconds: start.map_or(0.0, |s| s.elapsed().as_secs_f64()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct Tally {
    frames: u64,
    errors: u64,
    iterations: u64,
    seconds: f64,
    done: bool,
}

/// Runs the Monte-Carlo sweep described by `sc`.
///
/// For power point `p` and frame `f` the bits, small-scale fading and noise
/// come from substream `(p, f)`; the large-scale state comes from block
/// `f / block_frames` and is shared by every power point. Frames are
/// processed in chunks of `chunk_frames` in parallel, and early stopping is
/// decided only at chunk boundaries, so results do not depend on the number
/// of threads.
pub fn run_sweep(sc: &SweepConfig) -> Result<Vec<BerRecord>> {
    sc.validate()?;
    let scn = Scenario::new(&sc.system, sc.baseline)?;
    let blocks = scn.large_scale_blocks(sc.seed, sc.blocks());
    let vamp = sc.vamp.params();
    let eta = spectral_efficiency(&sc.system) as u64;
    let mut records = Vec::new();
    for (p, &power) in sc.powers_dbm.iter().enumerate() {
        let cfg = sc.system.clone().with_power_dbm(power);
        let mut tallies = vec![Tally::default(); sc.detectors.len()];
        let mut start = 0;
        while start < sc.frames && tallies.iter().any(|t| !t.done) {
            let end = (start + sc.chunk_frames).min(sc.frames);
            let outcomes: Vec<Vec<Outcome>> = (start..end)
                .into_par_iter()
                .map(|f| {
                    let active: Vec<Option<DetectorKind>> = sc
                        .detectors
                        .iter()
                        .zip(&tallies)
                        .map(|(&k, t)| {
                            let capped = k == DetectorKind::Ml && sc.ml_max_frames.is_some_and(|c| f >= c);
                            (!t.done && !capped).then_some(k)
                        })
                        .collect();
                    let mut rng = substream(sc.seed, TAG_FRAME, p as u64, f);
                    let large = &blocks[(f / sc.block_frames) as usize];
                    simulate_frame(&scn, &cfg, large, &mut rng, &active, &vamp, sc.timing)
                })
                .collect::<Result<_>>()?;
            for (d, t) in tallies.iter_mut().enumerate() {
                if t.done {
                    continue;
                }
                let kind = sc.detectors[d];
                for (f, o) in (start..end).zip(&outcomes) {
                    let capped = kind == DetectorKind::Ml && sc.ml_max_frames.is_some_and(|c| f >= c);
                    if !capped {
                        t.frames += 1;
                        t.errors += o[d].errors;
                        t.iterations += o[d].iterations;
                        t.seconds += o[d].seconds;
                    }
                }
                let capped = kind == DetectorKind::Ml && sc.ml_max_frames.is_some_and(|c| end >= c);
                if capped || (sc.max_bit_errors > 0 && t.errors >= sc.max_bit_errors) {
                    t.done = true;
                }
            }
            start = end;
        }
        for (d, t) in tallies.into_iter().enumerate() {
            records.push(BerRecord::from_counts(
                power,
                sc.detectors[d].name(),
                t.frames,
                t.frames * eta,
                t.errors,
                t.iterations,
                t.seconds,
            ));
        }
    }
    Ok(records)
}

/// The same sweep with the fixed-array transmitter.
pub fn run_pssm_baseline(sc: &SweepConfig) -> Result<Vec<BerRecord>> {
    run_sweep(&SweepConfig { baseline: Baseline::Pssm, ..sc.clone() })
}

/// Union bound averaged over large-scale draws.
///
/// The draws are the simulation's own blocks `0..draws`, so a bound and a
/// sweep with the same seed are conditioned on the same large-scale states.
/// `ci95` carries 1.96 standard errors of the average across draws.
pub fn run_bound(sc: &SweepConfig) -> Result<Vec<BerRecord>> {
    sc.validate()?;
    let scn = Scenario::new(&sc.system, sc.baseline)?;
    let draws = if sc.bound.draws == 0 { sc.blocks() } else { sc.bound.draws as u64 };
    let moments: Vec<_> = scn.large_scale_blocks(sc.seed, draws).iter().map(|s| s.moments()).collect();
    let opts = sc.bound.options();
    let name = match opts.method {
        PepMethod::Exact => "BOUND",
        PepMethod::Approx => "BOUND-APPROX",
    };
    let mut records = Vec::new();
    for &power in &sc.powers_dbm {
        let start = Instant::now();
        let cfg = sc.system.clone().with_power_dbm(power);
        let values: Vec<f64> = moments
            .iter()
            .map(|m| Ok(union_bound_ber(&cfg, m, cfg.delta(), cfg.noise_w, &opts)?.ber))
            .collect::<Result<_>>()?;
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        records.push(BerRecord {
            power_dbm: power,
            detector: name.to_string(),
            frames: draws,
            bits: 0,
            errors: 0,
            ber: mean,
            ci95: 1.96 * (var / n).sqrt(),
            iters_mean: 0.0,
            seconds: if sc.timing { start.elapsed().as_secs_f64() } else { 0.0 },
        });
    }
    Ok(records)
}

/// PASM and PSSM curves for the same configuration.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub pasm: Vec<BerRecord>,
    pub pssm: Vec<BerRecord>,
}

impl Comparison {
    /// Combined records with detector names prefixed by the architecture.
    pub fn records(&self) -> Vec<BerRecord> {
        let tag = |b: Baseline, r: &BerRecord| BerRecord { detector: format!("{}-{}", b.label(), r.detector), ..r.clone() };
        self.pasm
            .iter()
            .map(|r| tag(Baseline::Pasm, r))
            .chain(self.pssm.iter().map(|r| tag(Baseline::Pssm, r)))
            .collect()
    }

    /// Horizontal gap (dB) between the two curves of `detector` at `target`.
    pub fn gap_db(&self, detector: &str, target: f64) -> Option<f64> {
        let a = crossing_power(&self.pasm, detector, target)?;
        let b = crossing_power(&self.pssm, detector, target)?;
        Some(b - a)
    }
}

pub fn compare(sc: &SweepConfig) -> Result<Comparison> {
    Ok(Comparison {
        pasm: run_sweep(&SweepConfig { baseline: Baseline::Pasm, ..sc.clone() })?,
        pssm: run_pssm_baseline(sc)?,
    })
}

/// First power at which the BER curve of `detector` falls through `target`,
/// interpolating `log10(BER)` linearly between grid points.
pub fn crossing_power(records: &[BerRecord], detector: &str, target: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.detector == detector)
        .map(|r| (r.power_dbm, r.ber))
        .collect();
    let lt = target.log10();
    for w in pts.windows(2) {
        let ((p0, b0), (p1, b1)) = (w[0], w[1]);
        if b0 >= target && b1 < target {
            let l0 = b0.log10();
            let l1 = b1.max(1e-300).log10();
            return Some(p0 + (lt - l0) / (l1 - l0) * (p1 - p0));
        }
    }
    None
}

/// Average transmitted energy `δ·E‖x‖²` over every bit word.
pub fn mean_transmit_energy(cfg: &PasmConfig) -> Result<f64> {
    let book = crate::analysis::codebook::<f64>(cfg)?;
    let total: f64 = book.iter().map(|x| x.norm_squared()).sum();
    Ok(cfg.delta() * total / book.len() as f64)
}
