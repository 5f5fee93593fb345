//! System configuration, composite constellations, and bit mapping.
//!
//! Bits of one channel use are laid out as
//! `[APM bits of waveguide 0 .. N_wg-1][phase bits of waveguide 0 .. N_wg-1]`;
//! within a waveguide the phase bits run over PAs `2..=N_a`, MSB first.
//! A per-waveguide composite label is `apm_label << (bp·(N_a-1)) | phase
//! labels`, which is also the index of the point in
//! [`CompositeConstellation`].

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::channel::LargeScaleParams;
use crate::scene::LaneLayout;
use crate::{Cx, PasmError, Real, Result};

/// Free-space propagation speed used to derive wavelengths (m/s).
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Complete description of one PASM link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PasmConfig {
    /// Number of waveguides (RF chains).
    pub n_wg: usize,
    /// Activated pinching antennas per waveguide.
    pub n_a: usize,
    /// Receive antennas.
    pub n_r: usize,
    /// Baseband (APM) modulation order.
    pub m_b: usize,
    /// Position-phase modulation order.
    pub m_p: usize,
    /// Total transmit power in watts.
    pub power_w: f64,
    /// Noise power in watts.
    pub noise_w: f64,
    pub carrier_hz: f64,
    /// Effective refractive index of the waveguide.
    pub n_eff: f64,
    /// Side of the square service region (m).
    pub region_side: f64,
    /// Waveguide height above the ground plane (m).
    pub wg_height: f64,
    /// Center of the receive ULA (m).
    pub user_center: [f64; 3],
    /// Receive element spacing (m); half a wavelength when unset.
    pub rx_spacing: Option<f64>,
    /// Receive array orientation (unit vector), x-axis by default.
    pub rx_axis: [f64; 3],
    pub lane_layout: LaneLayout,
    pub large_scale: LargeScaleParams,
}

impl Default for PasmConfig {
    fn default() -> Self {
        Self {
            n_wg: 1,
            n_a: 2,
            n_r: 2,
            m_b: 4,
            m_p: 4,
            power_w: 1.0,
            noise_w: dbm_to_watts(-90.0),
            carrier_hz: 3.0e9,
            n_eff: 1.4,
            region_side: 500.0,
            wg_height: 12.5,
            user_center: [400.0, 50.0, 1.5],
            rx_spacing: None,
            rx_axis: [1.0, 0.0, 0.0],
            lane_layout: LaneLayout::default(),
            large_scale: LargeScaleParams::default(),
        }
    }
}

fn is_pow2(m: usize) -> bool {
    m >= 2 && m.is_power_of_two()
}

impl PasmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(PasmError::InvalidConfig(s.to_string()));
        if self.n_wg == 0 || self.n_a == 0 || self.n_r == 0 {
            return bad("N_wg, N_a and N_r must be at least 1");
        }
        if !is_pow2(self.m_b) || !is_pow2(self.m_p) {
            return bad("M_b and M_p must be powers of two >= 2");
        }
        if !(self.power_w > 0.0) || !(self.noise_w > 0.0) {
            return bad("transmit and noise power must be positive");
        }
        if !(self.carrier_hz > 0.0) || !(self.n_eff > 0.0) {
            return bad("carrier frequency and effective index must be positive");
        }
        if !(self.region_side > 0.0) || !(self.wg_height >= 0.0) {
            return bad("region side must be positive and height non-negative");
        }
        if matches!(self.rx_spacing, Some(s) if !(s > 0.0)) {
            return bad("receive spacing must be positive");
        }
        self.large_scale.validate()
    }

    /// Total activated antennas `N_t = N_wg·N_a`.
    pub fn n_t(&self) -> usize {
        self.n_wg * self.n_a
    }

    /// Free-space wavelength `c / f_c`.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Guided wavelength `λ / n_eff`.
    pub fn guided_wavelength(&self) -> f64 {
        self.wavelength() / self.n_eff
    }

    /// Power per activated antenna, `δ = P / (N_wg·N_a)`.
    pub fn delta(&self) -> f64 {
        self.power_w / self.n_t() as f64
    }

    pub fn rx_spacing(&self) -> f64 {
        self.rx_spacing.unwrap_or(self.wavelength() / 2.0)
    }

    pub fn apm_bits(&self) -> usize {
        self.m_b.trailing_zeros() as usize
    }

    pub fn phase_bits(&self) -> usize {
        self.m_p.trailing_zeros() as usize
    }

    /// Bits carried per waveguide (its composite label width).
    pub fn bits_per_waveguide(&self) -> usize {
        self.apm_bits() + (self.n_a - 1) * self.phase_bits()
    }

    /// Sets the transmit power from dBm.
    pub fn with_power_dbm(mut self, dbm: f64) -> Self {
        self.power_w = dbm_to_watts(dbm);
        self
    }
}

/// Bits per channel use, `η = N_wg·log2 M_b + (N_t − N_wg)·log2 M_p`.
pub fn spectral_efficiency(cfg: &PasmConfig) -> usize {
    cfg.n_wg * cfg.apm_bits() + (cfg.n_t() - cfg.n_wg) * cfg.phase_bits()
}

/// Phase accumulated by the guided wave over `offset_m` meters.
pub fn waveguide_phase<T: Real>(offset_m: f64, cfg: &PasmConfig) -> Cx<T> {
    debug_assert!(offset_m >= 0.0);
    let turns = (offset_m / cfg.guided_wavelength()).rem_euclid(1.0);
    let theta = -2.0 * std::f64::consts::PI * turns;
    Cx::new(T::lit(theta.cos()), T::lit(theta.sin()))
}

/// One entry of the position-phase alphabet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSymbol<T> {
    /// Micro-displacement along the waveguide that realizes the phase (m).
    pub offset_m: f64,
    pub factor: Cx<T>,
}

/// The `M_p` phases realizable by displacing a PA by `k·λ_g/M_p`, indexed by
/// displacement step `k`.
pub fn phase_alphabet<T: Real>(cfg: &PasmConfig) -> Vec<PhaseSymbol<T>> {
    let step = cfg.guided_wavelength() / cfg.m_p as f64;
    (0..cfg.m_p)
        .map(|k| {
            let offset_m = k as f64 * step;
            PhaseSymbol { offset_m, factor: waveguide_phase(offset_m, cfg) }
        })
        .collect()
}

fn gray_inverse(mut g: usize) -> usize {
    let mut k = g;
    while g > 1 {
        g >>= 1;
        k ^= g;
    }
    k
}

/// Unit-average-power APM constellation indexed by its Gray label.
///
/// BPSK for `M_b = 2`, square Gray QAM for 4, 16 and 64.
pub fn apm_constellation<T: Real>(m_b: usize) -> Result<Vec<Cx<T>>> {
    match m_b {
        2 => Ok(vec![Cx::new(T::one(), T::zero()), Cx::new(-T::one(), T::zero())]),
        4 | 16 | 64 => {
            let half_bits = m_b.trailing_zeros() as usize / 2;
            let side = 1usize << half_bits;
            let norm = (2.0 * (m_b as f64 - 1.0) / 3.0).sqrt();
            let level = |g: usize| (2.0 * gray_inverse(g) as f64 - (side as f64 - 1.0)) / norm;
            Ok((0..m_b)
                .map(|label| {
                    let gi = label >> half_bits;
                    let gq = label & (side - 1);
                    Cx::new(T::lit(level(gi)), T::lit(level(gq)))
                })
                .collect())
        }
        _ => Err(PasmError::InvalidConfig(format!(
            "unsupported baseband order M_b = {m_b} (use 2, 4, 16 or 64)"
        ))),
    }
}

/// Phase factors indexed by Gray label: label `g` selects displacement step
/// `gray_inverse(g)`.
pub fn phase_by_label<T: Real>(cfg: &PasmConfig) -> Vec<Cx<T>> {
    let alphabet = phase_alphabet::<T>(cfg);
    (0..cfg.m_p).map(|g| alphabet[gray_inverse(g)].factor).collect()
}

/// Per-waveguide composite constellation `𝒳`.
#[derive(Debug, Clone)]
pub struct CompositeConstellation<T> {
    n_a: usize,
    apm_bits: usize,
    phase_bits: usize,
    apm: Vec<Cx<T>>,
    phases: Vec<Cx<T>>,
    /// Row-major `|𝒳| × N_a` point table.
    points: Vec<Cx<T>>,
    prior: Vec<T>,
}

impl<T: Real> CompositeConstellation<T> {
    pub fn len(&self) -> usize {
        self.prior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior.is_empty()
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    /// Label width in bits.
    pub fn label_bits(&self) -> usize {
        self.apm_bits + (self.n_a - 1) * self.phase_bits
    }

    pub fn apm_bits(&self) -> usize {
        self.apm_bits
    }

    pub fn phase_bits(&self) -> usize {
        self.phase_bits
    }

    pub fn point(&self, label: usize) -> &[Cx<T>] {
        &self.points[label * self.n_a..(label + 1) * self.n_a]
    }

    pub fn points(&self) -> impl Iterator<Item = &[Cx<T>]> {
        self.points.chunks_exact(self.n_a)
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    pub fn apm_symbols(&self) -> &[Cx<T>] {
        &self.apm
    }

    pub fn phase_symbols(&self) -> &[Cx<T>] {
        &self.phases
    }

    /// Bit `b` (MSB first) of a composite label.
    pub fn label_bit(&self, label: usize, b: usize) -> bool {
        (label >> (self.label_bits() - 1 - b)) & 1 == 1
    }

    /// Nearest composite point to `x` in Euclidean distance.
    ///
    /// For a fixed APM symbol the phase slots decouple, so the search costs
    /// `M_b·(N_a−1)·M_p` distance evaluations instead of `|𝒳|·N_a`.
    /// Ties resolve to the lowest label.
    pub fn nearest(&self, x: &[Cx<T>]) -> usize {
        debug_assert_eq!(x.len(), self.n_a);
        let mp = self.phases.len();
        let mut best = (T::max_value().unwrap(), 0usize);
        for (a, &s) in self.apm.iter().enumerate() {
            let mut cost = (x[0] - s).norm_sqr();
            let mut label = a;
            for &xi in &x[1..] {
                let mut slot = (T::max_value().unwrap(), 0usize);
                for (g, &p) in self.phases.iter().enumerate() {
                    let d = (xi - s * p).norm_sqr();
                    if d < slot.0 {
                        slot = (d, g);
                    }
                }
                cost += slot.0;
                label = label * mp + slot.1;
            }
            if cost < best.0 {
                best = (cost, label);
            }
        }
        best.1
    }
}

/// Builds `𝒳 = {[s, s·α_2, …, s·α_{N_a}]}` with uniform prior.
pub fn build_constellation<T: Real>(cfg: &PasmConfig) -> Result<CompositeConstellation<T>> {
    cfg.validate()?;
    let apm = apm_constellation::<T>(cfg.m_b)?;
    let phases = phase_by_label::<T>(cfg);
    let n_a = cfg.n_a;
    let patterns = cfg.m_p.pow((n_a - 1) as u32);
    let size = cfg.m_b * patterns;
    let mut points = Vec::with_capacity(size * n_a);
    for &s in &apm {
        for pattern in 0..patterns {
            points.push(s);
            for i in 1..n_a {
                let shift = (n_a - 1 - i) * cfg.phase_bits();
                let g = (pattern >> shift) & (cfg.m_p - 1);
                points.push(s * phases[g]);
            }
        }
    }
    let rho = T::one() / T::lit(size as f64);
    Ok(CompositeConstellation {
        n_a,
        apm_bits: cfg.apm_bits(),
        phase_bits: cfg.phase_bits(),
        apm,
        phases,
        points,
        prior: vec![rho; size],
    })
}

/// One channel use at the transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitFrame<T: Real> {
    pub bits: Vec<u8>,
    /// Baseband symbols, one per waveguide.
    pub x_b: DVector<Cx<T>>,
    /// Unit-modulus phase vector; anchor entries are exactly 1.
    pub a: DVector<Cx<T>>,
    /// Antenna-side vector `(E·x_b) ⊙ a`.
    pub x: DVector<Cx<T>>,
    /// Composite label per waveguide.
    pub labels: Vec<usize>,
}

fn read_bits(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}

fn write_bits(value: usize, width: usize, out: &mut [u8]) {
    for (i, o) in out.iter_mut().enumerate().take(width) {
        *o = ((value >> (width - 1 - i)) & 1) as u8;
    }
}

/// Splits a bit word into per-waveguide composite labels.
pub fn labels_from_bits(bits: &[u8], cfg: &PasmConfig) -> Result<Vec<usize>> {
    let eta = spectral_efficiency(cfg);
    if bits.len() != eta {
        return Err(PasmError::BitLength { expected: eta, got: bits.len() });
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(PasmError::InvalidArgument(format!("bit value {b} is not 0 or 1")));
    }
    let (bb, bp) = (cfg.apm_bits(), cfg.phase_bits());
    let phase_w = (cfg.n_a - 1) * bp;
    let phase_base = cfg.n_wg * bb;
    Ok((0..cfg.n_wg)
        .map(|m| {
            let apm = read_bits(&bits[m * bb..(m + 1) * bb]);
            let start = phase_base + m * phase_w;
            let phase = read_bits(&bits[start..start + phase_w]);
            (apm << phase_w) | phase
        })
        .collect())
}

/// Inverse of [`labels_from_bits`].
pub fn bits_from_labels(labels: &[usize], cfg: &PasmConfig) -> Vec<u8> {
    let (bb, bp) = (cfg.apm_bits(), cfg.phase_bits());
    let phase_w = (cfg.n_a - 1) * bp;
    let phase_base = cfg.n_wg * bb;
    let mut bits = vec![0u8; spectral_efficiency(cfg)];
    for (m, &l) in labels.iter().enumerate() {
        write_bits(l >> phase_w, bb, &mut bits[m * bb..(m + 1) * bb]);
        let start = phase_base + m * phase_w;
        write_bits(l & ((1 << phase_w) - 1), phase_w, &mut bits[start..start + phase_w]);
    }
    bits
}

/// Maps an `η`-bit word onto the antenna-side transmit vector.
pub fn map_bits<T: Real>(
    bits: &[u8],
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
) -> Result<TransmitFrame<T>> {
    let labels = labels_from_bits(bits, cfg)?;
    Ok(frame_from_labels(&labels, bits.to_vec(), cfg, constellation))
}

pub(crate) fn frame_from_labels<T: Real>(
    labels: &[usize],
    bits: Vec<u8>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
) -> TransmitFrame<T> {
    let n_a = cfg.n_a;
    let n_t = cfg.n_t();
    let mut x = DVector::zeros(n_t);
    let mut a = DVector::zeros(n_t);
    let mut x_b = DVector::zeros(cfg.n_wg);
    let phase_w = (n_a - 1) * cfg.phase_bits();
    for (m, &l) in labels.iter().enumerate() {
        let s = constellation.apm_symbols()[l >> phase_w];
        x_b[m] = s;
        a[m * n_a] = Cx::new(T::one(), T::zero());
        for i in 1..n_a {
            let shift = (n_a - 1 - i) * cfg.phase_bits();
            a[m * n_a + i] = constellation.phase_symbols()[(l >> shift) & (cfg.m_p - 1)];
        }
        for (i, &v) in constellation.point(l).iter().enumerate() {
            x[m * n_a + i] = v;
        }
    }
    TransmitFrame { bits, x_b, a, x, labels: labels.to_vec() }
}

/// Hard demapping from baseband and phase estimates: re-forms
/// `x̂ = (E·x̂_b) ⊙ â` and slices each waveguide to its nearest composite point.
pub fn demap_hard<T: Real>(
    x_b: &DVector<Cx<T>>,
    a: &DVector<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
) -> Result<Vec<u8>> {
    if x_b.len() != cfg.n_wg || a.len() != cfg.n_t() {
        return Err(PasmError::Dimension(format!(
            "expected x_b of length {} and a of length {}",
            cfg.n_wg,
            cfg.n_t()
        )));
    }
    let n_a = cfg.n_a;
    let x = DVector::from_fn(cfg.n_t(), |k, _| x_b[k / n_a] * a[k]);
    Ok(slice_vector(x.as_slice(), cfg, constellation).1)
}

/// Slices an antenna-side estimate waveguide by waveguide; returns the labels
/// and the decoded bit word.
pub fn slice_vector<T: Real>(
    x: &[Cx<T>],
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
) -> (Vec<usize>, Vec<u8>) {
    let labels: Vec<usize> = x
        .chunks_exact(cfg.n_a)
        .map(|chunk| {
            if chunk.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                constellation.nearest(chunk)
            } else {
                0
            }
        })
        .collect();
    let bits = bits_from_labels(&labels, cfg);
    (labels, bits)
}

/// Sign decisions on LLRs ordered like the bit word: positive means bit 1.
pub fn demap_soft<T: Real>(llr_apm: &[T], llr_phase: &[T], cfg: &PasmConfig) -> Result<Vec<u8>> {
    let expected = spectral_efficiency(cfg);
    let got = llr_apm.len() + llr_phase.len();
    if llr_apm.len() != cfg.n_wg * cfg.apm_bits() || got != expected {
        return Err(PasmError::BitLength { expected, got });
    }
    Ok(llr_apm
        .iter()
        .chain(llr_phase)
        .map(|&l| u8::from(l > T::zero()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n_wg: usize, n_a: usize, m_b: usize, m_p: usize) -> PasmConfig {
        PasmConfig { n_wg, n_a, m_b, m_p, ..PasmConfig::default() }
    }

    fn close(a: Cx<f64>, b: Cx<f64>) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn spectral_efficiency_examples() {
        assert_eq!(spectral_efficiency(&cfg(1, 4, 16, 4)), 10);
        assert_eq!(spectral_efficiency(&cfg(1, 2, 4, 4)), 4);
        assert_eq!(spectral_efficiency(&cfg(3, 1, 16, 4)), 12);
    }

    #[test]
    fn waveguide_phase_examples() {
        let c = cfg(1, 2, 4, 4);
        let lg = c.guided_wavelength();
        assert!(close(waveguide_phase(0.0, &c), Cx::new(1.0, 0.0)));
        assert!(close(waveguide_phase(lg, &c), Cx::new(1.0, 0.0)));
        assert!(close(waveguide_phase(lg / 4.0, &c), Cx::new(0.0, -1.0)));
    }

    #[test]
    fn phase_alphabet_examples() {
        let two = phase_alphabet::<f64>(&cfg(1, 2, 4, 2));
        assert!(close(two[0].factor, Cx::new(1.0, 0.0)));
        assert!(close(two[1].factor, Cx::new(-1.0, 0.0)));
        let four: Vec<_> = phase_alphabet::<f64>(&cfg(1, 2, 4, 4)).iter().map(|p| p.factor).collect();
        let expect = [Cx::new(1.0, 0.0), Cx::new(0.0, -1.0), Cx::new(-1.0, 0.0), Cx::new(0.0, 1.0)];
        for (a, b) in four.iter().zip(expect) {
            assert!(close(*a, b));
        }
        for m_p in [2, 4, 8, 16] {
            let prod = phase_alphabet::<f64>(&cfg(1, 2, 4, m_p))
                .iter()
                .fold(Cx::new(1.0, 0.0), |acc, p| acc * p.factor);
            assert!((prod.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alphabet_matches_physical_displacement() {
        let c = cfg(1, 3, 4, 8);
        for p in phase_alphabet::<f64>(&c) {
            assert!(close(waveguide_phase(p.offset_m, &c), p.factor));
        }
    }

    #[test]
    fn apm_constellations_have_unit_power_and_gray_labels() {
        for m in [2, 4, 16, 64] {
            let pts = apm_constellation::<f64>(m).unwrap();
            let p: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
            assert!((p - 1.0).abs() < 1e-12, "M_b={m}: {p}");
            let dmin = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            // Nearest neighbors differ in exactly one bit.
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate() {
                    if i != j && ((a - b).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "M_b={m} labels {i},{j}");
                    }
                }
            }
        }
        assert!(apm_constellation::<f64>(8).is_err());
    }

    #[test]
    fn bpsk_composite_layout() {
        let c = cfg(1, 2, 2, 2);
        let x = build_constellation::<f64>(&c).unwrap();
        let s = Cx::new(1.0, 0.0);
        let expect = [[s, s], [s, -s], [-s, -s], [-s, s]];
        assert_eq!(x.len(), 4);
        for (l, e) in expect.iter().enumerate() {
            assert!(close(x.point(l)[0], e[0]) && close(x.point(l)[1], e[1]), "label {l}");
        }
    }

    #[test]
    fn composite_cardinality_and_prior() {
        let x = build_constellation::<f64>(&cfg(1, 4, 16, 4)).unwrap();
        assert_eq!(x.len(), 1024);
        let total: f64 = x.prior().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let apm = apm_constellation::<f64>(16).unwrap();
        for p in x.points() {
            assert!(apm.iter().any(|s| close(*s, p[0])));
        }
    }

    #[test]
    fn composite_points_are_distinct() {
        let x = build_constellation::<f64>(&cfg(1, 3, 4, 4)).unwrap();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                assert!(dist_sqr_f(x.point(i), x.point(j)) > 1e-12);
            }
        }
    }

    fn dist_sqr_f(a: &[Cx<f64>], b: &[Cx<f64>]) -> f64 {
        crate::linalg::dist_sqr(a, b)
    }

    #[test]
    fn all_zero_word() {
        let c = cfg(2, 3, 16, 4);
        let x = build_constellation::<f64>(&c).unwrap();
        let bits = vec![0u8; spectral_efficiency(&c)];
        let f = map_bits(&bits, &c, &x).unwrap();
        let s0 = apm_constellation::<f64>(16).unwrap()[0];
        assert!(f.x_b.iter().all(|&s| close(s, s0)));
        assert!(f.a.iter().all(|&a| close(a, Cx::new(1.0, 0.0))));
    }

    #[test]
    fn frame_structure() {
        let c = cfg(2, 3, 16, 8);
        let x = build_constellation::<f64>(&c).unwrap();
        let eta = spectral_efficiency(&c);
        for w in 0..64usize {
            let bits: Vec<u8> = (0..eta).map(|i| ((w.wrapping_mul(2654435761) >> (i % 31)) & 1) as u8).collect();
            let f = map_bits(&bits, &c, &x).unwrap();
            for k in 0..c.n_t() {
                assert!((f.a[k].norm() - 1.0).abs() < 1e-12);
                assert!((f.x[k].norm() - f.x_b[k / c.n_a].norm()).abs() < 1e-12);
                assert!(close(f.x[k], f.x_b[k / c.n_a] * f.a[k]));
            }
            for m in 0..c.n_wg {
                assert_eq!(f.a[m * c.n_a], Cx::new(1.0, 0.0));
            }
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let c = cfg(1, 2, 4, 4);
        let x = build_constellation::<f64>(&c).unwrap();
        assert_eq!(
            map_bits(&[0, 1, 0], &c, &x).unwrap_err(),
            PasmError::BitLength { expected: 4, got: 3 }
        );
    }

    #[test]
    fn soft_demap_orientation() {
        let c = cfg(1, 2, 2, 2);
        let bits = demap_soft(&[f64::INFINITY], &[f64::NEG_INFINITY], &c).unwrap();
        assert_eq!(bits, vec![1, 0]);
    }

    #[test]
    fn nearest_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for (n_a, m_b, m_p) in [(2, 4, 4), (3, 16, 2), (4, 2, 4), (1, 64, 2)] {
            let c = cfg(1, n_a, m_b, m_p);
            let x = build_constellation::<f64>(&c).unwrap();
            for _ in 0..200 {
                let r: Vec<Cx<f64>> = (0..n_a)
                    .map(|_| Cx::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)))
                    .collect();
                let brute = (0..x.len())
                    .min_by(|&a, &b| {
                        dist_sqr_f(&r, x.point(a)).partial_cmp(&dist_sqr_f(&r, x.point(b))).unwrap()
                    })
                    .unwrap();
                assert_eq!(x.nearest(&r), brute);
            }
        }
    }
}
