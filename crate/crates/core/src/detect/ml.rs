use nalgebra::{DMatrix, DVector};

use super::{check_dims, effective_channel, DetectionResult};
use crate::modem::CompositeConstellation;
use crate::{Cx, PasmConfig, PasmError, Real, Result};

/// Default cap on the joint search space `|𝒳|^{N_wg}`.
pub const ML_GUARD: u128 = 1 << 24;

/// Exhaustive joint ML detection with the default guard.
pub fn ml_detect<T: Real>(
    y: &DVector<Cx<T>>,
    h: &DMatrix<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
) -> Result<DetectionResult<T>> {
    ml_detect_with_guard(y, h, cfg, constellation, ML_GUARD)
}

/// Minimizes `‖y − √δ·H·x‖²` over every combination of composite points.
///
/// The per-waveguide images `√δ·H_m·x̄_l` are tabulated once, and the
/// residual is updated incrementally while the label odometer advances, so
/// each candidate costs `O(N_r)`. Candidates are visited in lexicographic
/// label order (waveguide 0 most significant) and only a strictly smaller
/// metric replaces the incumbent, so ties go to the first candidate.
pub fn ml_detect_with_guard<T: Real>(
    y: &DVector<Cx<T>>,
    h: &DMatrix<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
    guard: u128,
) -> Result<DetectionResult<T>> {
    check_dims(y, h, cfg)?;
    let size = constellation.len();
    let n_wg = cfg.n_wg;
    let candidates = (size as u128).checked_pow(n_wg as u32).unwrap_or(u128::MAX);
    if candidates > guard {
        return Err(PasmError::SearchGuard { candidates, guard });
    }
    let heff = effective_channel(h, cfg);
    let n_r = cfg.n_r;
    let n_a = cfg.n_a;
    // images[m][l·N_r + j]
    let images: Vec<Vec<Cx<T>>> = (0..n_wg)
        .map(|m| {
            let block = heff.columns(m * n_a, n_a);
            let mut out = Vec::with_capacity(size * n_r);
            for p in constellation.points() {
                for j in 0..n_r {
                    let mut acc = Cx::new(T::zero(), T::zero());
                    for (i, &x) in p.iter().enumerate() {
                        acc += block[(j, i)] * x;
                    }
                    out.push(acc);
                }
            }
            out
        })
        .collect();
    // residual[m] = y − Σ_{m' < m} images, kept per level.
    let mut residual = vec![y.as_slice().to_vec(); n_wg + 1];
    let mut labels = vec![0usize; n_wg];
    for m in 0..n_wg {
        let (head, tail) = residual.split_at_mut(m + 1);
        for j in 0..n_r {
            tail[0][j] = head[m][j] - images[m][j];
        }
    }
    let mut best = (T::max_value().unwrap(), labels.clone());
    loop {
        let metric = residual[n_wg].iter().fold(T::zero(), |a, z| a + z.norm_sqr());
        if metric < best.0 {
            best = (metric, labels.clone());
        }
        // Advance the odometer from the least significant waveguide.
        let mut m = n_wg;
        loop {
            if m == 0 {
                return Ok(DetectionResult::from_labels(&best.1, cfg));
            }
            m -= 1;
            labels[m] += 1;
            if labels[m] < size {
                break;
            }
            labels[m] = 0;
        }
        for level in m..n_wg {
            let l = labels[level];
            let (head, tail) = residual.split_at_mut(level + 1);
            for j in 0..n_r {
                tail[0][j] = head[level][j] - images[level][l * n_r + j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_cn;
    use crate::modem::{build_constellation, map_bits, slice_vector, spectral_efficiency};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(n_wg: usize, n_a: usize, n_r: usize, m_b: usize, m_p: usize) -> PasmConfig {
        PasmConfig { n_wg, n_a, n_r, m_b, m_p, power_w: 1.0 * (n_wg * n_a) as f64, noise_w: 1e-3, ..PasmConfig::default() }
    }

    fn random_bits(eta: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
        (0..eta).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for c in [cfg(1, 2, 2, 4, 4), cfg(2, 2, 3, 2, 2), cfg(2, 1, 2, 16, 2)] {
            let x = build_constellation::<f64>(&c).unwrap();
            for _ in 0..20 {
                let h = DMatrix::from_fn(c.n_r, c.n_t(), |_, _| sample_cn(&mut rng));
                let bits = random_bits(spectral_efficiency(&c), &mut rng);
                let f = map_bits(&bits, &c, &x).unwrap();
                let y = effective_channel(&h, &c) * &f.x;
                assert_eq!(ml_detect(&y, &h, &c, &x).unwrap().bits, bits);
            }
        }
    }

    #[test]
    fn matches_brute_force_table() {
        let c = cfg(1, 2, 2, 2, 2);
        let x = build_constellation::<f64>(&c).unwrap();
        assert_eq!(x.len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let h = DMatrix::from_fn(2, 2, |_, _| sample_cn(&mut rng));
            let y = DVector::from_fn(2, |_, _| sample_cn(&mut rng));
            let heff = effective_channel(&h, &c);
            let metrics: Vec<f64> = (0..4)
                .map(|l| (&y - &heff * DVector::from_column_slice(x.point(l))).norm_squared())
                .collect();
            let best = (0..4).min_by(|&a, &b| metrics[a].partial_cmp(&metrics[b]).unwrap()).unwrap();
            let expect = slice_vector(x.point(best), &c, &x).1;
            assert_eq!(ml_detect(&y, &h, &c, &x).unwrap().bits, expect);
        }
    }

    #[test]
    fn ties_resolve_to_first_candidate() {
        let c = cfg(1, 2, 2, 2, 2);
        let x = build_constellation::<f64>(&c).unwrap();
        let h = DMatrix::zeros(2, 2);
        let y = DVector::from_element(2, Cx::new(1.0, 0.0));
        assert_eq!(ml_detect(&y, &h, &c, &x).unwrap().bits, vec![0, 0]);
    }

    #[test]
    fn guard_refuses_large_search() {
        let c = cfg(3, 4, 4, 16, 4);
        let x = build_constellation::<f64>(&c).unwrap();
        let h = DMatrix::zeros(4, 12);
        let y = DVector::zeros(4);
        assert!(matches!(ml_detect(&y, &h, &c, &x), Err(PasmError::SearchGuard { .. })));
    }
}
