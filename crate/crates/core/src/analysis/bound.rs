use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pep_approx_prepared, ChannelMoments, PepEvaluator, PreparedMgf};
use crate::modem::{build_constellation, map_bits, spectral_efficiency};
use crate::{Cx, PasmConfig, PasmError, Real, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PepMethod {
    /// Gauss–Legendre quadrature of the Craig integral.
    #[default]
    Exact,
    /// Two-exponential Q-function approximation.
    Approx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundOptions {
    pub method: PepMethod,
    /// Budget of unordered codeword pairs.
    pub max_pairs: u64,
    /// Keep only the `max_pairs` closest pairs instead of failing.
    pub truncate: bool,
    pub quadrature_order: usize,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { method: PepMethod::Exact, max_pairs: 1 << 14, truncate: false, quadrature_order: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub ber: f64,
    /// Unordered pairs actually summed.
    pub pairs: u64,
    /// Set when only the closest pairs were summed; the value is then an
    /// approximation, not an upper bound.
    pub truncated: bool,
}

/// Antenna-side vectors of every `η`-bit word, indexed by the word's integer
/// value (MSB first).
pub fn codebook<T: Real>(cfg: &PasmConfig) -> Result<Vec<DVector<Cx<T>>>> {
    let eta = spectral_efficiency(cfg);
    let constellation = build_constellation::<T>(cfg)?;
    (0..1usize << eta)
        .map(|w| {
            let bits: Vec<u8> = (0..eta).map(|b| ((w >> (eta - 1 - b)) & 1) as u8).collect();
            Ok(map_bits(&bits, cfg, &constellation)?.x)
        })
        .collect()
}

/// Union bound on the ML bit error rate,
/// `(1/2^η)·Σ_i Σ_{j≠i} P(x_i → x_j)·n_{ij}/η`, conditioned on `moments`.
///
/// Ordered pairs `(i,j)` and `(j,i)` contribute equally, so each unordered
/// pair is evaluated once and doubled. Pair contributions are computed in
/// parallel and summed in a fixed order.
pub fn union_bound_ber<T: Real>(
    cfg: &PasmConfig,
    moments: &ChannelMoments<T>,
    delta: f64,
    n0: f64,
    opts: &BoundOptions,
) -> Result<BoundResult> {
    let eta = spectral_efficiency(cfg);
    if eta == 0 {
        return Err(PasmError::InvalidArgument("union bound needs at least one bit per channel use".into()));
    }
    if eta > 40 {
        return Err(PasmError::PairGuard { pairs: u128::MAX, budget: opts.max_pairs as u128 });
    }
    let words = 1u128 << eta;
    let total = words * (words - 1) / 2;
    if total > opts.max_pairs as u128 && (!opts.truncate || eta > 13) {
        return Err(PasmError::PairGuard { pairs: total, budget: opts.max_pairs as u128 });
    }
    let book = codebook::<T>(cfg)?;
    let n = book.len();
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let truncated = (pairs.len() as u128) > opts.max_pairs as u128;
    if truncated {
        let key = |&(i, j): &(usize, usize)| (&book[i] - &book[j]).norm_squared().as_f64();
        pairs.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
        pairs.truncate(opts.max_pairs as usize);
    }
    let evaluator = PepEvaluator::new(opts.quadrature_order)?;
    let diag = moments.diagonal();
    let contributions: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let hamming = (i ^ j).count_ones() as f64;
            let psi = &book[i] - &book[j];
            let prep = PreparedMgf::new(&psi, moments, diag.as_ref());
            let pep = match opts.method {
                PepMethod::Exact => evaluator.pep_prepared(&prep, moments, delta, n0),
                PepMethod::Approx => pep_approx_prepared(&prep, moments, delta, n0),
            }?;
            Ok(pep * hamming)
        })
        .collect::<Result<_>>()?;
    let sum: f64 = contributions.iter().sum();
    Ok(BoundResult {
        ber: 2.0 * sum / (n as f64 * eta as f64),
        pairs: pairs.len() as u64,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{pep_exact, PepTerm};
    use nalgebra::DMatrix;

    fn rayleigh(cfg: &PasmConfig) -> ChannelMoments<f64> {
        let n = cfg.n_r * cfg.n_t();
        ChannelMoments {
            n_r: cfg.n_r,
            n_t: cfg.n_t(),
            u_bar: DVector::zeros(n),
            c_u: DMatrix::identity(n, n),
        }
    }

    #[test]
    fn symmetric_pairs_contribute_equally() {
        let cfg = PasmConfig { n_a: 2, m_b: 2, m_p: 2, n_r: 2, ..PasmConfig::default() };
        let m = rayleigh(&cfg);
        let book = codebook::<f64>(&cfg).unwrap();
        for i in 0..book.len() {
            for j in 0..book.len() {
                let a = pep_exact(&PepTerm::new(book[i].clone(), book[j].clone(), 1), &m, 10.0, 1.0).unwrap();
                let b = pep_exact(&PepTerm::new(book[j].clone(), book[i].clone(), 1), &m, 10.0, 1.0).unwrap();
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bound_matches_explicit_double_sum() {
        let cfg = PasmConfig { n_a: 2, m_b: 2, m_p: 2, n_r: 1, ..PasmConfig::default() };
        let m = rayleigh(&cfg);
        let book = codebook::<f64>(&cfg).unwrap();
        let eta = 2.0;
        let mut direct = 0.0;
        for i in 0..4usize {
            for j in 0..4 {
                if i != j {
                    let n = (i ^ j).count_ones() as f64;
                    direct += pep_exact(&PepTerm::new(book[i].clone(), book[j].clone(), 1), &m, 10.0, 1.0).unwrap() * n / eta;
                }
            }
        }
        direct /= 4.0;
        let b = union_bound_ber(&cfg, &m, 10.0, 1.0, &BoundOptions::default()).unwrap();
        assert!((b.ber - direct).abs() < 1e-14);
        assert_eq!(b.pairs, 6);
        assert!(!b.truncated);
    }

    #[test]
    fn guard_and_truncation() {
        let cfg = PasmConfig { n_a: 4, m_b: 16, m_p: 4, n_r: 1, ..PasmConfig::default() };
        let m = rayleigh(&cfg);
        let err = union_bound_ber(&cfg, &m, 10.0, 1.0, &BoundOptions::default()).unwrap_err();
        assert!(matches!(err, PasmError::PairGuard { .. }));
        let small = PasmConfig { n_a: 2, m_b: 4, m_p: 4, n_r: 1, ..PasmConfig::default() };
        let opts = BoundOptions { max_pairs: 10, truncate: true, ..BoundOptions::default() };
        let full = union_bound_ber(&small, &rayleigh(&small), 10.0, 1.0, &BoundOptions::default()).unwrap();
        let cut = union_bound_ber(&small, &rayleigh(&small), 10.0, 1.0, &opts).unwrap();
        assert!(cut.truncated && cut.pairs == 10);
        assert!(cut.ber < full.ber);
    }

    #[test]
    fn bound_decreases_with_power_and_receivers() {
        let mut prev = f64::INFINITY;
        let c1 = PasmConfig { n_a: 2, m_b: 2, m_p: 2, n_r: 1, ..PasmConfig::default() };
        let c2 = PasmConfig { n_r: 2, ..c1.clone() };
        for snr in [1.0, 10.0, 100.0, 1000.0] {
            let b1 = union_bound_ber(&c1, &rayleigh(&c1), snr, 1.0, &BoundOptions::default()).unwrap().ber;
            let b2 = union_bound_ber(&c2, &rayleigh(&c2), snr, 1.0, &BoundOptions::default()).unwrap().ber;
            assert!(b1 < prev);
            assert!(b2 < b1);
            prev = b1;
        }
    }
}
