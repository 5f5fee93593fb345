use nalgebra::{DMatrix, DVector};

use super::{check_dims, effective_channel, DetectionResult};
use crate::modem::CompositeConstellation;
use crate::{Cx, PasmConfig, PasmError, Real, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    Zf,
    Mmse,
}

/// `(AᴴA)⁻¹Aᴴy` for ZF or `(AᴴA + N_0·I)⁻¹Aᴴy` for MMSE, where `A` is the
/// effective channel.
pub fn linear_estimate<T: Real>(
    y: &DVector<Cx<T>>,
    heff: &DMatrix<Cx<T>>,
    kind: LinearKind,
    n0: T,
) -> Result<DVector<Cx<T>>> {
    let n = heff.ncols();
    let rhs = heff.adjoint() * y;
    let mut gram = heff.adjoint() * heff;
    match kind {
        LinearKind::Zf => {
            if heff.nrows() < n {
                return Err(PasmError::SingularGram);
            }
            let chol = gram.cholesky().ok_or(PasmError::SingularGram)?;
            Ok(chol.solve(&rhs))
        }
        LinearKind::Mmse => {
            for i in 0..n {
                gram[(i, i)] += Cx::new(n0, T::zero());
            }
            match gram.clone().cholesky() {
                Some(chol) => Ok(chol.solve(&rhs)),
                None => gram.lu().solve(&rhs).ok_or(PasmError::SingularGram),
            }
        }
    }
}

/// Reads `x̂_b` from the anchor entries and forms `â = x̂ ⊘ (E·x̂_b)`.
pub fn recover_symbols<T: Real>(x_hat: &DVector<Cx<T>>, n_a: usize) -> (DVector<Cx<T>>, DVector<Cx<T>>) {
    let n_wg = x_hat.len() / n_a;
    let x_b = DVector::from_fn(n_wg, |m, _| x_hat[m * n_a]);
    let a = DVector::from_fn(x_hat.len(), |k, _| x_hat[k] / x_b[k / n_a]);
    (x_b, a)
}

/// Linear filtering followed by per-waveguide slicing.
///
/// Slicing the filter output directly is the same as re-forming
/// `(E·x̂_b) ⊙ â` and slicing that, and stays finite when an anchor estimate
/// is zero.
pub fn linear_detect<T: Real>(
    y: &DVector<Cx<T>>,
    h: &DMatrix<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
    kind: LinearKind,
) -> Result<DetectionResult<T>> {
    check_dims(y, h, cfg)?;
    let heff = effective_channel(h, cfg);
    let x_hat = linear_estimate(y, &heff, kind, T::lit(cfg.noise_w))?;
    let labels: Vec<usize> = x_hat
        .as_slice()
        .chunks_exact(cfg.n_a)
        .map(|c| constellation.nearest(c))
        .collect();
    Ok(DetectionResult::from_labels(&labels, cfg))
}

/// Waveguide-ordered successive interference cancellation.
///
/// Waveguides are processed in descending Frobenius norm of their effective
/// column block. Each stage filters the still-undetected waveguides, slices
/// the strongest one, and subtracts its reconstructed contribution from `y`.
pub fn sic_detect<T: Real>(
    y: &DVector<Cx<T>>,
    h: &DMatrix<Cx<T>>,
    cfg: &PasmConfig,
    constellation: &CompositeConstellation<T>,
    kind: LinearKind,
) -> Result<DetectionResult<T>> {
    check_dims(y, h, cfg)?;
    let heff = effective_channel(h, cfg);
    let n_a = cfg.n_a;
    let norms: Vec<T> = (0..cfg.n_wg).map(|m| heff.columns(m * n_a, n_a).norm()).collect();
    let mut order: Vec<usize> = (0..cfg.n_wg).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut labels = vec![0usize; cfg.n_wg];
    let mut residual = y.clone();
    for stage in 0..order.len() {
        let mut remaining: Vec<usize> = order[stage..].to_vec();
        remaining.sort_unstable();
        let cols: Vec<usize> = remaining.iter().flat_map(|&m| m * n_a..(m + 1) * n_a).collect();
        let sub = heff.select_columns(&cols);
        let x_hat = linear_estimate(&residual, &sub, kind, T::lit(cfg.noise_w))?;
        let target = order[stage];
        let pos = remaining.iter().position(|&m| m == target).unwrap_or(0);
        let label = constellation.nearest(&x_hat.as_slice()[pos * n_a..(pos + 1) * n_a]);
        labels[target] = label;
        let block = heff.columns(target * n_a, n_a);
        residual -= block * DVector::from_column_slice(constellation.point(label));
    }
    Ok(DetectionResult::from_labels(&labels, cfg))
}
