//! The abstract uncertainty principle `P_I W P_I >= kappa P_I` for
//! `W = 1_B`, with the constant `sup_beta (lambda_beta - max I) / beta`.

use serde::Serialize;

use super::curve::{check_betas, ground_with_potential, LambdaBetaSample};
use crate::discretize::SparseSymmetricOperator;
use crate::error::{invalid, Result};
use crate::linalg::SymmetricEigen;
use crate::scalar::Real;
use crate::spectral::EigOptions;

/// Dof count up to which the inequality is also checked densely.
pub const DENSE_CHECK_LIMIT: usize = 2000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlsCheck {
    /// `max_beta (lambda_beta - residual - max I) / beta`.
    pub kappa_bls: f64,
    pub best_beta: Option<f64>,
    pub samples: Vec<LambdaBetaSample>,
    /// Smallest eigenvalue of `P_I W P_I` on the range of `P_I`.
    pub direct_min: Option<f64>,
    /// Dimension of the range of `P_I` (dense check only).
    pub range_dim: Option<usize>,
    pub certified: bool,
}

/// Evaluates `kappa_bls` over `betas`. `certified` needs some
/// `lambda_beta > max I` and, for at most [`DENSE_CHECK_LIMIT`] dofs, the
/// dense check `min eig(P_I W P_I |_range) >= kappa_bls - tol`.
pub fn verify_bls<T: Real>(
    h: &SparseSymmetricOperator<T>,
    mask: &[bool],
    i_max: T,
    betas: &[T],
    tol: T,
) -> Result<BlsCheck> {
    check_betas(betas)?;
    if mask.len() != h.n() {
        return Err(invalid("mask length differs from the dof count"));
    }
    if betas.iter().any(|&b| !(b > T::zero())) {
        return Err(invalid("couplings must be positive"));
    }
    let opts = EigOptions::default();
    let e = i_max.as_f64();
    let mut samples = Vec::with_capacity(betas.len());
    let mut best: Option<(f64, f64)> = None;
    for &beta in betas {
        let s = ground_with_potential(h, mask, beta, tol, &opts)?;
        let lower = s.lambda_lower();
        if lower > e {
            let k = (lower - e) / s.beta;
            if best.map_or(true, |(v, _)| k > v) {
                best = Some((k, s.beta));
            }
        }
        samples.push(s);
    }
    let kappa_bls = best.map_or(0.0, |(k, _)| k);
    let (direct_min, range_dim) = if h.n() <= DENSE_CHECK_LIMIT {
        let (m, dim) = projected_min(h, mask, e)?;
        (Some(m), Some(dim))
    } else {
        (None, None)
    };
    let certified = best.is_some() && direct_min.map_or(true, |m| m >= kappa_bls - tol.as_f64());
    Ok(BlsCheck { kappa_bls, best_beta: best.map(|(_, b)| b), samples, direct_min, range_dim, certified })
}

/// Smallest eigenvalue of `Q^T W Q` for the eigenvectors `Q` of `h` with
/// eigenvalue at most `e`; `+inf` when the range is trivial.
pub(crate) fn projected_min<T: Real>(h: &SparseSymmetricOperator<T>, mask: &[bool], e: f64) -> Result<(f64, usize)> {
    let n = h.n();
    let dense: Vec<f64> = h.to_dense().into_iter().map(|v| v.as_f64()).collect();
    let eig = SymmetricEigen::new(&dense, n)?;
    let cols: Vec<usize> = (0..n).filter(|&k| eig.values[k] <= e).collect();
    let m = cols.len();
    if m == 0 {
        return Ok((f64::INFINITY, 0));
    }
    let vecs: Vec<Vec<f64>> = cols.iter().map(|&k| eig.vector(k)).collect();
    let mut proj = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..n).filter(|&x| mask[x]).map(|x| vecs[i][x] * vecs[j][x]).sum();
            proj[i * m + j] = s;
            proj[j * m + i] = s;
        }
    }
    let pe = SymmetricEigen::values_only(&proj, m)?;
    Ok((pe[0], m))
}
