//! Ground-state energy `lambda_beta = min sigma(H + beta 1_B)` as a function
//! of the coupling.

use serde::Serialize;

use crate::discretize::{assemble_laplacian, GridDiscretization, SparseSymmetricOperator};
use crate::error::{invalid, Result};
use crate::geometry::BallUnion;
use crate::scalar::Real;
use crate::spectral::{smallest_eigs_with, EigOptions};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaBetaSample {
    pub beta: f64,
    /// Ritz value, an upper bound on the discrete `lambda_beta`.
    pub lambda: f64,
    pub residual: f64,
    pub converged: bool,
}

impl LambdaBetaSample {
    /// Certified lower value `lambda - residual`.
    pub fn lambda_lower(&self) -> f64 {
        self.lambda - self.residual
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaBetaCurve {
    pub samples: Vec<LambdaBetaSample>,
    /// Nondecreasing within `tol`.
    pub monotone: bool,
    /// Concave on consecutive triples within `tol`.
    pub concave: bool,
    pub tol: f64,
}

/// `x -> beta * mask(x)` as a potential vector.
pub(crate) fn mask_potential<T: Real>(mask: &[bool], beta: T) -> Vec<T> {
    mask.iter().map(|&m| if m { beta } else { T::zero() }).collect()
}

/// Smallest eigenpair of `h + beta * diag(mask)`.
pub(crate) fn ground_with_potential<T: Real>(
    h: &SparseSymmetricOperator<T>,
    mask: &[bool],
    beta: T,
    tol: T,
    opts: &EigOptions,
) -> Result<LambdaBetaSample> {
    let op = h.clone().with_potential(Some(mask_potential(mask, beta)))?;
    let r = smallest_eigs_with(&op, 1, tol, opts)?;
    Ok(LambdaBetaSample {
        beta: beta.as_f64(),
        lambda: r.eigenvalues[0].as_f64(),
        residual: r.residuals[0].as_f64(),
        converged: r.converged,
    })
}

pub(crate) fn check_betas<T: Real>(betas: &[T]) -> Result<()> {
    if betas.is_empty() {
        return Err(invalid("need at least one coupling"));
    }
    if betas.iter().any(|&b| !(b >= T::zero()) || !b.is_finite()) || betas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("couplings must be finite, nonnegative and strictly ascending"));
    }
    Ok(())
}

/// Shape checks on samples: nondecreasing, and for consecutive triples
/// the middle value lies above the chord.
pub(crate) fn shape_flags(samples: &[LambdaBetaSample], tol: f64) -> (bool, bool) {
    let monotone = samples.windows(2).all(|w| w[1].lambda >= w[0].lambda - tol);
    let concave = samples.windows(3).all(|w| {
        let (b0, b1, b2) = (w[0].beta, w[1].beta, w[2].beta);
        let chord = w[0].lambda + (w[2].lambda - w[0].lambda) * (b1 - b0) / (b2 - b0);
        w[1].lambda >= chord - tol
    });
    (monotone, concave)
}

/// `lambda_beta` of `h + beta 1_mask` for every `beta`. The shape tolerance is
/// the larger of `tol` and the largest residual.
pub fn lambda_beta_curve_op<T: Real>(
    h: &SparseSymmetricOperator<T>,
    mask: &[bool],
    betas: &[T],
    tol: T,
    opts: &EigOptions,
) -> Result<LambdaBetaCurve> {
    check_betas(betas)?;
    if mask.len() != h.n() {
        return Err(invalid("mask length differs from the dof count"));
    }
    let samples = betas
        .iter()
        .map(|&b| ground_with_potential(h, mask, b, tol, opts))
        .collect::<Result<Vec<_>>>()?;
    let shape_tol = samples.iter().map(|s| s.residual).fold(tol.as_f64(), f64::max);
    let (monotone, concave) = shape_flags(&samples, shape_tol);
    Ok(LambdaBetaCurve { samples, monotone, concave, tol: shape_tol })
}

/// `lambda_beta` for the Neumann Laplacian on `grid` with potential `beta`
/// on the ball union `b`.
pub fn lambda_beta_curve<T: Real>(
    grid: &GridDiscretization<T>,
    b: &BallUnion<T>,
    betas: &[T],
    tol: T,
    opts: &EigOptions,
) -> Result<LambdaBetaCurve> {
    let h = assemble_laplacian(grid, T::zero(), b)?;
    let mask = grid.indicator(b);
    lambda_beta_curve_op(&h, &mask, betas, tol, opts)
}
