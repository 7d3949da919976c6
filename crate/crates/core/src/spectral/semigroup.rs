//! Power-iteration estimate of `||exp(-t H1) - E exp(-t H2) E^T||_2`, where
//! `E` extends dofs of `H2` by zero into the dof space of `H1`.

use serde::Serialize;

use super::chebyshev::{apply_heat, HeatActionParams};
use super::SymmetricOperator;
use crate::error::{invalid, Result};
use crate::linalg::{dot, norm, normalize, seeded_vector};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct SemigroupDiffOptions {
    pub probes: usize,
    pub max_iterations: usize,
    pub rel_change: f64,
    pub heat_tolerance: f64,
    pub seed: u64,
}

impl Default for SemigroupDiffOptions {
    fn default() -> Self {
        Self { probes: 3, max_iterations: 200, rel_change: 1e-4, heat_tolerance: 1e-10, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemigroupDiffEstimate {
    /// `||D x||` for the best unit probe `x`, computed with approximate
    /// heat actions.
    pub estimate: f64,
    /// `estimate - 2 * heat_tolerance`, clipped at zero: a lower bound on the
    /// exact norm.
    pub lower_bound: f64,
    /// `||D x - (x.D x) x||` at the best probe.
    pub residual: f64,
    pub iterations: usize,
    pub heat_degree: (usize, usize),
}

pub fn semigroup_diff_norm<T: Real, A: SymmetricOperator<T> + ?Sized, B: SymmetricOperator<T> + ?Sized>(
    h1: &A,
    h2: &B,
    embedding: &[usize],
    t: T,
    opts: &SemigroupDiffOptions,
) -> Result<SemigroupDiffEstimate> {
    let n1 = h1.dim();
    let n2 = h2.dim();
    if embedding.len() != n2 || embedding.iter().any(|&j| j >= n1) {
        return Err(invalid("embedding must map every dof of H2 into H1"));
    }
    if opts.probes == 0 {
        return Err(invalid("need at least one probe"));
    }
    let params = HeatActionParams::new(t, T::lit(opts.heat_tolerance));
    let mut degrees = (0, 0);
    let mut apply_d = |x: &[T]| -> Result<Vec<T>> {
        let a = apply_heat(h1, &params, x)?;
        let restricted: Vec<T> = embedding.iter().map(|&j| x[j]).collect();
        let b = apply_heat(h2, &params, &restricted)?;
        degrees = (a.degree, b.degree);
        let mut y = a.v;
        for (&j, &bj) in embedding.iter().zip(&b.v) {
            y[j] -= bj;
        }
        Ok(y)
    };

    let mut best = SemigroupDiffEstimate { estimate: 0.0, lower_bound: 0.0, residual: 0.0, iterations: 0, heat_degree: (0, 0) };
    let mut total = 0;
    for probe in 0..opts.probes {
        let mut x = seeded_vector::<T>(n1, opts.seed, probe as u64);
        normalize(&mut x);
        let mut prev = f64::NAN;
        let mut est = 0.0;
        let mut residual = 0.0;
        for _ in 0..opts.max_iterations {
            let y = apply_d(&x)?;
            total += 1;
            let ny = norm(&y).as_f64();
            let rq = dot(&x, &y);
            residual = y.iter().zip(&x).map(|(a, b)| (*a - rq * *b) * (*a - rq * *b)).fold(T::zero(), |s, v| s + v).sqrt().as_f64();
            est = ny;
            if ny == 0.0 {
                break;
            }
            let done = (ny - prev).abs() <= opts.rel_change * ny;
            prev = ny;
            x = y;
            normalize(&mut x);
            if done {
                break;
            }
        }
        if est > best.estimate || probe == 0 {
            best.estimate = est;
            best.residual = residual;
        }
    }
    best.iterations = total;
    best.heat_degree = degrees;
    best.lower_bound = (best.estimate - 2.0 * opts.heat_tolerance).max(0.0);
    Ok(best)
}
