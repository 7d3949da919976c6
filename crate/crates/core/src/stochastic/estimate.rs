//! Monte Carlo estimators built on [`simulate_paths`](super::simulate_paths).

use rayon::prelude::*;
use serde::Serialize;

use super::paths::{check_inputs, simulate_one, PathConfig, PathOutcome, Reflector};
use crate::bounds::{hit_and_run_bound, semigroup_gap_alpha, semigroup_gap_bound};
use crate::error::{invalid, Result};
use crate::geometry::{BallUnion, ConvexDomain};
use crate::scalar::Real;

const Z95: f64 = 1.96;
/// Paths per reduction chunk; chunk sums are combined in chunk order.
const CHUNK: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    /// 95% half-width.
    pub ci_halfwidth: f64,
    pub n: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// Proportion estimate: normal approximation, or the wider side of the
    /// Wilson interval when fewer than 10 successes or failures.
    pub fn proportion(successes: usize, n: usize, seed: u64) -> Self {
        let nf = n as f64;
        let p = successes as f64 / nf;
        let half = if (successes as f64) < 10.0 || ((n - successes) as f64) < 10.0 {
            let z2 = Z95 * Z95;
            let denom = 1.0 + z2 / nf;
            let center = (p + z2 / (2.0 * nf)) / denom;
            let w = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
            (center + w - p).max(p - (center - w))
        } else {
            Z95 * (p * (1.0 - p) / nf).sqrt()
        };
        MCEstimate { value: p, ci_halfwidth: half, n, seed }
    }

    /// Mean with a normal-approximation interval from the sample variance.
    pub fn mean(sum: f64, sum_sq: f64, n: usize, seed: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        MCEstimate { value: mean, ci_halfwidth: Z95 * (var / nf).sqrt(), n, seed }
    }
}

/// Sums `(g, g^2)` over all paths in fixed chunk order.
fn reduce<T: Real, F>(refl: &Reflector<T>, s: &BallUnion<T>, b: &BallUnion<T>, cfg: &PathConfig<T>, stop: Option<T>, g: F) -> Result<(f64, f64)>
where
    F: Fn(&PathOutcome<T>) -> Result<f64> + Sync,
{
    let n = cfg.n_paths;
    let chunks: Vec<Result<(f64, f64)>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = (0.0, 0.0);
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let v = g(&simulate_one(refl, s, b, cfg, i as u64, stop))?;
                acc.0 += v;
                acc.1 += v * v;
            }
            Ok(acc)
        })
        .collect();
    let mut total = (0.0, 0.0);
    for c in chunks {
        let c = c?;
        total.0 += c.0;
        total.1 += c.1;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HitAndRunEstimate {
    pub alpha: f64,
    pub estimate: MCEstimate,
    /// `2^{d/2+2} exp(-rho^2 / (16 alpha))`.
    pub bound: f64,
}

/// `P_x{sigma <= horizon, T <= alpha}` for each `alpha`, from one set of
/// paths. Paths stop once `T` exceeds the largest `alpha`, where the event
/// fails for every `alpha`.
pub fn estimate_hit_and_run<T: Real>(
    g: &ConvexDomain<T>,
    s: &BallUnion<T>,
    b: &BallUnion<T>,
    rho: T,
    alphas: &[T],
    cfg: &PathConfig<T>,
) -> Result<Vec<HitAndRunEstimate>> {
    let refl = check_inputs(g, s, b, cfg)?;
    cfg.check_resolution(rho)?;
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > T::zero()) || a > cfg.horizon) {
        return Err(invalid("alpha must lie in (0, horizon]"));
    }
    let amax = alphas.iter().copied().fold(T::zero(), T::max);
    let stop = if amax < cfg.horizon { Some(amax) } else { None };
    let n = cfg.n_paths;
    let counts: Vec<Vec<usize>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut cnt = vec![0usize; alphas.len()];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let o = simulate_one(&refl, s, b, cfg, i as u64, stop);
                if o.hit_s && !o.stopped_early {
                    for (k, &a) in alphas.iter().enumerate() {
                        if o.occupation_t <= a {
                            cnt[k] += 1;
                        }
                    }
                }
            }
            cnt
        })
        .collect();
    let mut totals = vec![0usize; alphas.len()];
    for c in counts {
        for (t, v) in totals.iter_mut().zip(c) {
            *t += v;
        }
    }
    alphas
        .iter()
        .zip(totals)
        .map(|(&a, k)| {
            Ok(HitAndRunEstimate {
                alpha: a.as_f64(),
                estimate: MCEstimate::proportion(k, n, cfg.seed),
                bound: hit_and_run_bound(rho, a, g.dim())?.as_f64(),
            })
        })
        .collect()
}

/// `E_x[f(X_1) exp(-beta T)]`, times `1{sigma > 1}` when `killed`.
pub fn feynman_kac<T: Real, F>(
    g: &ConvexDomain<T>,
    s: &BallUnion<T>,
    b: &BallUnion<T>,
    beta: T,
    f: F,
    cfg: &PathConfig<T>,
    killed: bool,
) -> Result<MCEstimate>
where
    F: Fn(&[T]) -> T + Sync,
{
    let refl = check_inputs(g, s, b, cfg)?;
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(invalid("beta must be finite and nonnegative"));
    }
    let (sum, sum_sq) = reduce(&refl, s, b, cfg, None, |o| {
        if killed && o.hit_s {
            return Ok(0.0);
        }
        let fx = f(&o.end).as_f64();
        if !fx.is_finite() {
            return Err(invalid("f is not finite at a sampled endpoint"));
        }
        Ok(fx * (-(beta * o.occupation_t).as_f64()).exp())
    })?;
    Ok(MCEstimate::mean(sum, sum_sq, cfg.n_paths, cfg.seed))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemigroupGapEstimate {
    pub per_start: Vec<MCEstimate>,
    pub argmax: usize,
    pub max: MCEstimate,
    pub alpha_star: f64,
    /// `exp(-2 beta alpha*) + hit_and_run_bound(rho, alpha*, d)`.
    pub bound: f64,
}

/// `c(x, rho, beta) = E_x[exp(-2 beta T) 1{sigma <= 1}]` for every start
/// point, and the maximum. Paths stop once `exp(-2 beta T)` underflows
/// below `1e-300`.
pub fn estimate_semigroup_gap<T: Real>(
    g: &ConvexDomain<T>,
    s: &BallUnion<T>,
    b: &BallUnion<T>,
    rho: T,
    beta: T,
    starts: &[Vec<T>],
    cfg: &PathConfig<T>,
) -> Result<SemigroupGapEstimate> {
    if starts.is_empty() {
        return Err(invalid("need at least one start point"));
    }
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(invalid("beta must be finite and nonnegative"));
    }
    cfg.check_resolution(rho)?;
    let stop = if beta > T::zero() { Some(T::lit(300.0 * std::f64::consts::LN_10 / 2.0) / beta) } else { None };
    let mut per_start = Vec::with_capacity(starts.len());
    for x0 in starts {
        let c = PathConfig { start: x0.clone(), ..cfg.clone() };
        let refl = check_inputs(g, s, b, &c)?;
        let (sum, sum_sq) = reduce(&refl, s, b, &c, stop, |o| {
            Ok(if o.hit_s && !o.stopped_early { (-(T::lit(2.0) * beta * o.occupation_t).as_f64()).exp() } else { 0.0 })
        })?;
        per_start.push(MCEstimate::mean(sum, sum_sq, c.n_paths, c.seed));
    }
    let argmax = (0..per_start.len()).fold(0, |m, i| if per_start[i].value > per_start[m].value { i } else { m });
    let (alpha_star, bound) = if beta > T::zero() {
        (semigroup_gap_alpha(rho, beta)?.as_f64(), semigroup_gap_bound(rho, beta, g.dim())?.as_f64())
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(SemigroupGapEstimate { max: per_start[argmax].clone(), per_start, argmax, alpha_star, bound })
}
