//! Application of the spectral projector `P_[0,E](H)` to a vector.

use serde::Serialize;

use super::chebyshev::chebyshev_apply;
use super::lanczos::{smallest_eigs_with, EigOptions};
use super::SymmetricOperator;
use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorRoute {
    Eigenpairs,
    PolynomialFilter,
}

/// Projection onto the spectral interval `[0, energy]`. The caller asserts
/// that `(energy, energy + gap)` holds no eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectorParams<T> {
    pub energy: T,
    pub gap: T,
    pub tolerance: T,
    pub via: ProjectorRoute,
    pub seed: u64,
}

impl<T: Real> ProjectorParams<T> {
    pub fn new(energy: T, gap: T, tolerance: T, via: ProjectorRoute) -> Self {
        Self { energy, gap, tolerance, via, seed: 0x5eed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectorOutput<T> {
    #[serde(skip)]
    pub v: Vec<T>,
    pub via: ProjectorRoute,
    /// Eigenvalues in `[0, energy]` (eigenpair route).
    pub eigenvalues: Vec<f64>,
    /// Filter degree (polynomial route).
    pub degree: usize,
    /// Max deviation of the filter from the indicator on
    /// `[0, E] U [E + gap, b]` (polynomial route), or the largest
    /// eigen-residual (eigenpair route).
    pub achieved_error: f64,
    pub spectral_bound: f64,
}

pub fn spectral_projector_apply<T: Real, A: SymmetricOperator<T> + ?Sized>(
    a: &A,
    params: &ProjectorParams<T>,
    f: &[T],
) -> Result<ProjectorOutput<T>> {
    let n = a.dim();
    if f.len() != n {
        return Err(invalid("vector length differs from the operator dimension"));
    }
    if !(params.energy >= T::zero()) || !(params.gap > T::zero()) || !(params.tolerance > T::zero()) {
        return Err(invalid("need energy >= 0, gap > 0 and tolerance > 0"));
    }
    match params.via {
        ProjectorRoute::Eigenpairs => by_eigenpairs(a, params, f),
        ProjectorRoute::PolynomialFilter => by_filter(a, params, f),
    }
}

fn by_eigenpairs<T: Real, A: SymmetricOperator<T> + ?Sized>(a: &A, params: &ProjectorParams<T>, f: &[T]) -> Result<ProjectorOutput<T>> {
    let n = a.dim();
    let e = params.energy;
    let tol = params.tolerance;
    let opts = EigOptions { seed: params.seed, ..EigOptions::default() };
    let mut k = 4.min(n);
    let res = loop {
        let r = smallest_eigs_with(a, k, tol, &opts)?;
        if !r.converged {
            return Err(Error::NotConverged { requested: k, converged: 0, iterations: r.iterations });
        }
        if *r.eigenvalues.last().unwrap() > e || k == n {
            break r;
        }
        k = (2 * k).min(n);
    };
    for &lam in &res.eigenvalues {
        if (lam - e).abs() <= tol || (lam > e && lam < e + params.gap) {
            return Err(Error::GapUnresolved { eigenvalue: lam.as_f64(), edge: e.as_f64(), tol: tol.as_f64() });
        }
    }
    let mut v = vec![T::zero(); n];
    let mut kept = Vec::new();
    let mut worst = 0.0f64;
    for (i, &lam) in res.eigenvalues.iter().enumerate() {
        if lam <= e {
            let u = &res.eigenvectors[i];
            axpy(dot(u, f), u, &mut v);
            kept.push(lam.as_f64());
            worst = worst.max(res.residuals[i].as_f64());
        }
    }
    Ok(ProjectorOutput {
        v,
        via: ProjectorRoute::Eigenpairs,
        eigenvalues: kept,
        degree: 0,
        achieved_error: worst,
        spectral_bound: a.spectral_upper_bound().as_f64(),
    })
}

/// Smooth step `0.5 erfc((x - mid) / w)` with `w` chosen so that the step
/// is within `tol / 4` of the indicator outside `[E, E + gap]`.
struct Step {
    mid: f64,
    w: f64,
}

impl Step {
    fn new(e: f64, gap: f64, tol: f64) -> Self {
        let target = tol / 4.0;
        let (mut lo, mut hi) = (0.0f64, 40.0f64);
        for _ in 0..200 {
            let z = 0.5 * (lo + hi);
            if 0.5 * libm::erfc(z) > target {
                lo = z;
            } else {
                hi = z;
            }
        }
        // Widen the cutoff slightly so rounding in `x - mid` at the gap edges
        // cannot push the value past `target`.
        Step { mid: e + gap / 2.0, w: gap / (2.0 * hi * (1.0 + 1e-9)) }
    }

    fn eval(&self, x: f64) -> f64 {
        0.5 * libm::erfc((x - self.mid) / self.w)
    }
}

/// Chebyshev interpolation coefficients of `g` on `[0, b]` at `deg + 1`
/// Chebyshev points.
fn interpolate(g: impl Fn(f64) -> f64, b: f64, deg: usize) -> Vec<f64> {
    let m = deg + 1;
    let pi = std::f64::consts::PI;
    let vals: Vec<f64> = (0..m)
        .map(|j| {
            let theta = pi * (j as f64 + 0.5) / m as f64;
            g(0.5 * b * (1.0 + theta.cos()))
        })
        .collect();
    // cos(pi k (2j + 1) / (2m)) read from a table of period 4m.
    let table: Vec<f64> = (0..4 * m).map(|i| (pi * i as f64 / (2 * m) as f64).cos()).collect();
    (0..m)
        .map(|k| {
            let step = k % (4 * m);
            let mut idx = step;
            let mut s = 0.0;
            for v in &vals {
                s += v * table[idx];
                idx += 2 * step;
                if idx >= 4 * m {
                    idx %= 4 * m;
                }
            }
            let c = 2.0 * s / m as f64;
            if k == 0 {
                c / 2.0
            } else {
                c
            }
        })
        .collect()
}

fn clenshaw(coeffs: &[f64], y: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * y * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + y * b1 - b2
}

/// Sampled max deviation from the indicator of `[0, E]` away from the gap.
fn sampled_error(coeffs: &[f64], b: f64, e: f64, gap: f64) -> f64 {
    let samples = 2000;
    let mut worst = 0.0f64;
    let mut probe = |lo: f64, hi: f64, target: f64| {
        if hi < lo {
            return;
        }
        for i in 0..=samples {
            let x = lo + (hi - lo) * i as f64 / samples as f64;
            let p = clenshaw(coeffs, 2.0 * x / b - 1.0);
            worst = worst.max((p - target).abs());
        }
    };
    probe(0.0, e, 1.0);
    probe(e + gap, b, 0.0);
    worst
}

fn by_filter<T: Real, A: SymmetricOperator<T> + ?Sized>(a: &A, params: &ProjectorParams<T>, f: &[T]) -> Result<ProjectorOutput<T>> {
    let b = a.spectral_upper_bound().as_f64();
    let e = params.energy.as_f64();
    let gap = params.gap.as_f64();
    let tol = params.tolerance.as_f64();
    let out = |v, degree, err| ProjectorOutput {
        v,
        via: ProjectorRoute::PolynomialFilter,
        eigenvalues: Vec::new(),
        degree,
        achieved_error: err,
        spectral_bound: b,
    };
    if e >= b {
        return Ok(out(f.to_vec(), 0, 0.0));
    }
    let step = Step::new(e, gap, tol);
    // Coefficients at degree 2K estimate the interpolation error at degree
    // K by twice their tail; the step itself is within tol / 4 of the
    // indicator off the gap.
    let mut deg = 16usize;
    let mut fine = interpolate(|x| step.eval(x), b, 2 * deg);
    loop {
        let tail: f64 = fine[deg + 1..].iter().map(|c| c.abs()).sum();
        let coarse = interpolate(|x| step.eval(x), b, deg);
        let bound = tol / 4.0 + 2.0 * tail;
        if bound <= tol {
            let err = bound.max(sampled_error(&coarse, b, e, gap));
            if err <= tol {
                let coeffs: Vec<T> = coarse.into_iter().map(T::lit).collect();
                let (v, _) = chebyshev_apply(a, T::lit(b), &coeffs, f, None);
                return Ok(out(v, deg, err));
            }
        }
        if deg >= MAX_FILTER_DEGREE {
            return Err(Error::AccuracyFailure { disagreement: bound, allowed: tol });
        }
        deg *= 2;
        fine = interpolate(|x| step.eval(x), b, 2 * deg);
    }
}

const MAX_FILTER_DEGREE: usize = 1 << 14;
