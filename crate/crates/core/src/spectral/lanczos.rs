//! Thick-restart Lanczos with full reorthogonalization for the smallest
//! eigenpairs of a symmetric operator.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SymmetricOperator;
use crate::error::{invalid, Result};
use crate::linalg::{axpy, dot, norm, scale, seeded_vector, SymmetricEigen, BLOCK};
use crate::scalar::Real;

/// Sorted eigenpairs with residual certificates `||H v - lambda v||_2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult<T> {
    pub eigenvalues: Vec<T>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<T>>,
    pub residuals: Vec<T>,
    /// Operator applications spent.
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: T,
}

impl<T: Real> SpectralResult<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_overlap(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.len() {
            for j in 0..i {
                worst = worst.max(dot(&self.eigenvectors[i], &self.eigenvectors[j]).abs());
            }
        }
        worst
    }
}

/// Solver controls. `max_basis = 0` picks a size from `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigOptions {
    pub max_basis: usize,
    pub max_matvecs: usize,
    pub seed: u64,
    /// Re-run in the orthogonal complement of the computed vectors to catch
    /// eigenvalues a single Krylov sequence can miss (exact multiplicities).
    pub verify_multiplicity: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { max_basis: 0, max_matvecs: 200_000, seed: 0x5eed, verify_multiplicity: true }
    }
}

/// The `k` smallest eigenpairs, with default options.
pub fn smallest_eigs<T: Real, A: SymmetricOperator<T> + ?Sized>(a: &A, k: usize, tol: T) -> Result<SpectralResult<T>> {
    smallest_eigs_with(a, k, tol, &EigOptions::default())
}

pub fn smallest_eigs_with<T: Real, A: SymmetricOperator<T> + ?Sized>(
    a: &A,
    k: usize,
    tol: T,
    opts: &EigOptions,
) -> Result<SpectralResult<T>> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if !(tol > T::zero()) {
        return Err(invalid("tolerance must be positive"));
    }
    let mut budget = opts.max_matvecs;
    let first = run(a, k, tol, opts, &[], opts.seed, &mut budget)?;
    let mut pairs: Vec<(T, Vec<T>)> = first.into_iter().collect();
    let mut stream = 1;
    if opts.verify_multiplicity && k >= 2 {
        while pairs.len() < n && budget > 0 && stream < 64 {
            let locked: Vec<&[T]> = pairs.iter().map(|(_, v)| v.as_slice()).collect();
            let extra = k.min(4).min(n - pairs.len());
            let found = run(a, extra, tol, opts, &locked, opts.seed.wrapping_add(stream), &mut budget)?;
            stream += 1;
            let kth = pairs[k - 1].0;
            let missed: Vec<(T, Vec<T>)> = found.into_iter().filter(|(l, _)| *l < kth - tol).collect();
            if missed.is_empty() {
                break;
            }
            pairs.extend(missed);
            pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite Ritz values"));
            pairs.truncate(k);
        }
    }
    let mut result = SpectralResult {
        eigenvalues: Vec::with_capacity(k),
        eigenvectors: Vec::with_capacity(k),
        residuals: Vec::with_capacity(k),
        iterations: opts.max_matvecs - budget,
        converged: true,
        tolerance: tol,
    };
    let mut w = vec![T::zero(); n];
    for (_, v) in pairs {
        a.apply(&v, &mut w);
        let lambda = dot(&v, &w);
        axpy(-lambda, &v, &mut w);
        let r = norm(&w);
        result.converged &= r <= tol;
        result.eigenvalues.push(lambda);
        result.eigenvectors.push(v);
        result.residuals.push(r);
    }
    result.iterations += k;
    Ok(result)
}

/// One thick-restart Lanczos run in the orthogonal complement of `locked`.
fn run<T: Real, A: SymmetricOperator<T> + ?Sized>(
    a: &A,
    k: usize,
    tol: T,
    opts: &EigOptions,
    locked: &[&[T]],
    seed: u64,
    budget: &mut usize,
) -> Result<Vec<(T, Vec<T>)>> {
    let n = a.dim();
    let avail = n - locked.len();
    if k > avail {
        return Err(invalid("not enough room in the complement"));
    }
    let m = if opts.max_basis == 0 { (2 * k + 20).max(30) } else { opts.max_basis.max(k + 2) }.min(avail);
    let target = tol * T::lit(0.5);

    let mut stream = 0u64;
    let mut fresh = |basis: &[Vec<T>]| -> Option<Vec<T>> {
        for _ in 0..4 {
            let mut v = seeded_vector::<T>(n, seed, stream);
            stream += 1;
            let refs: Vec<&[T]> = locked.iter().copied().chain(basis.iter().map(|b| b.as_slice())).collect();
            orthogonalize(&mut v, &refs);
            orthogonalize(&mut v, &refs);
            let nv = norm(&v);
            if nv > T::lit(1e-8) {
                scale(T::one() / nv, &mut v);
                return Some(v);
            }
        }
        None
    };

    let mut v: Vec<Vec<T>> = vec![fresh(&[]).ok_or_else(|| invalid("cannot draw a start vector"))?];
    let mut tm = vec![T::zero(); m * m];
    let mut anorm = T::zero();
    let mut w = vec![T::zero(); n];
    loop {
        let mut j = v.len() - 1;
        let mut beta_last = T::zero();
        let mut r_last: Option<Vec<T>> = None;
        loop {
            a.apply(&v[j], &mut w);
            *budget = budget.saturating_sub(1);
            let refs: Vec<&[T]> = v.iter().map(|x| x.as_slice()).collect();
            if !locked.is_empty() {
                orthogonalize(&mut w, locked);
            }
            let mut h = orthogonalize(&mut w, &refs);
            if !locked.is_empty() {
                orthogonalize(&mut w, locked);
            }
            let h2 = orthogonalize(&mut w, &refs);
            h.iter_mut().zip(&h2).for_each(|(x, y)| *x += *y);
            for (i, &hi) in h.iter().enumerate() {
                tm[i * m + j] = hi;
                tm[j * m + i] = hi;
            }
            let beta = norm(&w);
            anorm = anorm.max(h[j].abs() + beta);
            let breakdown = beta <= T::epsilon() * T::lit(100.0) * anorm.max(T::min_positive_value());
            if j + 1 == m {
                if !breakdown {
                    beta_last = beta;
                    scale(T::one() / beta, &mut w);
                    r_last = Some(w.clone());
                }
                break;
            }
            let next = if breakdown {
                match fresh(&v) {
                    Some(f) => f,
                    None => break,
                }
            } else {
                let mut x = w.clone();
                scale(T::one() / beta, &mut x);
                x
            };
            for i in 0..=j {
                tm[i * m + j + 1] = T::zero();
                tm[(j + 1) * m + i] = T::zero();
            }
            if !breakdown {
                tm[(j + 1) * m + j] = beta;
                tm[j * m + j + 1] = beta;
            }
            v.push(next);
            j += 1;
            if *budget == 0 {
                break;
            }
        }
        let mm = v.len();
        let mut small = vec![T::zero(); mm * mm];
        for i in 0..mm {
            for c in 0..mm {
                small[i * mm + c] = tm[i * m + c];
            }
        }
        let eig = SymmetricEigen::new(&small, mm)?;
        let kk = k.min(mm);
        let done = (0..kk).all(|i| (beta_last * eig.vectors[(mm - 1) * mm + i]).abs() <= target);
        let exhausted = r_last.is_none();
        if done || exhausted || *budget == 0 {
            let coeffs: Vec<Vec<T>> = (0..kk).map(|i| eig.vector(i)).collect();
            let vecs = combine(&v, &coeffs, n);
            return Ok(eig.values[..kk].iter().copied().zip(vecs).collect());
        }
        let keep = (k + (mm - k) / 2).min(mm - 1).max(k);
        let coeffs: Vec<Vec<T>> = (0..keep).map(|i| eig.vector(i)).collect();
        let mut nv = combine(&v, &coeffs, n);
        tm.iter_mut().for_each(|x| *x = T::zero());
        for i in 0..keep {
            tm[i * m + i] = eig.values[i];
            let c = beta_last * eig.vectors[(mm - 1) * mm + i];
            tm[i * m + keep] = c;
            tm[keep * m + i] = c;
        }
        nv.push(r_last.expect("residual vector present"));
        v = nv;
    }
}

/// One classical Gram-Schmidt pass against `basis`; returns the coefficients.
/// Coefficients are reduced in fixed row blocks, so the result is
/// independent of the thread count.
pub(crate) fn orthogonalize<T: Real>(w: &mut [T], basis: &[&[T]]) -> Vec<T> {
    let p = basis.len();
    if p == 0 {
        return Vec::new();
    }
    let partial: Vec<Vec<T>> = w
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(c, wc)| {
            let off = c * BLOCK;
            basis.iter().map(|b| crate::scalar::dot(&b[off..off + wc.len()], wc)).collect()
        })
        .collect();
    let mut h = vec![T::zero(); p];
    for part in partial {
        for (hi, x) in h.iter_mut().zip(part) {
            *hi += x;
        }
    }
    w.par_chunks_mut(BLOCK).enumerate().for_each(|(c, wc)| {
        let off = c * BLOCK;
        for (b, &hi) in basis.iter().zip(&h) {
            let len = wc.len();
            for (wi, &bi) in wc.iter_mut().zip(&b[off..off + len]) {
                *wi -= hi * bi;
            }
        }
    });
    h
}

/// `sum_j coeffs[i][j] * v[j]` for every `i`.
fn combine<T: Real>(v: &[Vec<T>], coeffs: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let mut out = vec![vec![T::zero(); n]; coeffs.len()];
    for (u, c) in out.iter_mut().zip(coeffs) {
        u.par_chunks_mut(BLOCK).enumerate().for_each(|(blk, uc)| {
            let off = blk * BLOCK;
            for (vj, &cj) in v.iter().zip(c) {
                let len = uc.len();
                for (x, &y) in uc.iter_mut().zip(&vj[off..off + len]) {
                    *x += cj * y;
                }
            }
        });
    }
    out
}
