//! Chebyshev expansions of functions of a symmetric operator with spectrum
//! in `[0, b]`, and the heat semigroup action built on them.

use serde::Serialize;

use super::SymmetricOperator;
use crate::error::{invalid, Error, Result};
use crate::linalg::norm;
use crate::scalar::Real;

/// `sum_k coeffs[k] T_k((2/b) H - I) f` by the three-term recurrence.
/// With `partial_at = Some(K)` the partial sum through degree `K` is
/// returned as well.
pub(crate) fn chebyshev_apply<T: Real, A: SymmetricOperator<T> + ?Sized>(
    a: &A,
    b: T,
    coeffs: &[T],
    f: &[T],
    partial_at: Option<usize>,
) -> (Vec<T>, Option<Vec<T>>) {
    let n = f.len();
    let alpha = T::lit(2.0) / b;
    let mut acc: Vec<T> = f.iter().map(|&x| coeffs[0] * x).collect();
    let mut partial = None;
    if partial_at == Some(0) {
        partial = Some(acc.clone());
    }
    if coeffs.len() == 1 {
        return (acc, partial);
    }
    let mut prev = f.to_vec();
    let mut cur = vec![T::zero(); n];
    a.apply(f, &mut cur);
    for (c, &x) in cur.iter_mut().zip(f) {
        *c = alpha * *c - x;
    }
    for (y, &c) in acc.iter_mut().zip(&cur) {
        *y += coeffs[1] * c;
    }
    if partial_at == Some(1) {
        partial = Some(acc.clone());
    }
    let mut tmp = vec![T::zero(); n];
    for (k, &ck) in coeffs.iter().enumerate().skip(2) {
        a.apply(&cur, &mut tmp);
        let two_alpha = T::lit(2.0) * alpha;
        for i in 0..n {
            let next = two_alpha * tmp[i] - T::lit(2.0) * cur[i] - prev[i];
            prev[i] = cur[i];
            cur[i] = next;
            acc[i] += ck * next;
        }
        if partial_at == Some(k) {
            partial = Some(acc.clone());
        }
    }
    (acc, partial)
}

/// `e^{-c} I_k(c)` for `k = 0..=kmax`, by Miller's backward recurrence
/// normalized with `sum = I_0 + 2 sum_k I_k = e^c`.
pub(crate) fn scaled_bessel_i(c: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if c == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = kmax + 30 + (12.0 * c.sqrt()) as usize + (c.min(50.0) as usize);
    let mut b_next = 0.0f64;
    let mut b = 1e-300f64;
    let mut vals = vec![0.0f64; start + 1];
    vals[start] = b;
    for k in (1..=start).rev() {
        let b_prev = b_next + (2.0 * k as f64 / c) * b;
        b_next = b;
        b = b_prev;
        vals[k - 1] = b;
        if b > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            b *= 1e-250;
            b_next *= 1e-250;
        }
    }
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        sum += 2.0 * vals[k];
    }
    sum += vals[0];
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / sum;
    }
    out
}

/// Chebyshev coefficients of `exp(-t x)` on `[0, b]` truncated at the
/// smallest degree whose tail `sum_{k>K} |a_k|` is at most `tol`.
/// Returns the coefficients through degree `2K` when `double` is set, the
/// degree `K` and its tail bound.
pub(crate) fn heat_coefficients(tb: f64, tol: f64, double: bool) -> (Vec<f64>, usize, f64) {
    let c = tb / 2.0;
    let mut kmax = ((2.0 * c * ((1.0 / tol).ln() + 5.0)).sqrt() + 2.0 * (1.0 / tol).ln() + 20.0) as usize;
    loop {
        let ib = scaled_bessel_i(c, 2 * kmax + 2);
        // tail[k] = sum_{j > k} 2 I_j, accumulated from the far end.
        let mut tails = vec![0.0; ib.len()];
        let mut acc = 0.0;
        for k in (0..ib.len()).rev() {
            tails[k] = acc;
            acc += 2.0 * ib[k];
        }
        if let Some(deg) = (0..=kmax).find(|&k| tails[k] <= tol) {
            let top = if double { (2 * deg).max(1) } else { deg };
            let coeffs = (0..=top)
                .map(|k| {
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    if k == 0 {
                        ib[0]
                    } else {
                        2.0 * sign * ib[k]
                    }
                })
                .collect();
            return (coeffs, deg, tails[deg]);
        }
        kmax *= 2;
    }
}

/// Parameters of the heat action. Without an explicit spectral bound the
/// Gershgorin bound of the operator is used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatActionParams<T> {
    pub t: T,
    pub tolerance: T,
    pub spectral_bound: Option<T>,
    /// Also evaluate at twice the degree and fail if the two disagree by
    /// more than `2 * tolerance * ||f||`.
    pub check: bool,
}

impl<T: Real> HeatActionParams<T> {
    pub fn new(t: T, tolerance: T) -> Self {
        Self { t, tolerance, spectral_bound: None, check: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatAction<T> {
    #[serde(skip)]
    pub v: Vec<T>,
    pub degree: usize,
    /// Uniform error bound of the polynomial on `[0, spectral_bound]`.
    pub truncation_error: f64,
    pub spectral_bound: f64,
    /// `||p_K(H) f - p_2K(H) f|| / ||f||` when checked.
    pub check_disagreement: Option<f64>,
}

/// `exp(-t H) f` for PSD `H`, with `||v - exp(-tH) f|| <= tolerance * ||f||`.
pub fn apply_heat<T: Real, A: SymmetricOperator<T> + ?Sized>(a: &A, params: &HeatActionParams<T>, f: &[T]) -> Result<HeatAction<T>> {
    if f.len() != a.dim() {
        return Err(invalid("vector length differs from the operator dimension"));
    }
    if !(params.t >= T::zero()) || !params.t.is_finite() {
        return Err(invalid("time must be finite and nonnegative"));
    }
    if !(params.tolerance > T::zero()) {
        return Err(invalid("tolerance must be positive"));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(invalid("input vector is not finite"));
    }
    let b = match params.spectral_bound {
        Some(b) => b,
        None => a.spectral_upper_bound(),
    };
    if !(b >= T::zero()) || !b.is_finite() {
        return Err(invalid("spectral bound must be finite and nonnegative"));
    }
    let tb = (params.t * b).as_f64();
    if tb == 0.0 {
        return Ok(HeatAction { v: f.to_vec(), degree: 0, truncation_error: 0.0, spectral_bound: b.as_f64(), check_disagreement: None });
    }
    let (coeffs, deg, tail) = heat_coefficients(tb, params.tolerance.as_f64(), params.check);
    let coeffs: Vec<T> = coeffs.into_iter().map(T::lit).collect();
    let (full, partial) = chebyshev_apply(a, b, &coeffs, f, params.check.then_some(deg));
    let mut out = HeatAction { v: full, degree: deg, truncation_error: tail, spectral_bound: b.as_f64(), check_disagreement: None };
    if let Some(p) = partial {
        let fn_ = norm(f).as_f64().max(f64::MIN_POSITIVE);
        let diff: Vec<T> = p.iter().zip(&out.v).map(|(x, y)| *x - *y).collect();
        let dis = norm(&diff).as_f64() / fn_;
        out.check_disagreement = Some(dis);
        let allowed = 2.0 * params.tolerance.as_f64();
        if dis > allowed {
            return Err(Error::AccuracyFailure { disagreement: dis, allowed });
        }
        out.v = p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_against_series() {
        // e^{-c} I_k(c) by the defining power series, for moderate c.
        for &c in &[0.1f64, 1.0, 5.0, 20.0] {
            let ib = scaled_bessel_i(c, 10);
            for (k, &v) in ib.iter().enumerate() {
                let mut term = (c / 2.0).powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>();
                let mut s = 0.0;
                for m in 0..200 {
                    s += term;
                    term *= (c / 2.0).powi(2) / ((m + 1) as f64 * (m + 1 + k) as f64);
                }
                let want = s * (-c).exp();
                assert!((v - want).abs() <= 1e-13 * want.max(1e-300) + 1e-300, "c={c} k={k}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn large_argument_normalization() {
        let ib = scaled_bessel_i(5000.0, 2000);
        // e^{-c} I_0(c) ~ 1/sqrt(2 pi c).
        let asym = 1.0 / (2.0 * std::f64::consts::PI * 5000.0f64).sqrt() * (1.0 + 1.0 / (8.0 * 5000.0));
        assert!((ib[0] / asym - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scalar_exponential_is_uniformly_accurate() {
        for &(tb, tol) in &[(0.5, 1e-12), (30.0, 1e-10), (4000.0, 1e-8)] {
            let (coeffs, _, tail) = heat_coefficients(tb, tol, false);
            assert!(tail <= tol);
            for i in 0..=400 {
                let y = -1.0 + 2.0 * i as f64 / 400.0;
                let theta = y.acos();
                let p: f64 = coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 * theta).cos()).sum();
                let exact = (-tb / 2.0 * (1.0 + y)).exp();
                assert!((p - exact).abs() <= tol * 1.01 + 1e-14, "tb={tb} y={y}: {p} vs {exact}");
            }
        }
    }
}
