//! Dense symmetric eigendecomposition: Householder reduction to tridiagonal
//! form followed by the implicit QL iteration.

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Eigenvalues in ascending order with orthonormal eigenvectors stored as
/// columns of a row-major `n x n` matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen<T> {
    pub n: usize,
    pub values: Vec<T>,
    pub vectors: Vec<T>,
}

impl<T: Real> SymmetricEigen<T> {
    /// Decomposes the symmetric row-major matrix `a`. Only the lower triangle is read.
    pub fn new(a: &[T], n: usize) -> Result<Self> {
        Self::compute(a, n, true)
    }

    pub fn values_only(a: &[T], n: usize) -> Result<Vec<T>> {
        Ok(Self::compute(a, n, false)?.values)
    }

    fn compute(a: &[T], n: usize, want_vectors: bool) -> Result<Self> {
        if a.len() != n * n {
            return Err(invalid("matrix size mismatch"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        let mut z = a.to_vec();
        for i in 0..n {
            for j in i + 1..n {
                z[i * n + j] = z[j * n + i];
            }
        }
        let mut d = vec![T::zero(); n];
        let mut e = vec![T::zero(); n];
        tred2(&mut z, n, &mut d, &mut e);
        tql2(&mut z, n, &mut d, &mut e, want_vectors)?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
        let values = order.iter().map(|&i| d[i]).collect();
        let vectors = if want_vectors {
            let mut v = vec![T::zero(); n * n];
            for (new, &old) in order.iter().enumerate() {
                for r in 0..n {
                    v[r * n + new] = z[r * n + old];
                }
            }
            v
        } else {
            Vec::new()
        };
        Ok(Self { n, values, vectors })
    }

    pub fn vector(&self, k: usize) -> Vec<T> {
        (0..self.n).map(|r| self.vectors[r * self.n + k]).collect()
    }
}

/// Eigen-decomposition of a symmetric tridiagonal matrix given by its
/// diagonal and off-diagonal.
pub fn tridiagonal_eigen<T: Real>(diag: &[T], off: &[T]) -> Result<SymmetricEigen<T>> {
    let n = diag.len();
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        a[i * n + i] = diag[i];
        if i + 1 < n {
            a[(i + 1) * n + i] = off[i];
        }
    }
    SymmetricEigen::new(&a, n)
}

// Householder tridiagonalization; on exit z holds the accumulated transform.
fn tred2<T: Real>(z: &mut [T], n: usize, d: &mut [T], e: &mut [T]) {
    if n == 0 {
        return;
    }
    for j in 0..n {
        d[j] = z[(n - 1) * n + j];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = z[(i - 1) * n + j];
                z[i * n + j] = T::zero();
                z[j * n + i] = T::zero();
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for j in 0..i {
                e[j] = T::zero();
            }
            for j in 0..i {
                f = d[j];
                z[j * n + i] = f;
                g = e[j] + z[j * n + j] * f;
                for k in j + 1..i {
                    g += z[k * n + j] * d[k];
                    e[k] += z[k * n + j] * f;
                }
                e[j] = g;
            }
            f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    z[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = z[(i - 1) * n + j];
                z[i * n + j] = T::zero();
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        z[(n - 1) * n + i] = z[i * n + i];
        z[i * n + i] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = z[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += z[k * n + i + 1] * z[k * n + j];
                }
                for k in 0..=i {
                    z[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            z[k * n + i + 1] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = z[(n - 1) * n + j];
        z[(n - 1) * n + j] = T::zero();
    }
    z[(n - 1) * n + n - 1] = T::one();
    e[0] = T::zero();
}

// Implicit QL with Wilkinson-type shifts on the tridiagonal (d, e).
fn tql2<T: Real>(z: &mut [T], n: usize, d: &mut [T], e: &mut [T], want_vectors: bool) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    let eps = T::epsilon();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(invalid("QL iteration did not converge"));
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in l + 2..n {
                    d[i] -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if want_vectors {
                        for k in 0..n {
                            h = z[k * n + i + 1];
                            z[k * n + i + 1] = s * z[k * n + i] + c * h;
                            z[k * n + i] = c * z[k * n + i] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    Ok(())
}

/// Smallest eigenvalue of a small symmetric row-major matrix.
pub fn min_eigenvalue<T: Real>(a: &[T], n: usize) -> Result<T> {
    Ok(SymmetricEigen::values_only(a, n)?[0])
}
