//! Dense kernels: symmetric eigendecomposition and deterministic vector
//! reductions.

mod dense;

pub use dense::{min_eigenvalue, tridiagonal_eigen, SymmetricEigen};

use rayon::prelude::*;

use crate::scalar::Real;

/// Fixed block length for reductions; partial sums are combined in block
/// order, so results do not depend on the thread count.
pub(crate) const BLOCK: usize = 4096;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= BLOCK {
        return crate::scalar::dot(a, b);
    }
    let partial: Vec<T> = a
        .par_chunks(BLOCK)
        .zip(b.par_chunks(BLOCK))
        .map(|(x, y)| crate::scalar::dot(x, y))
        .collect();
    partial.into_iter().fold(T::zero(), |s, v| s + v)
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    if y.len() <= BLOCK {
        y.iter_mut().zip(x).for_each(|(yi, &xi)| *yi += alpha * xi);
        return;
    }
    y.par_chunks_mut(BLOCK).zip(x.par_chunks(BLOCK)).for_each(|(yc, xc)| {
        yc.iter_mut().zip(xc).for_each(|(yi, &xi)| *yi += alpha * xi);
    });
}

pub fn scale<T: Real>(alpha: T, y: &mut [T]) {
    if y.len() <= BLOCK {
        y.iter_mut().for_each(|v| *v *= alpha);
        return;
    }
    y.par_chunks_mut(BLOCK).for_each(|c| c.iter_mut().for_each(|v| *v *= alpha));
}

/// Normalizes `v` in place and returns its former norm.
pub fn normalize<T: Real>(v: &mut [T]) -> T {
    let n = norm(v);
    if n > T::zero() {
        scale(T::one() / n, v);
    }
    n
}

/// Deterministic standard-normal-free start vector: uniform entries in
/// `[-1, 1]` from a seeded ChaCha stream.
pub fn seeded_vector<T: Real>(n: usize, seed: u64, stream: u64) -> Vec<T> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_dot_is_thread_independent() {
        let a: Vec<f64> = (0..50_000usize).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 - 0.5).collect();
        let b: Vec<f64> = (0..50_000usize).map(|i| ((i * 104729) % 997) as f64 * 1e-3).collect();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| dot(&a, &b));
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| dot(&a, &b));
        assert_eq!(one.to_bits(), four.to_bits());
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((one - naive).abs() < 1e-9 * naive.abs());
    }

    #[test]
    fn seeded_vectors_repeat() {
        let a: Vec<f64> = seeded_vector(10, 7, 0);
        assert_eq!(a, seeded_vector::<f64>(10, 7, 0));
        assert_ne!(a, seeded_vector::<f64>(10, 7, 1));
    }
}
