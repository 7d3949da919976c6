//! Eigenpairs, heat semigroup actions, spectral projectors and semigroup
//! difference norms for assembled operators.

mod chebyshev;
mod io;
mod lanczos;
mod projector;
mod semigroup;

pub use chebyshev::{apply_heat, HeatAction, HeatActionParams};
pub use io::{read_spectral_result, write_spectral_result};
pub use lanczos::{smallest_eigs, smallest_eigs_with, EigOptions, SpectralResult};
pub use projector::{spectral_projector_apply, ProjectorOutput, ProjectorParams, ProjectorRoute};
pub use semigroup::{semigroup_diff_norm, SemigroupDiffEstimate, SemigroupDiffOptions};

use crate::discretize::SparseSymmetricOperator;
use crate::linalg::{normalize, seeded_vector};
use crate::scalar::Real;

/// A symmetric linear map given by its action.
pub trait SymmetricOperator<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn apply(&self, x: &[T], y: &mut [T]);

    /// An upper bound on the spectrum. The default runs 50 steps of power
    /// iteration and inflates the Rayleigh quotient by its residual and a
    /// factor 1.01; implementations with a rigorous bound override it.
    fn spectral_upper_bound(&self) -> T {
        let n = self.dim();
        if n == 0 {
            return T::zero();
        }
        let mut x = seeded_vector::<T>(n, 0xb0b, 0);
        normalize(&mut x);
        let mut y = vec![T::zero(); n];
        let mut est = T::zero();
        let mut res = T::zero();
        for _ in 0..50 {
            self.apply(&x, &mut y);
            est = crate::linalg::dot(&x, &y);
            res = y.iter().zip(&x).map(|(a, b)| (*a - est * *b) * (*a - est * *b)).fold(T::zero(), |s, v| s + v).sqrt();
            if normalize(&mut y) == T::zero() {
                return T::zero();
            }
            std::mem::swap(&mut x, &mut y);
        }
        (est.abs() + res) * T::lit(1.01)
    }
}

impl<T: Real> SymmetricOperator<T> for SparseSymmetricOperator<T> {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        SparseSymmetricOperator::apply(self, x, y)
    }

    /// Gershgorin bound, rigorous for any symmetric matrix.
    fn spectral_upper_bound(&self) -> T {
        self.gershgorin_bound()
    }
}

impl<T: Real, A: SymmetricOperator<T> + ?Sized> SymmetricOperator<T> for &A {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        (**self).apply(x, y)
    }

    fn spectral_upper_bound(&self) -> T {
        (**self).spectral_upper_bound()
    }
}
