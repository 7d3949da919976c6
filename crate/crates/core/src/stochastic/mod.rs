//! Reflected Brownian motion (generator `Delta / 2`) with hitting
//! probabilities, occupation times and Feynman-Kac functionals.

mod estimate;
mod paths;

pub use estimate::{estimate_hit_and_run, estimate_semigroup_gap, feynman_kac, HitAndRunEstimate, MCEstimate, SemigroupGapEstimate};
pub use paths::{simulate_paths, PathConfig, PathOutcome};
