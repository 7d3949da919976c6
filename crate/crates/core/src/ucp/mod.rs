//! Uncertainty-principle verification: `lambda_beta` curves, the abstract
//! BLS inequality, and the full construction on discretized geometries.

mod bls;
mod curve;
mod pipeline;

pub use bls::{verify_bls, BlsCheck, DENSE_CHECK_LIMIT};
pub use curve::{lambda_beta_curve, lambda_beta_curve_op, LambdaBetaCurve, LambdaBetaSample};
pub use pipeline::{verify_main, BallWitness, ChainSample, EigenRow, GeometrySummary, MainConfig, PassFlags, Provenance, UCPReport};
