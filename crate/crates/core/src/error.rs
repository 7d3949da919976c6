use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("domain is unbounded and no truncation box was supplied")]
    UnboundedDomain,

    #[error("no active degrees of freedom remain after classification")]
    EmptyInterior,

    #[error("obstacle ball {index} (radius {radius}) contains no grid node at spacing {h}")]
    UnresolvedObstacle { index: usize, radius: f64, h: f64 },

    #[error("coefficient matrix at {location:?} has smallest eigenvalue {min_eig} < eta0 = {eta0}")]
    EllipticityViolation {
        location: Vec<f64>,
        min_eig: f64,
        eta0: f64,
    },

    #[error("log argument degenerate: bracket {0} is not positive")]
    DegenerateLog(f64),

    #[error("eigenvalue {eigenvalue} lies within {tol} of the interval edge {edge}")]
    GapUnresolved { eigenvalue: f64, edge: f64, tol: f64 },

    #[error("heat action failed its accuracy check: disagreement {disagreement} > {allowed}")]
    AccuracyFailure { disagreement: f64, allowed: f64 },

    #[error("reflection is not supported for {0} domains")]
    UnsupportedReflection(&'static str),

    #[error("set is not ({r}, {delta})-relatively dense: worst margin {margin} at {worst_point:?}")]
    DensenessNotCertified {
        r: f64,
        delta: f64,
        margin: f64,
        worst_point: Vec<f64>,
    },

    #[error("eigensolver did not converge: {converged} of {requested} pairs within tolerance after {iterations} operator applications")]
    NotConverged {
        requested: usize,
        converged: usize,
        iterations: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParams(msg.into())
}
