//! TOML schema for single experiments and campaigns. Every table rejects
//! unknown keys, and the whole file is validated before anything runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error in {}: {}", self.path.display(), self.message)
    }
}

impl std::error::Error for ConfigError {}

fn default_dim() -> usize {
    3
}

fn default_one() -> f64 {
    1.0
}

fn default_half() -> f64 {
    0.5
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    WholeSpace { dim: usize, half_width: f64 },
    /// `normal . x <= offset` for every row, optionally clipped to a ball.
    Halfspaces {
        normals: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        interior_point: Vec<f64>,
        clip_center: Option<Vec<f64>>,
        clip_radius: Option<f64>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum BallsSpec {
    Inline { centers: Vec<Vec<f64>>, radii: Vec<f64> },
    Csv { path: PathBuf },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    Constant(f64),
    Decaying(f64),
}

/// Host domain `G` and obstacle set `S`.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// `G = B_radius(0)`, `S = B_rho(0)`.
    Annulus {
        #[serde(default = "default_dim")]
        d: usize,
        #[serde(default = "default_one")]
        radius: f64,
        rho: f64,
    },
    /// Whole space truncated to `[-half_width, half_width]^d`, `S = B_inner(0)`.
    Wall {
        #[serde(default = "default_dim")]
        d: usize,
        half_width: f64,
        inner: f64,
    },
    /// `n^d` cells of side `ell` with a centered ball of radius `rho` each.
    BallPool {
        #[serde(default = "default_dim")]
        d: usize,
        n: usize,
        #[serde(default = "default_one")]
        ell: f64,
        rho: f64,
    },
    /// `count` balls placed uniformly in `[0, side]^d`.
    Scattered {
        #[serde(default = "default_dim")]
        d: usize,
        side: f64,
        count: usize,
        radius: f64,
        seed: u64,
        /// Sample spacing for the covering-radius certificate.
        spacing: Option<f64>,
    },
    /// Whole space perforated by balls on the integer lattice.
    Lattice {
        #[serde(default = "default_dim")]
        d: usize,
        profile: ProfileSpec,
        half_width: f64,
    },
    Custom {
        domain: DomainSpec,
        balls: Option<BallsSpec>,
        /// Covering radius and thickness, when known.
        r: Option<f64>,
        delta: Option<f64>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Spacings, coarse to fine. Eigenvalue tasks extrapolate the last two.
    pub h: Vec<f64>,
    #[serde(default = "default_one")]
    pub richardson_order: f64,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_seed() -> u64 {
    0x5eed
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self { tol: default_tol(), seed: default_seed() }
    }
}

/// A bound used as a check limit: a literal, or a named closed-form bound
/// whose parameters may be taken from the geometry (`R`, `delta`, `rho`,
/// `ell`, `vol_G`, `d`).
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged, deny_unknown_fields)]
pub enum BoundRef {
    Value(f64),
    Named {
        bound: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        #[serde(default)]
        from_geometry: Vec<String>,
        /// Read this entry of the report extras instead of its value.
        extra: Option<String>,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub cell: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub paths: usize,
    pub dt: f64,
    #[serde(default = "default_one")]
    pub horizon: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    One,
    /// `exp(-|x|^2)`.
    Gaussian,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// Evaluate a closed-form bound and optionally compare it to a target.
    Bounds {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
        /// Parameter dividing the value before the comparison.
        normalize_by: Option<String>,
        approx: Option<f64>,
        #[serde(default)]
        rel_tol: f64,
        min: Option<f64>,
        max: Option<f64>,
    },
    /// Ground energy of the Neumann/Dirichlet operator on each grid level,
    /// extrapolated and checked against bounds.
    Eigen {
        lower: Option<BoundRef>,
        upper: Option<BoundRef>,
        /// Relative slack applied to both limits.
        #[serde(default)]
        allowance: f64,
        /// Required ratio value/lower, reported as a separate check.
        min_margin: Option<f64>,
    },
    /// Lemma-type bound on hitting `S` with little occupation of `B_rho(S)`.
    HitAndRun {
        rho: f64,
        alphas: Vec<f64>,
        start: Vec<f64>,
        mc: MonteCarloSpec,
    },
    /// Heat semigroup with and without the extra Dirichlet condition on `S`.
    Semigroup {
        rho: f64,
        betas: Vec<f64>,
        #[serde(default = "default_one")]
        t: f64,
        mc: Option<MonteCarloSpec>,
        #[serde(default)]
        starts: Vec<Vec<f64>>,
    },
    /// `lambda_beta <= mu_beta <= lambda_Omega` for `B = B_rho(S)`.
    OrderingChain {
        rho: f64,
        betas: Vec<f64>,
        #[serde(default = "default_chain_slack")]
        rel_slack: f64,
    },
    /// Random operators checked against the dense projected oracle.
    BlsRandom {
        cases: usize,
        n_min: usize,
        n_max: usize,
        betas: Vec<f64>,
        #[serde(default = "default_bls_tol")]
        check_tol: f64,
    },
    /// The full uncertainty-principle pipeline.
    Ucp {
        r: Option<f64>,
        delta: Option<f64>,
        #[serde(default = "default_one")]
        eta0: f64,
        #[serde(default = "default_half")]
        t: f64,
        betas: Option<Vec<f64>>,
        beta_cap: Option<f64>,
        max_k: Option<usize>,
        spacing: Option<f64>,
        coefficients: Option<Coefficients>,
        #[serde(default = "default_margin")]
        constant_margin: f64,
    },
    /// Feynman-Kac functional from one start point.
    FeynmanKac {
        beta: f64,
        /// The potential lives on `B_rho(S)`; zero means `B = S`.
        #[serde(default)]
        rho: f64,
        start: Vec<f64>,
        #[serde(default)]
        killed: bool,
        f: TestFunction,
        mc: MonteCarloSpec,
    },
}

fn default_chain_slack() -> f64 {
    1e-8
}

fn default_bls_tol() -> f64 {
    1e-9
}

fn default_margin() -> f64 {
    10.0
}

impl TaskSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskSpec::Bounds { .. } => "bounds",
            TaskSpec::Eigen { .. } => "eigen",
            TaskSpec::HitAndRun { .. } => "hit_and_run",
            TaskSpec::Semigroup { .. } => "semigroup",
            TaskSpec::OrderingChain { .. } => "ordering_chain",
            TaskSpec::BlsRandom { .. } => "bls_random",
            TaskSpec::Ucp { .. } => "ucp",
            TaskSpec::FeynmanKac { .. } => "feynman_kac",
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub geometry: Option<GeometrySpec>,
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    pub task: TaskSpec,
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Overrides every experiment's solver seed when present.
    pub seed: Option<u64>,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<ExperimentConfig>,
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError { path: path.into(), message: e.to_string() })
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError { path: path.into(), message: e.to_string() })
}

impl CampaignConfig {
    pub fn from_str(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let c: Self = parse(path, text)?;
        c.validate(path)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_str(path, &read(path)?)
    }

    fn validate(&self, path: &Path) -> Result<(), ConfigError> {
        let mut seen = std::collections::BTreeSet::new();
        for (i, e) in self.experiments.iter().enumerate() {
            if !seen.insert(e.name.as_str()) {
                return Err(ConfigError { path: path.into(), message: format!("experiment[{i}]: duplicate name `{}`", e.name) });
            }
            e.validate().map_err(|m| ConfigError { path: path.into(), message: format!("experiment[{i}] `{}`: {m}", e.name) })?;
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let c: Self = parse(path, &read(path)?)?;
        c.validate().map_err(|message| ConfigError { path: path.into(), message })?;
        Ok(c)
    }

    /// Structural checks that need no computation.
    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err("name must be nonempty and contain no path separators".into());
        }
        let needs_geometry = !matches!(self.task, TaskSpec::Bounds { .. } | TaskSpec::BlsRandom { .. });
        if needs_geometry && self.geometry.is_none() {
            return Err(format!("task `{}` needs a [geometry] table", self.task.kind()));
        }
        let needs_grid = matches!(
            self.task,
            TaskSpec::Eigen { .. } | TaskSpec::Semigroup { .. } | TaskSpec::OrderingChain { .. } | TaskSpec::Ucp { .. }
        );
        match (&self.grid, needs_grid) {
            (None, true) => return Err(format!("task `{}` needs a [grid] table", self.task.kind())),
            (Some(g), _) => {
                if g.h.is_empty() || g.h.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
                    return Err("grid.h must be a nonempty list of positive spacings".into());
                }
                if !(g.richardson_order > 0.0) {
                    return Err("grid.richardson_order must be positive".into());
                }
            }
            _ => {}
        }
        if !(self.solver.tol > 0.0) {
            return Err("solver.tol must be positive".into());
        }
        match &self.task {
            TaskSpec::HitAndRun { alphas, .. } if alphas.is_empty() => Err("alphas must be nonempty".into()),
            TaskSpec::Semigroup { betas, mc, starts, .. } => {
                if betas.is_empty() {
                    Err("betas must be nonempty".into())
                } else if mc.is_some() && starts.is_empty() {
                    Err("Monte Carlo gap estimation needs start points".into())
                } else {
                    Ok(())
                }
            }
            TaskSpec::OrderingChain { betas, .. } if betas.is_empty() => Err("betas must be nonempty".into()),
            TaskSpec::BlsRandom { n_min, n_max, betas, .. } => {
                if *n_min == 0 || n_min > n_max {
                    Err("need 0 < n_min <= n_max".into())
                } else if betas.is_empty() {
                    Err("betas must be nonempty".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}
