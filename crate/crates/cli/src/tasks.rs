//! Execution of one experiment: computes the task, records its data and
//! evaluates its declared checks. Failures keep whatever was computed.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use ucp_lab::bounds::{evaluate, semigroup_diff_bound};
use ucp_lab::discretize::{assemble_laplacian, classify_grid, Checkerboard, CoefficientField};
use ucp_lab::spectral::{semigroup_diff_norm, smallest_eigs_with, EigOptions, SemigroupDiffOptions};
use ucp_lab::stochastic::{estimate_hit_and_run, estimate_semigroup_gap, feynman_kac, PathConfig};
use ucp_lab::ucp::{lambda_beta_curve, verify_bls, verify_main, MainConfig};
use ucp_lab::{BallUnion, GridDiscretization, SparseSymmetricOperator};

use crate::config::{BoundRef, ExperimentConfig, GridSpec, MonteCarloSpec, TaskSpec, TestFunction};
use crate::scene::{build, Scene};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    /// `<=`, `>=` or `==`.
    pub relation: String,
    pub limit: Option<f64>,
}

/// Numeric table written as CSV next to the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub task: String,
    pub passed: bool,
    pub error: Option<String>,
    pub checks: Vec<Check>,
    pub data: BTreeMap<String, Value>,
    #[serde(skip)]
    pub tables: BTreeMap<String, Table>,
}

#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    data: BTreeMap<String, Value>,
    tables: BTreeMap<String, Table>,
}

impl Outcome {
    fn put<V: Serialize>(&mut self, key: &str, v: V) -> Result<()> {
        self.data.insert(key.into(), serde_json::to_value(v)?);
        Ok(())
    }

    fn le(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.checks.push(Check { name: name.into(), passed: value <= limit, value: Some(value), relation: "<=".into(), limit: Some(limit) });
    }

    fn ge(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.checks.push(Check { name: name.into(), passed: value >= limit, value: Some(value), relation: ">=".into(), limit: Some(limit) });
    }

    fn flag(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check { name: name.into(), passed, value: None, relation: "==".into(), limit: None });
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> ExperimentReport {
    let mut out = Outcome::default();
    let result = run_task(cfg, &mut out);
    let error = result.err().map(|e| format!("{e:#}"));
    let passed = error.is_none() && out.checks.iter().all(|c| c.passed);
    ExperimentReport {
        name: cfg.name.clone(),
        task: cfg.task.kind().into(),
        passed,
        error,
        checks: out.checks,
        data: out.data,
        tables: out.tables,
    }
}

fn scene(cfg: &ExperimentConfig) -> Result<Scene> {
    let spec = cfg.geometry.as_ref().ok_or_else(|| anyhow!("missing geometry"))?;
    build(spec)
}

fn grid_spec(cfg: &ExperimentConfig) -> Result<&GridSpec> {
    cfg.grid.as_ref().ok_or_else(|| anyhow!("missing grid"))
}

fn finest(cfg: &ExperimentConfig) -> Result<f64> {
    Ok(*grid_spec(cfg)?.h.last().expect("validated nonempty"))
}

fn eig_opts(cfg: &ExperimentConfig) -> EigOptions {
    EigOptions { seed: cfg.solver.seed, ..EigOptions::default() }
}

fn grid(sc: &Scene, s: &BallUnion, h: f64) -> Result<GridDiscretization> {
    Ok(classify_grid(&sc.g, s, h, sc.truncation.as_ref())?)
}

fn path_config(mc: &MonteCarloSpec, seed: u64, start: &[f64]) -> PathConfig<f64> {
    PathConfig { dt: mc.dt, horizon: mc.horizon, n_paths: mc.paths, seed, start: start.to_vec() }
}

/// Resolves a limit, taking named parameters from the scene.
pub fn resolve_bound(b: &BoundRef, sc: Option<&Scene>) -> Result<f64> {
    match b {
        BoundRef::Value(v) => Ok(*v),
        BoundRef::Named { bound, params, from_geometry, extra } => {
            let mut p = params.clone();
            for key in from_geometry {
                let sc = sc.ok_or_else(|| anyhow!("bound `{bound}` needs a geometry for `{key}`"))?;
                p.insert(key.clone(), sc.quantity(key)?);
            }
            let r = evaluate(bound, &p)?;
            match extra {
                None => Ok(r.value),
                Some(k) => r.extras.get(k).copied().ok_or_else(|| anyhow!("bound `{bound}` has no extra `{k}`")),
            }
        }
    }
}

fn run_task(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    match &cfg.task {
        TaskSpec::Bounds { name, params, normalize_by, approx, rel_tol, min, max } => {
            let r = evaluate(name, params)?;
            let value = match normalize_by {
                None => r.value,
                Some(k) => r.value / params.get(k).copied().ok_or_else(|| anyhow!("no parameter `{k}` to normalize by"))?,
            };
            out.put("report", &r)?;
            out.put("compared_value", value)?;
            if let Some(a) = approx {
                out.le("relative_error", (value / a - 1.0).abs(), *rel_tol);
            }
            if let Some(m) = min {
                out.ge("min", value, *m);
            }
            if let Some(m) = max {
                out.le("max", value, *m);
            }
            Ok(())
        }
        TaskSpec::Eigen { lower, upper, allowance, min_margin } => eigen(cfg, lower.as_ref(), upper.as_ref(), *allowance, *min_margin, out),
        TaskSpec::HitAndRun { rho, alphas, start, mc } => {
            let sc = scene(cfg)?;
            let b = sc.s.fattened(*rho)?;
            let pc = path_config(mc, cfg.solver.seed, start);
            let est = estimate_hit_and_run(&sc.g, &sc.s, &b, *rho, alphas, &pc)?;
            let mut t = Table::new(&["alpha", "estimate", "ci_halfwidth", "bound"]);
            for e in &est {
                out.le(format!("alpha={}", e.alpha), e.estimate.value - 2.0 * e.estimate.ci_halfwidth, e.bound);
                t.rows.push(vec![e.alpha, e.estimate.value, e.estimate.ci_halfwidth, e.bound]);
            }
            out.put("estimates", &est)?;
            out.tables.insert("alphas".into(), t);
            Ok(())
        }
        TaskSpec::Semigroup { rho, betas, t, mc, starts } => semigroup(cfg, *rho, betas, *t, mc.as_ref(), starts, true, out),
        TaskSpec::OrderingChain { rho, betas, rel_slack } => chain(cfg, *rho, betas, *rel_slack, out),
        TaskSpec::BlsRandom { cases, n_min, n_max, betas, check_tol } => bls_random(cfg, *cases, *n_min, *n_max, betas, *check_tol, out),
        TaskSpec::Ucp { .. } => ucp(cfg, out),
        TaskSpec::FeynmanKac { beta, rho, start, killed, f, mc } => {
            let sc = scene(cfg)?;
            let b = if *rho > 0.0 { sc.s.fattened(*rho)? } else { sc.s.clone() };
            let pc = path_config(mc, cfg.solver.seed, start);
            let est = match f {
                TestFunction::One => feynman_kac(&sc.g, &sc.s, &b, *beta, |_: &[f64]| 1.0, &pc, *killed)?,
                TestFunction::Gaussian => {
                    feynman_kac(&sc.g, &sc.s, &b, *beta, |x: &[f64]| (-x.iter().map(|v| v * v).sum::<f64>()).exp(), &pc, *killed)?
                }
            };
            out.put("estimate", est)?;
            Ok(())
        }
    }
}

fn eigen(cfg: &ExperimentConfig, lower: Option<&BoundRef>, upper: Option<&BoundRef>, allowance: f64, min_margin: Option<f64>, out: &mut Outcome) -> Result<()> {
    let sc = scene(cfg)?;
    let gs = grid_spec(cfg)?;
    out.put("geometry", sc.summary())?;
    let mut levels = Vec::new();
    let mut t = Table::new(&["h", "dofs", "lambda", "residual", "matvecs"]);
    let mut all_converged = true;
    for &h in &gs.h {
        let grid = grid(&sc, &sc.s, h)?;
        let op = assemble_laplacian(&grid, 0.0, &BallUnion::empty(sc.dim()))?;
        let r = smallest_eigs_with(&op, 1, cfg.solver.tol, &eig_opts(cfg))?;
        all_converged &= r.converged;
        let (lambda, residual) = (r.eigenvalues[0], r.residuals[0]);
        t.rows.push(vec![h, grid.n_dofs() as f64, lambda, residual, r.iterations as f64]);
        levels.push(json!({"h": h, "dofs": grid.n_dofs(), "lambda": lambda, "residual": residual, "matvecs": r.iterations, "converged": r.converged}));
        out.put("levels", &levels)?;
    }
    out.tables.insert("levels".into(), t.clone());
    let n = t.rows.len();
    let fine = t.rows[n - 1][2];
    let value = if n >= 2 {
        let (hc, hf, coarse) = (t.rows[n - 2][0], t.rows[n - 1][0], t.rows[n - 2][2]);
        fine + (fine - coarse) / ((hc / hf).powf(gs.richardson_order) - 1.0)
    } else {
        fine
    };
    out.put("extrapolated", value)?;
    out.put("richardson_order", gs.richardson_order)?;
    // The closed-form bounds are stated for -Delta; the operator is -Delta/2.
    out.put("extrapolated_neg_laplacian", 2.0 * value)?;
    out.flag("converged", all_converged);
    if let Some(l) = lower {
        let lo = resolve_bound(l, Some(&sc))?;
        out.put("lower_bound", lo)?;
        out.ge("lower", value, lo * (1.0 - allowance));
        out.put("margin", value / lo)?;
        if let Some(m) = min_margin {
            out.ge("margin", value / lo, m);
        }
    }
    if let Some(u) = upper {
        let hi = resolve_bound(u, Some(&sc))?;
        out.put("upper_bound", hi)?;
        out.le("upper", value, hi * (1.0 + allowance));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn semigroup(
    cfg: &ExperimentConfig,
    rho: f64,
    betas: &[f64],
    t: f64,
    mc: Option<&MonteCarloSpec>,
    starts: &[Vec<f64>],
    with_grid: bool,
    out: &mut Outcome,
) -> Result<()> {
    let sc = scene(cfg)?;
    let d = sc.dim();
    let b = sc.s.fattened(rho)?;
    out.put("geometry", sc.summary())?;
    if with_grid {
        let h = finest(cfg)?;
        let grid_g = grid(&sc, &BallUnion::empty(d), h)?;
        let grid_s = grid(&sc, &sc.s, h)?;
        let emb = grid_s.embedding_into(&grid_g)?;
        let opts = SemigroupDiffOptions { seed: cfg.solver.seed, ..SemigroupDiffOptions::default() };
        let mut rows = Vec::new();
        for &beta in betas {
            let h1 = assemble_laplacian(&grid_g, beta, &b)?;
            let h2 = assemble_laplacian(&grid_s, beta, &b)?;
            let est = semigroup_diff_norm(&h1, &h2, &emb, t, &opts)?;
            let bound = semigroup_diff_bound(rho, beta, d)?;
            out.le(format!("norm beta={beta}"), est.lower_bound, bound);
            rows.push(json!({"beta": beta, "estimate": est, "bound": bound}));
            out.put("norm", &rows)?;
        }
    }
    if let Some(mc) = mc {
        let pc = path_config(mc, cfg.solver.seed, &starts[0]);
        let mut rows = Vec::new();
        for &beta in betas {
            let g = estimate_semigroup_gap(&sc.g, &sc.s, &b, rho, beta, starts, &pc)?;
            out.le(format!("gap beta={beta}"), g.max.value - 2.0 * g.max.ci_halfwidth, g.bound);
            rows.push(json!({"beta": beta, "estimate": g}));
            out.put("gap", &rows)?;
        }
    }
    Ok(())
}

fn chain(cfg: &ExperimentConfig, rho: f64, betas: &[f64], rel_slack: f64, out: &mut Outcome) -> Result<()> {
    let sc = scene(cfg)?;
    let d = sc.dim();
    let h = finest(cfg)?;
    let b = sc.s.fattened(rho)?;
    out.put("geometry", sc.summary())?;
    let opts = eig_opts(cfg);
    let tol = cfg.solver.tol;
    let lam = lambda_beta_curve(&grid(&sc, &BallUnion::empty(d), h)?, &b, betas, tol, &opts)?;
    out.put("lambda_beta", &lam)?;
    let mu = lambda_beta_curve(&grid(&sc, &sc.s, h)?, &b, betas, tol, &opts)?;
    out.put("mu_beta", &mu)?;
    let grid_b = grid(&sc, &b, h)?;
    let omega = smallest_eigs_with(&assemble_laplacian(&grid_b, 0.0, &BallUnion::empty(d))?, 1, tol, &opts)?;
    let l_omega = omega.eigenvalues[0];
    out.put("lambda_omega", l_omega)?;
    let mut t = Table::new(&["beta", "lambda_beta", "mu_beta", "lambda_omega"]);
    for (l, m) in lam.samples.iter().zip(&mu.samples) {
        let slack = |a: f64, b: f64| rel_slack * a.abs().max(b.abs());
        out.le(format!("lambda_beta<=mu_beta beta={}", l.beta), l.lambda - m.lambda, slack(l.lambda, m.lambda));
        out.le(format!("mu_beta<=lambda_omega beta={}", l.beta), m.lambda - l_omega, slack(m.lambda, l_omega));
        t.rows.push(vec![l.beta, l.lambda, m.lambda, l_omega]);
    }
    out.tables.insert("chain".into(), t);
    out.flag("lambda_beta_monotone", lam.monotone);
    out.flag("lambda_beta_concave", lam.concave);
    out.flag("converged", omega.converged && lam.samples.iter().chain(&mu.samples).all(|s| s.converged));
    Ok(())
}

/// Weighted graph Laplacian of a random connected graph on `n` vertices.
fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Result<SparseSymmetricOperator> {
    let p = (4.0 / n as f64).min(1.0);
    let mut degree = vec![0.0; n];
    let mut trip = Vec::new();
    for i in 1..n {
        for j in 0..i {
            if j + 1 == i || rng.gen::<f64>() < p {
                let w = rng.gen_range(0.1..1.0);
                trip.push((i, j, -w));
                degree[i] += w;
                degree[j] += w;
            }
        }
    }
    for (i, dg) in degree.into_iter().enumerate() {
        trip.push((i, i, dg));
    }
    Ok(SparseSymmetricOperator::from_lower_triplets(n, &trip)?)
}

fn bls_random(cfg: &ExperimentConfig, cases: usize, n_min: usize, n_max: usize, betas: &[f64], check_tol: f64, out: &mut Outcome) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.solver.seed);
    let mut t = Table::new(&["n", "mask", "i_max", "kappa_bls", "direct_min", "range_dim"]);
    let mut results = Vec::new();
    let (mut passed, mut nontrivial) = (0, 0);
    for case in 0..cases {
        let n = rng.gen_range(n_min..=n_max);
        let h = random_psd(&mut rng, n)?;
        let density = rng.gen_range(0.1..0.6);
        let mut mask: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < density).collect();
        let forced = rng.gen_range(0..n);
        mask[forced] = true;
        let i_max = rng.gen_range(0.0..0.5);
        let r = verify_bls(&h, &mask, i_max, betas, cfg.solver.tol)?;
        let direct = r.direct_min.ok_or_else(|| anyhow!("case {case}: dense check skipped"))?;
        if direct >= r.kappa_bls - check_tol {
            passed += 1;
        }
        if r.kappa_bls > 0.0 {
            nontrivial += 1;
        }
        let count = mask.iter().filter(|&&m| m).count();
        t.rows.push(vec![n as f64, count as f64, i_max, r.kappa_bls, direct, r.range_dim.unwrap_or(0) as f64]);
        results.push(json!({"n": n, "mask": count, "i_max": i_max, "check": r}));
    }
    out.put("cases", results)?;
    out.put("nontrivial", nontrivial)?;
    out.tables.insert("cases".into(), t);
    out.ge("dense_check_passes", passed as f64, cases as f64);
    Ok(())
}

fn ucp(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let TaskSpec::Ucp { r, delta, eta0, t, betas, beta_cap, max_k, spacing, coefficients, constant_margin } = &cfg.task else {
        bail!("not a ucp task");
    };
    let sc = scene(cfg)?;
    let r = match r {
        Some(v) => *v,
        None => sc.quantity("R")?,
    };
    let delta = match delta {
        Some(v) => *v,
        None => sc.quantity("delta")?,
    };
    let mut mc = MainConfig::new(r, delta, finest(cfg)?);
    mc.eta0 = *eta0;
    mc.t = *t;
    mc.truncation = sc.truncation.clone();
    mc.eig_tol = cfg.solver.tol;
    mc.seed = cfg.solver.seed;
    if let Some(b) = betas {
        mc.betas = b.clone();
    }
    if let Some(c) = beta_cap {
        mc.beta_cap = *c;
    }
    if let Some(k) = max_k {
        mc.max_k = *k;
    }
    if let Some(s) = spacing {
        mc.denseness_spacing = *s;
    }
    let field = coefficients.as_ref().map(|c| Checkerboard { dim: sc.dim(), cell: c.cell, low: c.low, high: c.high });
    let rep = verify_main(&sc.g, &sc.s, &mc, field.as_ref().map(|f| f as &dyn CoefficientField<f64>))?;
    let p = &rep.passes;
    out.flag("mu0_lower", p.mu0_lower);
    out.flag("ordering_chain", p.ordering_chain);
    out.flag("lambda_beta_monotone", p.lambda_beta_monotone);
    out.flag("lambda_beta_concave", p.lambda_beta_concave);
    out.flag("converged", p.converged);
    if let Some(k) = p.kappa_t_at_beta0 {
        out.flag("kappa_t_at_beta0", k);
    }
    let floor = rep.geometry.eta0 * rep.kappa;
    for (i, e) in rep.eigen_rows.iter().enumerate() {
        out.ge(format!("mass_ratio[{i}]"), e.mass_ratio, floor);
    }
    out.flag("eigen_mass", p.eigen_mass);
    out.ge("constant_mass_ratio", rep.constant_mass_ratio, floor);
    out.ge("constant_margin", rep.constant_margin, *constant_margin);
    let mut table = Table::new(&["lambda", "residual", "mass_ratio", "mass_ratio_working"]);
    table.rows = rep.eigen_rows.iter().map(|e| vec![e.lambda, e.residual, e.mass_ratio, e.mass_ratio_working]).collect();
    out.tables.insert("eigen_rows".into(), table);
    out.put("report", &rep)?;
    Ok(())
}

/// Runs only the Monte Carlo part of a semigroup experiment.
pub fn run_gap_only(cfg: &ExperimentConfig) -> ExperimentReport {
    let mut out = Outcome::default();
    let result = match &cfg.task {
        TaskSpec::Semigroup { rho, betas, t, mc: Some(mc), starts } => semigroup(cfg, *rho, betas, *t, Some(mc), starts, false, &mut out),
        _ => Err(anyhow!("`mc gap` needs a semigroup task with an [task.mc] table")),
    };
    let error = result.err().map(|e| format!("{e:#}"));
    ExperimentReport {
        name: cfg.name.clone(),
        task: "semigroup_gap".into(),
        passed: error.is_none() && out.checks.iter().all(|c| c.passed),
        error,
        checks: out.checks,
        data: out.data,
        tables: out.tables,
    }
}

