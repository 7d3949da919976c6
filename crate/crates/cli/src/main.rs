use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use ucp_lab::bounds::{evaluate, BOUND_NAMES};
use ucp_lab::discretize::{
    assemble_divergence_form, assemble_laplacian, read_matrix_market, write_mask, write_matrix_market, Checkerboard, NodeClass,
};
use ucp_lab::geometry::check_relative_denseness;
use ucp_lab::spectral::{
    apply_heat, smallest_eigs_with, spectral_projector_apply, write_spectral_result, EigOptions, HeatActionParams, ProjectorParams,
    ProjectorRoute,
};
use ucp_lab::{BallUnion, SparseSymmetricOperator};
use ucp_lab_cli::campaign::{report_json, write_table};
use ucp_lab_cli::config::{Coefficients, GeometrySpec, GridSpec};
use ucp_lab_cli::scene::{build, Scene};
use ucp_lab_cli::tasks::run_gap_only;
use ucp_lab_cli::{run_campaign, run_experiment, CampaignConfig, ExperimentConfig, ExperimentReport};

#[derive(Parser)]
#[command(name = "ucp-lab", version, about = "Spectral lower bounds and uncertainty principles on perforated domains")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "UCP_LAB_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a closed-form bound, or a CSV batch of parameter rows.
    Bounds {
        /// Bound name; `list` prints the available names.
        name: String,
        /// Parameters as `key=value`.
        #[arg(short, long = "param", value_parser = parse_kv)]
        params: Vec<(String, f64)>,
        /// CSV with one parameter set per row.
        #[arg(long)]
        batch: Option<PathBuf>,
    },
    /// Summarize a geometry, optionally certifying relative denseness.
    Geom,
    /// Classify a grid and assemble the operator; writes the node mask.
    Assemble,
    /// Write the assembled operator in Matrix Market format.
    Export,
    /// Smallest eigenpairs of an operator.
    Eig {
        #[command(flatten)]
        source: MatrixSource,
        #[arg(short, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Heat semigroup action `exp(-tH) f`.
    Heat {
        #[command(flatten)]
        source: MatrixSource,
        #[arg(short, long)]
        t: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Input vector, one value per line; defaults to all ones.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Spectral projector `1_(-inf, E](H) f`.
    Projector {
        #[command(flatten)]
        source: MatrixSource,
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        gap: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = Route::Eigenpairs)]
        via: Route,
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Brownian-motion estimators.
    Mc {
        #[command(subcommand)]
        which: McCmd,
    },
    /// Full uncertainty-principle check; exit code 0 iff every flag passes.
    Verify,
    /// Run a campaign of experiments into the `--out` directory.
    Campaign,
}

#[derive(Subcommand, Clone, Copy)]
enum McCmd {
    Hitrun,
    Fk,
    Gap,
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Eigenpairs,
    Filter,
}

#[derive(Args)]
struct MatrixSource {
    /// Matrix Market file; otherwise the operator described by `--config`.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

/// Configuration for the geometry-level commands.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorFile {
    geometry: GeometrySpec,
    grid: Option<GridSpec>,
    #[serde(default)]
    operator: OperatorSpec,
    denseness: Option<DensenessSpec>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OperatorSpec {
    /// Potential `beta * 1_B` with `B = B_rho(S)`.
    #[serde(default)]
    beta: f64,
    #[serde(default)]
    rho: f64,
    /// Remove obstacle nodes (Dirichlet on `S`); otherwise pure Neumann.
    #[serde(default = "yes")]
    dirichlet: bool,
    coefficients: Option<Coefficients>,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DensenessSpec {
    r: f64,
    delta: f64,
    spacing: f64,
}

fn parse_kv(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("`{k}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn config_path(g: &Global) -> Result<&Path> {
    g.config.as_deref().ok_or_else(|| anyhow!("this command needs --config"))
}

fn load_operator_file(path: &Path) -> Result<OperatorFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).map_err(|e| anyhow!("config error in {}: {e}", path.display()))
}

fn emit(g: &Global, text: &str) -> Result<()> {
    match &g.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().lock().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn checks_csv(r: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["experiment", "check", "passed", "value", "relation", "limit"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in &r.checks {
        w.write_record([&r.name, &c.name, &c.passed.to_string(), &opt(c.value), &c.relation, &opt(c.limit)])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn emit_report(g: &Global, r: &ExperimentReport) -> Result<()> {
    match g.format {
        Format::Json => emit(g, &report_json(r)?),
        Format::Csv => emit(g, &checks_csv(r)?),
    }
}

fn load_experiment(g: &Global, kinds: &[&str]) -> Result<ExperimentConfig> {
    let mut e = ExperimentConfig::load(config_path(g)?)?;
    if !kinds.contains(&e.task.kind()) {
        bail!("expected a task of kind {}, got `{}`", kinds.join(" or "), e.task.kind());
    }
    if let Some(s) = g.seed {
        e.solver.seed = s;
    }
    Ok(e)
}

fn assemble_from(file: &OperatorFile) -> Result<(Scene, ucp_lab::GridDiscretization, SparseSymmetricOperator)> {
    let sc = build(&file.geometry)?;
    let grid = file.grid.as_ref().ok_or_else(|| anyhow!("missing [grid] table"))?;
    let h = *grid.h.last().ok_or_else(|| anyhow!("grid.h is empty"))?;
    let removed = if file.operator.dirichlet { sc.s.clone() } else { BallUnion::empty(sc.dim()) };
    let gd = ucp_lab::discretize::classify_grid(&sc.g, &removed, h, sc.truncation.as_ref())?;
    let op = &file.operator;
    let b = if op.beta == 0.0 {
        BallUnion::empty(sc.dim())
    } else if op.rho > 0.0 {
        sc.s.fattened(op.rho)?
    } else {
        sc.s.clone()
    };
    let a = match &op.coefficients {
        None => assemble_laplacian(&gd, op.beta, &b)?,
        Some(c) => {
            let field = Checkerboard { dim: sc.dim(), cell: c.cell, low: c.low, high: c.high };
            assemble_divergence_form(&gd, &field, c.low.min(c.high), op.beta, &b)?
        }
    };
    Ok((sc, gd, a))
}

fn load_matrix(g: &Global, src: &MatrixSource) -> Result<SparseSymmetricOperator> {
    match &src.matrix {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Ok(read_matrix_market(BufReader::new(f))?)
        }
        None => Ok(assemble_from(&load_operator_file(config_path(g)?)?)?.2),
    }
}

fn read_vector(path: Option<&Path>, n: usize) -> Result<Vec<f64>> {
    let Some(p) = path else { return Ok(vec![1.0; n]) };
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    let v = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| l.parse::<f64>().map_err(|e| anyhow!("line {}: {e}", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != n {
        bail!("input vector has {} entries, operator has {n} dofs", v.len());
    }
    Ok(v)
}

fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for x in v {
        writeln!(w, "{x}")?;
    }
    Ok(w.flush()?)
}

fn print_line<T: Serialize>(v: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string(v)?)?;
    Ok(())
}

fn bounds_cmd(g: &Global, name: &str, params: &[(String, f64)], batch: Option<&Path>) -> Result<bool> {
    if name == "list" {
        for n in BOUND_NAMES {
            println!("{n}");
        }
        return Ok(true);
    }
    let Some(path) = batch else {
        let p: BTreeMap<String, f64> = params.iter().cloned().collect();
        let r = evaluate(name, &p)?;
        match g.format {
            Format::Json => emit(g, &format!("{}\n", serde_json::to_string(&r)?))?,
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let keys: Vec<&String> = r.inputs.keys().collect();
                w.write_record(keys.iter().map(|k| k.as_str()).chain(["value"]))?;
                w.write_record(r.inputs.values().map(|v| v.to_string()).chain([r.value.to_string()]))?;
                emit(g, &String::from_utf8(w.into_inner()?)?)?;
            }
        }
        return Ok(true);
    };
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rd.headers()?.clone();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(headers.iter().chain(["value", "units"]))?;
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let mut p = BTreeMap::new();
        for (k, v) in headers.iter().zip(rec.iter()) {
            let x = v.parse::<f64>().map_err(|e| anyhow!("row {}, column `{k}`: {e}", i + 1))?;
            p.insert(k.to_string(), x);
        }
        let r = evaluate(name, &p).with_context(|| format!("row {}", i + 1))?;
        w.write_record(rec.iter().map(str::to_string).chain([r.value.to_string(), r.units]))?;
    }
    emit(g, &String::from_utf8(w.into_inner()?)?)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Bounds { name, params, batch } => bounds_cmd(g, name, params, batch.as_deref()),
        Cmd::Geom => {
            let file = load_operator_file(config_path(g)?)?;
            let sc = build(&file.geometry)?;
            let mut v = serde_json::to_value(sc.summary())?;
            let mut ok = true;
            if let Some(d) = &file.denseness {
                let c = check_relative_denseness(&sc.s, &sc.g, d.r, d.delta, d.spacing)?;
                ok = c.verified;
                v["denseness"] = json!({
                    "r": c.r, "delta": c.delta, "verified": c.verified, "samples": c.samples,
                    "margin": c.margin, "worst_point": c.worst_point, "witness": c.witness,
                });
            }
            if let Some(p) = &g.out {
                sc.s.write_csv(File::create(p)?)?;
            }
            print_line(&v)?;
            Ok(ok)
        }
        Cmd::Assemble => {
            let (_, grid, op) = assemble_from(&load_operator_file(config_path(g)?)?)?;
            if let Some(p) = &g.out {
                write_mask(&grid, BufWriter::new(File::create(p)?))?;
            }
            print_line(&json!({
                "h": grid.h, "shape": grid.shape, "nodes": grid.n_nodes(), "dofs": grid.n_dofs(),
                "interior": grid.count(NodeClass::Interior), "neumann": grid.count(NodeClass::NeumannBoundary),
                "dirichlet": grid.count(NodeClass::DirichletRemoved), "nnz": op.nnz(), "gershgorin": op.gershgorin_bound(),
            }))?;
            Ok(true)
        }
        Cmd::Export => {
            let out = g.out.as_deref().ok_or_else(|| anyhow!("export needs --out"))?;
            let (_, _, op) = assemble_from(&load_operator_file(config_path(g)?)?)?;
            write_matrix_market(&op, BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?))?;
            print_line(&json!({"dofs": op.n(), "nnz": op.nnz(), "out": out}))?;
            Ok(true)
        }
        Cmd::Eig { source, k, tol } => {
            let op = load_matrix(g, source)?;
            let opts = EigOptions { seed: g.seed.unwrap_or(EigOptions::default().seed), ..EigOptions::default() };
            let r = smallest_eigs_with(&op, *k, *tol, &opts)?;
            if let Some(p) = &g.out {
                write_spectral_result(p, &r)?;
            }
            print_line(&r)?;
            Ok(r.converged)
        }
        Cmd::Heat { source, t, tol, input } => {
            let op = load_matrix(g, source)?;
            let f = read_vector(input.as_deref(), op.n())?;
            let mut params = HeatActionParams::new(*t, *tol);
            params.check = true;
            let r = apply_heat(&op, &params, &f)?;
            if let Some(p) = &g.out {
                write_vector(p, &r.v)?;
            }
            print_line(&r)?;
            Ok(true)
        }
        Cmd::Projector { source, energy, gap, tol, via, input } => {
            let op = load_matrix(g, source)?;
            let f = read_vector(input.as_deref(), op.n())?;
            let route = match via {
                Route::Eigenpairs => ProjectorRoute::Eigenpairs,
                Route::Filter => ProjectorRoute::PolynomialFilter,
            };
            let mut params = ProjectorParams::new(*energy, *gap, *tol, route);
            if let Some(s) = g.seed {
                params.seed = s;
            }
            let r = spectral_projector_apply(&op, &params, &f)?;
            if let Some(p) = &g.out {
                write_vector(p, &r.v)?;
            }
            print_line(&r)?;
            Ok(true)
        }
        Cmd::Mc { which } => {
            let r = match which {
                McCmd::Hitrun => run_experiment(&load_experiment(g, &["hit_and_run"])?),
                McCmd::Fk => run_experiment(&load_experiment(g, &["feynman_kac"])?),
                McCmd::Gap => run_gap_only(&load_experiment(g, &["semigroup"])?),
            };
            emit_report(g, &r)?;
            if let Some(e) = &r.error {
                bail!("{e}");
            }
            Ok(r.passed)
        }
        Cmd::Verify => {
            let r = run_experiment(&load_experiment(g, &["ucp"])?);
            emit_report(g, &r)?;
            if let (Some(p), Some(t)) = (&g.out, r.tables.get("eigen_rows")) {
                write_table(&p.with_extension("csv"), t)?;
            }
            if let Some(e) = &r.error {
                bail!("{e}");
            }
            Ok(r.passed)
        }
        Cmd::Campaign => {
            let mut cfg = CampaignConfig::load(config_path(g)?)?;
            if g.seed.is_some() {
                cfg.seed = g.seed;
            }
            let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("reports"));
            let outcome = run_campaign(&cfg, &dir, |r, secs| {
                let status = if r.passed { "PASS" } else { "FAIL" };
                eprintln!("[{status}] {} ({}, {secs:.1} s)", r.name, r.task);
            })?;
            Ok(outcome.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
