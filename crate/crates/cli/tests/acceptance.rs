//! Acceptance suite: runs `campaigns/acceptance.toml` once and checks every
//! criterion against tolerances pinned here. Each criterion prints one line.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde_json::Value;
use ucp_lab_cli::{run_campaign, CampaignConfig, CampaignOutcome, ExperimentReport};

struct Run {
    _dir: tempfile::TempDir,
    path: PathBuf,
    outcome: CampaignOutcome,
}

fn campaign_file() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../campaigns/acceptance.toml")
}

fn execute() -> Run {
    let cfg = CampaignConfig::load(&campaign_file()).expect("acceptance campaign parses");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_path_buf();
    let outcome = run_campaign(&cfg, &path, |r, secs| {
        let line = format!("    ran {} in {secs:.1} s ({})\n", r.name, if r.passed { "checks pass" } else { "checks fail" });
        std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    })
    .expect("campaign runs");
    Run { _dir: dir, path, outcome }
}

fn run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(execute)
}

fn report(name: &str) -> &'static ExperimentReport {
    let r = run().outcome.reports.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("no experiment `{name}`"));
    assert!(r.error.is_none(), "{name} errored: {:?}", r.error);
    r
}

fn num(v: &Value, path: &[&str]) -> f64 {
    let mut cur = v;
    for p in path {
        cur = &cur[*p];
    }
    cur.as_f64().unwrap_or_else(|| panic!("{path:?} is not a number: {cur}"))
}

fn data(r: &ExperimentReport, key: &str) -> &'static Value {
    // Reports live in the static run.
    let r: &'static ExperimentReport = report(&r.name);
    r.data.get(key).unwrap_or_else(|| panic!("{} has no `{key}`", r.name))
}

fn line(id: &str, title: &str, ok: bool, detail: &str) {
    let s = format!("{} {id} {title}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    std::io::stdout().lock().write_all(s.as_bytes()).unwrap();
}

const OMEGA3: f64 = 4.0 * std::f64::consts::PI / 3.0;

#[test]
fn c01_annulus_two_sided() {
    let mut ok = true;
    let mut parts = Vec::new();
    for (rho, lower) in [(0.05, 0.15), (0.1, 0.3), (0.2, 0.6)] {
        let r = report(&format!("c1_annulus_rho{rho}"));
        let lam = data(r, "extrapolated").as_f64().unwrap();
        let upper = 8.0 * OMEGA3 * rho / (OMEGA3 - OMEGA3 * (2.0 * rho as f64).powi(3));
        assert!((data(r, "lower_bound").as_f64().unwrap() - lower).abs() < 1e-12);
        assert!((data(r, "upper_bound").as_f64().unwrap() - upper).abs() < 1e-12 * upper);
        let lo_ok = lam >= 0.95 * lower;
        let hi_ok = lam <= 1.05 * upper;
        ok &= lo_ok && hi_ok;
        parts.push(format!(
            "rho={rho}: {:.4} <= lambda={lam:.4} [{}] <= {:.4} [{}] (2*lambda={:.4})",
            0.95 * lower,
            if lo_ok { "ok" } else { "violated" },
            1.05 * upper,
            if hi_ok { "ok" } else { "violated" },
            2.0 * lam
        ));
    }
    line("C1", "annulus two-sided bound", ok, &parts.join("; "));
    assert!(ok, "{}", parts.join("\n"));
}

#[test]
fn c02_ball_pool() {
    let r = report("c2_ball_pool");
    let lam = data(r, "extrapolated").as_f64().unwrap();
    let bound = 0.1 / 3f64.sqrt();
    assert!((bound - 0.057735).abs() < 1e-6);
    let ok = lam >= bound;
    line("C2", "ball pool", ok, &format!("lambda={lam:.5} >= {bound:.6}, margin {:.2}x", lam / bound));
    assert!(ok);
}

#[test]
fn c03_general_bound() {
    let r = report("c3_scattered");
    let big_r = num(data(r, "geometry"), &["quantities", "R"]);
    let lam = data(r, "extrapolated").as_f64().unwrap();
    let bound = 3.0 / 27.0 * 0.1 / big_r.powi(3);
    let ok = lam >= bound;
    line("C3", "general bound", ok, &format!("certified R={big_r:.4}, lambda={lam:.5} >= {bound:.6}, margin {:.1}x", lam / bound));
    assert!(ok);
}

#[test]
fn c04_hit_and_run() {
    let r = report("c4_hit_and_run");
    let est = data(r, "estimates").as_array().unwrap();
    assert_eq!(est.len(), 3);
    let mut ok = true;
    let mut parts = Vec::new();
    for (e, alpha) in est.iter().zip([0.005, 0.01, 0.02]) {
        assert_eq!(num(e, &["alpha"]), alpha);
        assert_eq!(num(e, &["estimate", "n"]), 1e6);
        let bound = 2f64.powf(3.5) * (-1.0 / (16.0 * alpha)).exp();
        let v = num(e, &["estimate", "value"]) - 2.0 * num(e, &["estimate", "ci_halfwidth"]);
        ok &= v <= bound;
        parts.push(format!("alpha={alpha}: {v:.3e} <= {bound:.3e}"));
    }
    line("C4", "hit and run", ok, &parts.join("; "));
    assert!(ok);
}

#[test]
fn c05_semigroup_gap() {
    let r = report("c5_semigroup");
    let (rho, d_pre) = (0.25f64, (1.0 + 4.0 * 2f64.powf(1.5)).sqrt());
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, g) in data(r, "norm").as_array().unwrap().iter().zip(data(r, "gap").as_array().unwrap()) {
        let beta = num(n, &["beta"]);
        let bound = d_pre * (-rho * beta.sqrt() / (4.0 * 2f64.sqrt())).exp();
        let lower = num(n, &["estimate", "lower_bound"]);
        let alpha = rho / (4.0 * 2f64.sqrt() * beta.sqrt());
        let gap_bound = (-2.0 * beta * alpha).exp() + 2f64.powf(3.5) * (-rho * rho / (16.0 * alpha)).exp();
        let gap = num(g, &["estimate", "max", "value"]) - 2.0 * num(g, &["estimate", "max", "ci_halfwidth"]);
        ok &= lower <= bound && gap <= gap_bound;
        parts.push(format!("beta={beta}: norm {lower:.3e} <= {bound:.3e}, gap {gap:.3e} <= {gap_bound:.3e}"));
    }
    assert_eq!(parts.len(), 2);
    line("C5", "semigroup gap", ok, &parts.join("; "));
    assert!(ok);
}

#[test]
fn c06_bls_oracle() {
    let r = report("c6_bls_random");
    let cases = data(r, "cases").as_array().unwrap();
    assert_eq!(cases.len(), 50);
    let passed = cases
        .iter()
        .filter(|c| {
            assert!(num(c, &["n"]) <= 200.0);
            num(c, &["check", "direct_min"]) >= num(c, &["check", "kappa_bls"]) - 1e-9
        })
        .count();
    let nontrivial = data(r, "nontrivial").as_u64().unwrap();
    let ok = passed == 50;
    line("C6", "BLS oracle equivalence", ok, &format!("{passed}/50 dense checks pass ({nontrivial} with kappa_bls > 0)"));
    assert!(ok);
}

#[test]
fn c07_headline_inequality() {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["c7_ucp_ball_pool", "c7_ucp_ball_pool_checkerboard", "c7_ucp_scattered", "c7_ucp_scattered_checkerboard"] {
        let r = report(name);
        let rep = data(r, "report");
        let floor = num(rep, &["geometry", "eta0"]) * num(rep, &["kappa"]);
        let rows = rep["eigen_rows"].as_array().unwrap();
        let i_max = num(rep, &["i_max"]);
        let in_range = rows.iter().all(|e| num(e, &["lambda"]) <= i_max + num(e, &["residual"]));
        let mass = rows.iter().all(|e| num(e, &["mass_ratio"]) >= floor);
        let constant = num(rep, &["constant_mass_ratio"]);
        let c_ok = constant >= 10.0 * floor;
        ok &= in_range && mass && c_ok && !rows.is_empty();
        parts.push(format!("{name}: {} eigvecs in I, mass ok={mass}, constant {constant:.3e} vs kappa {floor:.3e}", rows.len()));
    }
    line("C7", "headline inequality", ok, &parts.join("; "));
    assert!(ok);
}

#[test]
fn c08_ordering_chain() {
    let r = report("c8_ordering_chain");
    let lam = &data(r, "lambda_beta")["samples"];
    let mu = &data(r, "mu_beta")["samples"];
    let omega = data(r, "lambda_omega").as_f64().unwrap();
    let mut ok = true;
    let lams: Vec<f64> = lam.as_array().unwrap().iter().map(|s| num(s, &["lambda"])).collect();
    let betas: Vec<f64> = lam.as_array().unwrap().iter().map(|s| num(s, &["beta"])).collect();
    for (l, m) in lams.iter().zip(mu.as_array().unwrap().iter().map(|s| num(s, &["lambda"]))) {
        ok &= *l <= m + 1e-8 * l.abs().max(m.abs());
        ok &= m <= omega + 1e-8 * m.abs().max(omega.abs());
    }
    let monotone = lams.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[1].abs());
    let concave = (0..lams.len().saturating_sub(2)).all(|i| {
        let s1 = (lams[i + 1] - lams[i]) / (betas[i + 1] - betas[i]);
        let s2 = (lams[i + 2] - lams[i + 1]) / (betas[i + 2] - betas[i + 1]);
        s2 <= s1 + 1e-8
    });
    ok &= monotone && concave;
    line("C8", "ordering chain", ok, &format!("{} couplings, lambda_Omega={omega:.5}, monotone={monotone}, concave={concave}", lams.len()));
    assert!(ok);
}

#[test]
fn c09_determinism() {
    let first = run();
    let again = execute();
    let mut differing = Vec::new();
    for r in &first.outcome.reports {
        let f = format!("{}.json", r.name);
        let a = std::fs::read(first.path.join(&f)).unwrap();
        let b = std::fs::read(again.path.join(&f)).unwrap();
        if a != b {
            differing.push(f);
        }
    }
    let ok = differing.is_empty();
    let n = first.outcome.reports.len();
    line("C9", "determinism", ok, &format!("{} of {n} JSON reports byte-identical {differing:?}", n - differing.len()));
    assert!(ok);
}

#[test]
fn c10_capacity_scaling() {
    let r = report("c10_capacity_scaling");
    let ratio = data(r, "compared_value").as_f64().unwrap();
    let lead = OMEGA3 * 7.0;
    let rel = (ratio / lead - 1.0).abs();
    let ok = rel <= 0.01;
    line("C10", "capacity scaling", ok, &format!("capacity_upper(1e-3)/1e-3 = {ratio:.5} vs {lead:.5}, rel err {rel:.2e}"));
    assert!(ok);
}
