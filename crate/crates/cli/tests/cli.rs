use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use ucp_lab::discretize::{assemble_laplacian, classify_grid, read_matrix_market};
use ucp_lab::{BallUnion, ConvexDomain};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ucp-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn ucp-lab")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn empty_campaign_writes_header_only_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\n");
    let out = dir.path().join("out");
    let o = run(&["campaign", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.trim_end(), "experiment,task,check,passed,value,relation,limit");
}

#[test]
fn bounds_experiment_lands_in_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"
[[experiment]]
name = "annulus"
[experiment.task]
kind = "bounds"
name = "annulus_bounds"
params = { rho = 0.1, R = 1.0 }
min = 0.29
"#,
    );
    let out = dir.path().join("out");
    let o = run(&["campaign", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rd = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert!(!rows.is_empty());
    let v: f64 = rows[0][4].parse().unwrap();
    assert!((v - 0.3).abs() < 1e-12, "{v}");
    assert!(out.join("annulus.json").exists());
    assert!(out.join("timings.json").exists());
}

#[test]
fn bounds_command_prints_json_line() {
    let o = run(&["bounds", "annulus_bounds", "-p", "rho=0.1", "-p", "R=1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.3).abs() < 1e-12);
}

#[test]
fn bounds_list_names_every_bound() {
    let o = run(&["bounds", "list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l == "annulus_bounds"));
    assert!(text.lines().any(|l| l == "capacity_upper"));
}

#[test]
fn unknown_bound_is_an_error() {
    let o = run(&["bounds", "no_such_bound"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn export_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let h = 1.0 / 19.0;
    let cfg = write(
        dir.path(),
        "op.toml",
        &format!(
            r#"
[geometry]
kind = "custom"
r = 1.0
delta = 0.1
domain = {{ shape = "box", lo = [0.0, 0.0, 0.0], hi = [1.0, 1.0, 1.0] }}
balls = {{ source = "inline", centers = [], radii = [] }}
[grid]
h = [{h:?}]
"#
        ),
    );
    let mtx = dir.path().join("a.mtx");
    let o = run(&["export", "--config", &cfg, "--out", mtx.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let read: ucp_lab::SparseSymmetricOperator = read_matrix_market(BufReader::new(fs::File::open(&mtx).unwrap())).unwrap();
    assert_eq!(read.n(), 20 * 20 * 20);

    let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let grid = classify_grid(&g, &BallUnion::empty(3), h, None).unwrap();
    let direct = assemble_laplacian(&grid, 0.0, &BallUnion::empty(3)).unwrap();
    let a = read.lower_triplets();
    let b = direct.lower_triplets();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!((x.0, x.1), (y.0, y.1));
        assert_eq!(x.2.to_bits(), y.2.to_bits());
    }
}

#[test]
fn unknown_key_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "seed = 1\n\n[[experiment]]\nname = \"x\"\nbogus = 3\n");
    let o = run(&["campaign", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn missing_config_file_is_an_error() {
    let o = run(&["campaign", "--config", "/nonexistent/campaign.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_small_pool() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.toml",
        r#"
name = "pool"
[geometry]
kind = "ball_pool"
n = 3
ell = 1.0
rho = 0.1
[grid]
h = [0.25]
[solver]
tol = 1e-9
[task]
kind = "ucp"
betas = [1.0, 10.0, 100.0]
spacing = 0.05
"#,
    );
    let out = dir.path().join("pool.json");
    let o = run(&["verify", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["data"]["report"]["kappa"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("pool.csv").exists());
}
