//! Sequential campaign runner: one JSON report per experiment, CSV tables,
//! a summary CSV and a timing sidecar kept apart from the reports.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::CampaignConfig;
use crate::tasks::{run_experiment, ExperimentReport, Table};

#[derive(Debug)]
pub struct CampaignOutcome {
    pub reports: Vec<ExperimentReport>,
    pub passed: bool,
}

impl CampaignOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct Timing<'a> {
    name: &'a str,
    seconds: f64,
}

pub fn write_table(path: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&t.headers)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_json(r: &ExperimentReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(r)?;
    s.push('\n');
    Ok(s)
}

/// Writes the report and its tables as `<dir>/<name>.json` and
/// `<dir>/<name>.<table>.csv`.
pub fn write_report(dir: &Path, r: &ExperimentReport) -> Result<()> {
    fs::write(dir.join(format!("{}.json", r.name)), report_json(r)?)?;
    for (key, t) in &r.tables {
        write_table(&dir.join(format!("{}.{key}.csv", r.name)), t)?;
    }
    Ok(())
}

/// Runs every experiment in order. `progress` receives one line per
/// finished experiment.
pub fn run_campaign(cfg: &CampaignConfig, out_dir: &Path, mut progress: impl FnMut(&ExperimentReport, f64)) -> Result<CampaignOutcome> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut summary = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    summary.write_record(["experiment", "task", "check", "passed", "value", "relation", "limit"])?;
    let mut reports = Vec::with_capacity(cfg.experiments.len());
    let mut timings = Vec::new();
    for exp in &cfg.experiments {
        let mut exp = exp.clone();
        if let Some(seed) = cfg.seed {
            exp.solver.seed = seed;
        }
        let start = Instant::now();
        let r = run_experiment(&exp);
        let secs = start.elapsed().as_secs_f64();
        write_report(out_dir, &r)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &r.checks {
            summary.write_record([&r.name, &r.task, &c.name, &c.passed.to_string(), &opt(c.value), &c.relation, &opt(c.limit)])?;
        }
        if let Some(e) = &r.error {
            summary.write_record([&r.name, &r.task, "error", "false", "", "", e])?;
        }
        summary.flush()?;
        progress(&r, secs);
        timings.push((exp.name.clone(), secs));
        reports.push(r);
    }
    summary.flush()?;
    let t: Vec<Timing> = timings.iter().map(|(n, s)| Timing { name: n, seconds: *s }).collect();
    let mut f = fs::File::create(out_dir.join("timings.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&t)?)?;
    let passed = reports.iter().all(|r| r.passed);
    Ok(CampaignOutcome { reports, passed })
}
