//! Name-based dispatch over the scalar bounds, used by the command line and
//! campaign runner.

use std::collections::BTreeMap;

use serde::Serialize;

use super::*;

/// A named bound value together with its inputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    /// `1/length^2` for eigenvalue bounds, `dimensionless` otherwise.
    pub units: String,
    /// Secondary outputs (the upper annulus bound, `E_t`, constant choices, ...).
    pub extras: BTreeMap<String, f64>,
}

pub const BOUND_NAMES: &[&str] = &[
    "annulus_bounds",
    "ballpool_lower",
    "general_lower",
    "davies_comparison",
    "hit_and_run_bound",
    "semigroup_diff_bound",
    "semigroup_gap_bound",
    "ball_dirichlet_eigenvalue",
    "capacity_upper",
    "kappa_first_step",
    "optimal_beta",
    "kappa_final",
    "dimensional_constants",
];

const EIGEN: &str = "1/length^2";
const PLAIN: &str = "dimensionless";

struct Args<'a>(&'a BTreeMap<String, f64>);

impl Args<'_> {
    fn get(&self, key: &str) -> Result<f64> {
        self.0.get(key).copied().ok_or_else(|| invalid(format!("missing parameter `{key}`")))
    }

    fn opt(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    fn dim(&self) -> Result<usize> {
        let d = self.opt("d").unwrap_or(3.0);
        if d.fract() != 0.0 || d < 0.0 {
            return Err(invalid(format!("dimension must be an integer, got {d}")));
        }
        Ok(d as usize)
    }
}

fn expect_keys(name: &str, params: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    for k in params.keys() {
        if k != "d" && !allowed.contains(&k.as_str()) {
            return Err(invalid(format!("unknown parameter `{k}` for {name}")));
        }
    }
    Ok(())
}

/// Evaluates the bound `name` at `params`. The dimension key `d` defaults to 3.
pub fn evaluate(name: &str, params: &BTreeMap<String, f64>) -> Result<BoundReport> {
    let a = Args(params);
    let mut extras = BTreeMap::new();
    let (value, units, keys): (f64, &str, &[&str]) = match name {
        "annulus_bounds" => {
            let b = annulus_bounds(a.get("rho")?, a.get("R")?, a.dim()?, a.opt("vol_G"))?;
            if let Some(u) = b.upper {
                extras.insert("upper".into(), u);
            }
            (b.lower, EIGEN, &["rho", "R", "vol_G"])
        }
        "ballpool_lower" => (ballpool_lower(a.get("rho")?, a.get("ell")?, a.dim()?)?, EIGEN, &["rho", "ell"]),
        "general_lower" => (general_lower(a.get("rho")?, a.get("R")?, a.dim()?)?, EIGEN, &["rho", "R"]),
        "davies_comparison" => (davies_comparison(a.get("rho")?, a.get("R")?, a.dim()?)?, EIGEN, &["rho", "R"]),
        "hit_and_run_bound" => (hit_and_run_bound(a.get("rho")?, a.get("alpha")?, a.dim()?)?, PLAIN, &["rho", "alpha"]),
        "semigroup_diff_bound" => (semigroup_diff_bound(a.get("rho")?, a.get("beta")?, a.dim()?)?, PLAIN, &["rho", "beta"]),
        "semigroup_gap_bound" => {
            extras.insert("alpha_star".into(), semigroup_gap_alpha(a.get("rho")?, a.get("beta")?)?);
            (semigroup_gap_bound(a.get("rho")?, a.get("beta")?, a.dim()?)?, PLAIN, &["rho", "beta"])
        }
        "ball_dirichlet_eigenvalue" => (ball_dirichlet_eigenvalue(a.get("R")?, a.dim()?)?, EIGEN, &["R"]),
        "capacity_upper" => (capacity_upper(a.get("r")?, a.dim()?)?, PLAIN, &["r"]),
        "kappa_first_step" => {
            let s = kappa_first_step(a.get("delta")?, a.get("R")?, a.get("lambda_Omega")?, a.opt("t").unwrap_or(0.5), a.dim()?)?;
            extras.insert("E_t".into(), s.e_t);
            extras.insert("mu0_lower".into(), s.mu0_lower);
            extras.insert("bracket".into(), s.bracket);
            (s.kappa_t, PLAIN, &["delta", "R", "lambda_Omega", "t"])
        }
        "optimal_beta" => (
            optimal_beta(a.get("rho")?, a.get("mu0")?, a.get("lambda_Omega")?, a.opt("t").unwrap_or(0.5), a.dim()?)?,
            EIGEN,
            &["rho", "mu0", "lambda_Omega", "t"],
        ),
        "kappa_final" => {
            let k = kappa_final(
                a.get("delta")?,
                a.get("R")?,
                a.opt("R_G").unwrap_or(f64::INFINITY),
                a.opt("eta0").unwrap_or(1.0),
                a.dim()?,
            )?;
            extras.insert("I_max".into(), k.i_max);
            extras.insert("C".into(), k.c_interval);
            extras.insert("b".into(), k.b);
            extras.insert("a".into(), k.a);
            extras.insert("c".into(), k.c);
            extras.insert("R_eff".into(), k.r_eff);
            extras.insert("bracket".into(), k.bracket);
            (k.kappa, PLAIN, &["delta", "R", "R_G", "eta0"])
        }
        "dimensional_constants" => {
            let k = DimensionalConstants::new(a.dim()?)?;
            extras.insert("omega_d".into(), k.omega_d);
            extras.insert("bessel_zero".into(), k.bessel_zero);
            extras.insert("A".into(), k.a_big);
            extras.insert("c_prime".into(), k.c_prime);
            extras.insert("a_prime".into(), k.a_prime);
            extras.insert("a_exp".into(), k.a_exp);
            (k.c_mu0, PLAIN, &[])
        }
        other => return Err(invalid(format!("unknown bound `{other}`; known: {}", BOUND_NAMES.join(", ")))),
    };
    expect_keys(name, params, keys)?;
    Ok(BoundReport {
        name: name.to_string(),
        inputs: params.clone(),
        value,
        units: units.to_string(),
        extras,
    })
}
