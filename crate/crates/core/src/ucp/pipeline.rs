//! End-to-end check of the low-energy uncertainty principle on one
//! discretized geometry.

use serde::Serialize;

use super::bls::projected_min;
use super::curve::{ground_with_potential, shape_flags, LambdaBetaSample};
use crate::bounds::{ball_dirichlet_eigenvalue, kappa_final, kappa_first_step, optimal_beta, DimensionalConstants, FinalKappa, FirstStep};
use crate::discretize::{assemble_divergence_form, assemble_laplacian, classify_grid, CoefficientField, GridDiscretization, SparseSymmetricOperator};
use crate::error::{invalid, Error, Result};
use crate::geometry::{build_skeleton, check_relative_denseness, AxisBox, BallUnion, ConvexDomain, DomainKind, Skeleton};
use crate::scalar::{dist, Real};
use crate::spectral::{smallest_eigs_with, EigOptions, SpectralResult};

#[derive(Clone, Debug, PartialEq)]
pub struct MainConfig<T> {
    pub r: T,
    pub delta: T,
    pub eta0: T,
    /// Energy fraction of the first step, in `(0, 1)`.
    pub t: T,
    pub h: T,
    /// Required for whole-space domains.
    pub truncation: Option<AxisBox<T>>,
    pub denseness_spacing: T,
    /// Couplings for the `lambda_beta` curve; `beta_0` is added when it does
    /// not exceed `beta_cap`.
    pub betas: Vec<T>,
    pub beta_cap: T,
    pub eig_tol: T,
    pub max_k: usize,
    pub seed: u64,
    /// Also run the dense `P_I W P_I` check when the dof count allows it.
    pub dense_check: bool,
}

impl<T: Real> MainConfig<T> {
    pub fn new(r: T, delta: T, h: T) -> Self {
        Self {
            r,
            delta,
            eta0: T::one(),
            t: T::lit(0.5),
            h,
            truncation: None,
            denseness_spacing: delta / T::lit(2.0),
            betas: [1.0, 10.0, 100.0, 1000.0].iter().map(|&b| T::lit(b)).collect(),
            beta_cap: T::lit(1e4),
            eig_tol: T::lit(1e-9),
            max_k: 64,
            seed: 0x5eed,
            dense_check: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometrySummary {
    pub d: usize,
    pub r: f64,
    pub delta: f64,
    pub r_g: f64,
    pub eta0: f64,
    pub t: f64,
    pub skeleton_size: usize,
    pub skeleton_spacing_violations: usize,
    pub denseness_margin: f64,
    pub denseness_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub h: f64,
    pub truncation: Option<(Vec<f64>, Vec<f64>)>,
    pub seed: u64,
    pub n_dofs: usize,
    pub h_over_rho: Option<f64>,
    pub divergence_form: bool,
}

/// Ball witnessing an upper bound on `lambda_Omega`, chosen by the case
/// analysis of the second construction step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BallWitness {
    pub case: String,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Dirichlet ground energy of the witness ball.
    pub bound: f64,
    /// The ball lies in `G` and misses the working `B`, so `bound` is an
    /// upper bound on `lambda_Omega` itself (not only for a reduced set).
    pub usable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainSample {
    pub beta: f64,
    pub lambda_beta: f64,
    pub mu_beta: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenRow {
    pub lambda: f64,
    pub residual: f64,
    /// `||f 1_B||^2 / ||f||^2` for the input `B`.
    pub mass_ratio: f64,
    /// Same for the working set `B_delta(Sigma)`.
    pub mass_ratio_working: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PassFlags {
    /// Discrete `mu_0 >= c delta^(d-2) / R^d`.
    pub mu0_lower: bool,
    /// `lambda_beta <= mu_beta <= lambda_Omega` at every sampled coupling.
    pub ordering_chain: bool,
    pub lambda_beta_monotone: bool,
    pub lambda_beta_concave: bool,
    /// Every in-range eigenvector carries mass `>= eta0 kappa` on `B`.
    pub eigen_mass: bool,
    pub constant_mass: bool,
    /// `(lambda_beta0 - E_t) / beta_0 >= kappa_t`, when `beta_0` was sampled.
    pub kappa_t_at_beta0: Option<bool>,
    /// All eigen solves converged.
    pub converged: bool,
}

impl PassFlags {
    pub fn all(&self) -> bool {
        self.mu0_lower
            && self.ordering_chain
            && self.lambda_beta_monotone
            && self.lambda_beta_concave
            && self.eigen_mass
            && self.constant_mass
            && self.kappa_t_at_beta0.unwrap_or(true)
            && self.converged
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UCPReport {
    pub geometry: GeometrySummary,
    pub provenance: Provenance,
    pub mu0_numeric: f64,
    pub mu0_lower: f64,
    pub lambda_omega_numeric: Option<f64>,
    pub lambda_omega_witness: BallWitness,
    pub lambda_omega_used: f64,
    pub beta0: f64,
    pub e_t: f64,
    pub kappa_t: f64,
    pub final_kappa: FinalKappa,
    pub i_max: f64,
    pub kappa: f64,
    pub lambda_beta: Vec<LambdaBetaSample>,
    pub chain: Vec<ChainSample>,
    /// `max_beta (lambda_beta - I_max / eta0) / beta` for the Laplacian.
    pub kappa_bls: f64,
    pub kappa_bls_beta: Option<f64>,
    /// The closed-form constant exceeds the sampled BLS constant.
    pub kappa_final_exceeds_bls: bool,
    /// Dense `min eig(P_I W P_I)` on the range of `P_I(H)`, when run.
    pub bls_direct_min: Option<f64>,
    pub eigen_rows: Vec<EigenRow>,
    /// The search for in-range eigenpairs stopped at `max_k`.
    pub k_capped: bool,
    pub constant_mass_ratio: f64,
    pub constant_margin: f64,
    pub passes: PassFlags,
}

fn solve<T: Real>(op: &SparseSymmetricOperator<T>, k: usize, cfg: &MainConfig<T>) -> Result<SpectralResult<T>> {
    let opts = EigOptions { seed: cfg.seed, ..EigOptions::default() };
    smallest_eigs_with(op, k, cfg.eig_tol, &opts)
}

fn ball_inside<T: Real>(g: &ConvexDomain<T>, c: &[T], r: T) -> bool {
    match g.kind() {
        DomainKind::Box(b) => c.iter().zip(b.lo()).zip(b.hi()).all(|((&x, &l), &u)| x - r >= l && x + r <= u),
        DomainKind::Ball { center, radius } => dist(c, center) + r <= *radius,
        DomainKind::WholeSpace { .. } => true,
        DomainKind::HalfSpaces { planes, clip, .. } => {
            planes.iter().all(|p| p.slack(c) >= r) && clip.as_ref().map_or(true, |(cc, cr)| dist(c, cc) + r <= *cr)
        }
    }
}

/// Case analysis for an explicit ball inside `Omega`: `R_0 = R_G / 4` for
/// bounded inradius, `4R` otherwise, `x_0` the inscribed center.
pub(crate) fn omega_witness<T: Real>(g: &ConvexDomain<T>, sk: &Skeleton<T>, r: T, delta: T) -> Result<BallWitness> {
    let d = g.dim();
    let r_g = g.inradius().value;
    let x0 = g.inscribed_center();
    let r0 = if r_g.is_finite() { r_g / T::lit(4.0) } else { T::lit(4.0) * r };
    let hit = sk.points.iter().position(|p| dist(p, &x0) < r0);
    let (case, center, radius) = match (T::lit(4.0) * r <= r0, hit) {
        (true, None) => ("1.1", x0.clone(), r),
        (true, Some(i)) => ("1.2", sk.points[i].clone(), r / T::lit(2.0)),
        (false, None) => ("2.1", x0.clone(), r0 / T::lit(4.0)),
        (false, Some(i)) if sk.len() >= 2 => ("2.2", sk.points[i].clone(), (r / T::lit(2.0)).min(r0)),
        (false, Some(i)) => {
            let s0 = &sk.points[i];
            let gap = dist(s0, &x0);
            let u: Vec<T> = if gap > T::zero() {
                s0.iter().zip(&x0).map(|(&a, &b)| (a - b) / gap).collect()
            } else {
                (0..d).map(|k| if k == 0 { T::one() } else { T::zero() }).collect()
            };
            let c = x0.iter().zip(&u).map(|(&x, &uk)| x - T::lit(1.5) * r0 * uk).collect();
            ("2.3", c, r0 / T::lit(2.0))
        }
    };
    let usable = ball_inside(g, &center, radius) && sk.points.iter().all(|p| dist(p, &center) >= radius + delta);
    Ok(BallWitness {
        case: case.into(),
        center: center.iter().map(|v| v.as_f64()).collect(),
        radius: radius.as_f64(),
        bound: ball_dirichlet_eigenvalue(radius, d)?.as_f64(),
        usable,
    })
}

fn grid_for<T: Real>(g: &ConvexDomain<T>, s: &BallUnion<T>, cfg: &MainConfig<T>) -> Result<GridDiscretization<T>> {
    classify_grid(g, s, cfg.h, cfg.truncation.as_ref())
}

fn mass_ratio<T: Real>(v: &[T], mask: &[bool]) -> f64 {
    let total: f64 = v.iter().map(|x| x.as_f64() * x.as_f64()).sum();
    let on: f64 = v.iter().zip(mask).filter(|(_, &m)| m).map(|(x, _)| x.as_f64() * x.as_f64()).sum();
    if total > 0.0 {
        on / total
    } else {
        0.0
    }
}

/// Runs the two-step construction on `G` with relatively dense `B`:
/// skeleton, working sets, `mu_0`, `lambda_Omega`, couplings, constants,
/// in-range eigenvectors of `H` (or of the divergence-form operator `a`)
/// and their mass on `B`.
pub fn verify_main<T: Real>(
    g: &ConvexDomain<T>,
    b_input: &BallUnion<T>,
    cfg: &MainConfig<T>,
    a: Option<&dyn CoefficientField<T>>,
) -> Result<UCPReport> {
    let d = g.dim();
    let (r, delta, eta0, t) = (cfg.r, cfg.delta, cfg.eta0, cfg.t);
    if !(delta > T::zero()) || !(delta <= r) || !r.is_finite() {
        return Err(invalid("need 0 < delta <= R < inf"));
    }
    if !(eta0 > T::zero()) {
        return Err(invalid("eta0 must be positive"));
    }
    if cfg.max_k == 0 {
        return Err(invalid("max_k must be positive"));
    }
    let k = DimensionalConstants::new(d)?;

    let cert = check_relative_denseness(b_input, g, r, delta, cfg.denseness_spacing)?;
    if !cert.verified {
        return Err(Error::DensenessNotCertified {
            r: r.as_f64(),
            delta: delta.as_f64(),
            margin: cert.margin.as_f64(),
            worst_point: cert.worst_point.iter().map(|v| v.as_f64()).collect(),
        });
    }
    let candidates: Vec<Vec<T>> = b_input.iter().filter(|(_, rad)| *rad >= delta).map(|(c, _)| c.to_vec()).collect();
    let sk = build_skeleton(&candidates, r)?;
    let b_work = sk.fattening(delta)?;
    let s_set = sk.fattening(delta / T::lit(2.0))?;

    let grid_g = grid_for(g, &BallUnion::empty(d), cfg)?;
    let grid_s = grid_for(g, &s_set, cfg)?;
    let grid_b = grid_for(g, &b_work, cfg)?;
    let h_g = assemble_laplacian(&grid_g, T::zero(), &BallUnion::empty(d))?;
    let mask_input = grid_g.indicator(b_input);
    let mask_work = grid_g.indicator(&b_work);
    let mut converged = true;

    // mu_0 = lambda^{G,S}.
    let h_s = assemble_laplacian(&grid_s, T::zero(), &BallUnion::empty(d))?;
    let mu0 = solve(&h_s, 1, cfg)?;
    converged &= mu0.converged;
    let mu0_numeric = mu0.eigenvalues[0].as_f64();
    let ratio = delta.as_f64().powi(d as i32 - 2) / r.as_f64().powi(d as i32);
    let mu0_lower = k.c_mu0 * ratio;

    // lambda_Omega, numerically and by a ball witness.
    let lambda_omega_numeric = if grid_b.n_dofs() > 0 {
        let h_b = assemble_laplacian(&grid_b, T::zero(), &BallUnion::empty(d))?;
        let lo = solve(&h_b, 1, cfg)?;
        converged &= lo.converged;
        Some(lo.eigenvalues[0].as_f64())
    } else {
        None
    };
    let witness = omega_witness(g, &sk, r, delta)?;
    let mut lambda_omega_used = lambda_omega_numeric.unwrap_or(f64::INFINITY);
    if witness.usable {
        lambda_omega_used = lambda_omega_used.min(witness.bound);
    }
    if !lambda_omega_used.is_finite() {
        return Err(invalid("Omega = G minus B is empty and no witness ball applies"));
    }

    let r_g = g.inradius().value;
    let first: FirstStep<f64> = kappa_first_step(delta.as_f64(), r.as_f64(), lambda_omega_used, t.as_f64(), d)?;
    let beta0 = optimal_beta(delta.as_f64() / 2.0, mu0_numeric.max(f64::MIN_POSITIVE), lambda_omega_used, t.as_f64(), d)?;
    let fin = kappa_final(delta, r, r_g, eta0, d)?;

    // lambda_beta and mu_beta on the sampled couplings.
    let mut betas: Vec<f64> = cfg.betas.iter().map(|b| b.as_f64()).collect();
    let beta0_sampled = beta0 <= cfg.beta_cap.as_f64();
    if beta0_sampled {
        betas.push(beta0);
    }
    betas.sort_by(|x, y| x.partial_cmp(y).unwrap());
    betas.dedup();
    if betas.iter().any(|&b| !(b > 0.0)) {
        return Err(invalid("couplings must be positive"));
    }
    let opts = EigOptions { seed: cfg.seed, ..EigOptions::default() };
    let mask_s = grid_s.indicator(&b_work);
    let mut lambda_beta = Vec::with_capacity(betas.len());
    let mut chain = Vec::with_capacity(betas.len());
    for &beta in &betas {
        let lb = ground_with_potential(&h_g, &mask_work, T::lit(beta), cfg.eig_tol, &opts)?;
        let mb = ground_with_potential(&h_s, &mask_s, T::lit(beta), cfg.eig_tol, &opts)?;
        converged &= lb.converged && mb.converged;
        let slack = |v: f64, res: f64| 1e-8 * v.abs() + res;
        let mut holds = lb.lambda <= mb.lambda + slack(mb.lambda, lb.residual + mb.residual);
        if let Some(lo) = lambda_omega_numeric {
            holds &= mb.lambda <= lo + slack(lo, mb.residual + cfg.eig_tol.as_f64());
        }
        chain.push(ChainSample { beta, lambda_beta: lb.lambda, mu_beta: mb.lambda, holds });
        lambda_beta.push(lb);
    }
    let shape_tol = lambda_beta.iter().map(|s| s.residual).fold(cfg.eig_tol.as_f64(), f64::max);
    let (monotone, concave) = shape_flags(&lambda_beta, shape_tol);

    let e_lap = fin.i_max / eta0.as_f64();
    let mut kappa_bls = 0.0f64;
    let mut kappa_bls_beta = None;
    for s in &lambda_beta {
        let v = (s.lambda_lower() - e_lap) / s.beta;
        if s.lambda_lower() > e_lap && v > kappa_bls {
            kappa_bls = v;
            kappa_bls_beta = Some(s.beta);
        }
    }
    let kappa_t_at_beta0 = if beta0_sampled {
        lambda_beta
            .iter()
            .find(|s| s.beta == beta0)
            .map(|s| (s.lambda_lower() - first.e_t) / beta0 >= first.kappa_t)
    } else {
        None
    };
    let bls_direct_min = if cfg.dense_check && h_g.n() <= super::bls::DENSE_CHECK_LIMIT {
        Some(projected_min(&h_g, &mask_work, e_lap)?.0)
    } else {
        None
    };

    // In-range eigenpairs of the operator under test.
    let op_owned;
    let op: &SparseSymmetricOperator<T> = match a {
        Some(field) => {
            op_owned = assemble_divergence_form(&grid_g, field, eta0, T::zero(), &BallUnion::empty(d))?;
            &op_owned
        }
        None => &h_g,
    };
    let n = op.n();
    let mut kk = 2.min(n);
    let (eig, k_capped) = loop {
        let res = solve(op, kk, cfg)?;
        let top = res.eigenvalues.last().unwrap().as_f64();
        if top > fin.i_max || kk == n {
            break (res, false);
        }
        if kk >= cfg.max_k {
            break (res, true);
        }
        kk = (2 * kk).min(cfg.max_k).min(n);
    };
    converged &= eig.converged;
    let target = eta0.as_f64() * fin.kappa;
    let eigen_rows: Vec<EigenRow> = (0..eig.len())
        .filter(|&i| eig.eigenvalues[i].as_f64() <= fin.i_max)
        .map(|i| {
            let v = &eig.eigenvectors[i];
            let mr = mass_ratio(v, &mask_input);
            EigenRow {
                lambda: eig.eigenvalues[i].as_f64(),
                residual: eig.residuals[i].as_f64(),
                mass_ratio: mr,
                mass_ratio_working: mass_ratio(v, &mask_work),
                pass: mr >= target,
            }
        })
        .collect();
    let constant_mass_ratio = mask_input.iter().filter(|&&m| m).count() as f64 / n as f64;

    let passes = PassFlags {
        mu0_lower: mu0_numeric >= mu0_lower,
        ordering_chain: chain.iter().all(|c| c.holds),
        lambda_beta_monotone: monotone,
        lambda_beta_concave: concave,
        eigen_mass: eigen_rows.iter().all(|e| e.pass),
        constant_mass: constant_mass_ratio >= target,
        kappa_t_at_beta0,
        converged,
    };
    Ok(UCPReport {
        geometry: GeometrySummary {
            d,
            r: r.as_f64(),
            delta: delta.as_f64(),
            r_g: r_g.as_f64(),
            eta0: eta0.as_f64(),
            t: t.as_f64(),
            skeleton_size: sk.len(),
            skeleton_spacing_violations: sk.spacing_violations.len(),
            denseness_margin: cert.margin.as_f64(),
            denseness_samples: cert.samples,
        },
        provenance: Provenance {
            h: cfg.h.as_f64(),
            truncation: cfg.truncation.as_ref().map(|b| (b.lo().iter().map(|v| v.as_f64()).collect(), b.hi().iter().map(|v| v.as_f64()).collect())),
            seed: cfg.seed,
            n_dofs: n,
            h_over_rho: grid_s.h_over_rho.map(|v| v.as_f64()),
            divergence_form: a.is_some(),
        },
        mu0_numeric,
        mu0_lower,
        lambda_omega_numeric,
        lambda_omega_witness: witness,
        lambda_omega_used,
        beta0,
        e_t: first.e_t,
        kappa_t: first.kappa_t,
        i_max: fin.i_max,
        kappa: fin.kappa,
        final_kappa: fin,
        lambda_beta,
        chain,
        kappa_bls,
        kappa_bls_beta,
        kappa_final_exceeds_bls: fin.kappa > kappa_bls,
        bls_direct_min,
        eigen_rows,
        k_capped,
        constant_mass_ratio,
        constant_margin: constant_mass_ratio / target,
        passes,
    })
}
