//! Closed-form spectral bounds, probabilistic bounds and the constants of the
//! low-energy uncertainty principle. Pure arithmetic.

mod registry;
mod special;

pub use registry::{evaluate, BoundReport, BOUND_NAMES};
pub use special::{bessel_first_zero, unit_ball_volume_f64};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

fn check_dim(d: usize) -> Result<()> {
    if d < 3 {
        return Err(invalid(format!("dimension must be at least 3, got {d}")));
    }
    Ok(())
}

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(invalid(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn powi<T: Real>(x: T, n: usize) -> T {
    x.powi(n as i32)
}

pub fn unit_ball_volume<T: Real>(d: usize) -> T {
    T::lit(unit_ball_volume_f64(d))
}

/// Constants depending only on the dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionalConstants {
    pub d: usize,
    pub omega_d: f64,
    /// First positive zero of `J_{d/2-1}`.
    pub bessel_zero: f64,
    /// `d(d-2)/18^d`.
    pub c_mu0: f64,
    /// `sqrt(1 + 2^(d/2+2))`.
    pub a_big: f64,
    /// `1 + 2^(d/2+2)`.
    pub a_big_sq: f64,
    /// `c_mu0 / 2^8`.
    pub c_prime: f64,
    /// `c_mu0 / (2A)`.
    pub a_prime: f64,
    /// `1/(4 sqrt 2)`.
    pub a_exp: f64,
}

impl DimensionalConstants {
    pub fn new(d: usize) -> Result<Self> {
        check_dim(d)?;
        let df = d as f64;
        let c_mu0 = df * (df - 2.0) / 18f64.powi(d as i32);
        let a_big_sq = 1.0 + 2f64.powf(df / 2.0 + 2.0);
        let a_big = a_big_sq.sqrt();
        Ok(Self {
            d,
            omega_d: unit_ball_volume_f64(d),
            bessel_zero: bessel_first_zero(d),
            c_mu0,
            a_big,
            a_big_sq,
            c_prime: c_mu0 / 256.0,
            a_prime: c_mu0 / (2.0 * a_big),
            a_exp: 1.0 / (4.0 * 2f64.sqrt()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnulusBounds<T> {
    pub lower: T,
    pub upper: Option<T>,
}

/// Two-sided bound for `B_R(0) \ B_rho(0)`-type geometries:
/// `lower = d(d-2) rho^(d-2) / R^d` and, when the host volume is known and
/// exceeds `|B_{2 rho}|`, `upper = 2^d omega_d rho^(d-2) / (vol_G - omega_d (2 rho)^d)`.
pub fn annulus_bounds<T: Real>(rho: T, r: T, d: usize, vol_g: Option<T>) -> Result<AnnulusBounds<T>> {
    check_dim(d)?;
    positive("rho", rho)?;
    if !(rho < r) || !r.is_finite() {
        return Err(invalid("annulus bounds need rho < R"));
    }
    let df = T::from_usize_lossy(d);
    let lower = df * (df - T::lit(2.0)) * powi(rho, d - 2) / powi(r, d);
    let upper = match vol_g {
        None => None,
        Some(v) => {
            let omega = unit_ball_volume::<T>(d);
            let inner = omega * powi(T::lit(2.0) * rho, d);
            if !(v > inner) {
                return Err(invalid("upper bound needs vol(G) > |B_{2 rho}|"));
            }
            Some(powi(T::lit(2.0), d) * omega * powi(rho, d - 2) / (v - inner))
        }
    };
    Ok(AnnulusBounds { lower, upper })
}

/// `(d-2) (rho/sqrt d)^(d-2) / ell^d`.
pub fn ballpool_lower<T: Real>(rho: T, ell: T, d: usize) -> Result<T> {
    check_dim(d)?;
    positive("rho", rho)?;
    if !(rho < ell / T::lit(2.0)) || !ell.is_finite() {
        return Err(invalid("ball pool bound needs rho < ell/2"));
    }
    let df = T::from_usize_lossy(d);
    Ok((df - T::lit(2.0)) * powi(rho / df.sqrt(), d - 2) / powi(ell, d))
}

/// `(d(d-2)/3^d) rho^(d-2) / R^d`.
pub fn general_lower<T: Real>(rho: T, r: T, d: usize) -> Result<T> {
    check_dim(d)?;
    positive("rho", rho)?;
    if !(rho <= r) || !r.is_finite() {
        return Err(invalid("general bound needs rho <= R"));
    }
    let df = T::from_usize_lossy(d);
    Ok(df * (df - T::lit(2.0)) / powi(T::lit(3.0), d) * powi(rho, d - 2) / powi(r, d))
}

/// Benchmark `rho^(d-1) / R^(d+1)` with unit prefactor, for ratios only.
pub fn davies_comparison<T: Real>(rho: T, r: T, d: usize) -> Result<T> {
    check_dim(d)?;
    positive("rho", rho)?;
    if !(rho < r) || !r.is_finite() {
        return Err(invalid("comparison needs rho < R"));
    }
    Ok(powi(rho, d - 1) / powi(r, d + 1))
}

/// `2^(d/2+2) exp(-rho^2 / (16 alpha))`. May exceed one.
pub fn hit_and_run_bound<T: Real>(rho: T, alpha: T, d: usize) -> Result<T> {
    check_dim(d)?;
    positive("rho", rho)?;
    positive("alpha", alpha)?;
    if alpha > T::one() {
        return Err(invalid("alpha must lie in (0, 1]"));
    }
    let df = T::from_usize_lossy(d);
    Ok(T::lit(2.0).powf(df / T::lit(2.0) + T::lit(2.0)) * (-rho * rho / (T::lit(16.0) * alpha)).exp())
}

/// `sqrt(1 + 4 * 2^(d/2)) exp(-rho sqrt(beta) / (4 sqrt 2))`.
pub fn semigroup_diff_bound<T: Real>(rho: T, beta: T, d: usize) -> Result<T> {
    check_dim(d)?;
    positive("rho", rho)?;
    positive("beta", beta)?;
    let df = T::from_usize_lossy(d);
    let pre = (T::one() + T::lit(4.0) * T::lit(2.0).powf(df / T::lit(2.0))).sqrt();
    Ok(pre * (-rho * beta.sqrt() / (T::lit(4.0) * T::SQRT_2())).exp())
}

/// Optimal occupation threshold `rho / (4 sqrt 2 sqrt beta)`, which equates
/// the two exponents in the bound on `E_x[exp(-2 beta T); sigma <= 1]`.
pub fn semigroup_gap_alpha<T: Real>(rho: T, beta: T) -> Result<T> {
    positive("rho", rho)?;
    positive("beta", beta)?;
    Ok(rho / (T::lit(4.0) * T::SQRT_2() * beta.sqrt()))
}

/// `exp(-2 beta alpha*) + hit_and_run_bound(rho, alpha*, d)` at the optimal `alpha*`.
pub fn semigroup_gap_bound<T: Real>(rho: T, beta: T, d: usize) -> Result<T> {
    let alpha = semigroup_gap_alpha(rho, beta)?;
    let hr = hit_and_run_bound(rho, alpha.min(T::one()), d)?;
    Ok((-T::lit(2.0) * beta * alpha).exp() + hr)
}

/// Ground Dirichlet eigenvalue of `-Delta/2` on a ball of radius `R`: `z^2 / (2 R^2)`.
pub fn ball_dirichlet_eigenvalue<T: Real>(r: T, d: usize) -> Result<T> {
    check_dim(d)?;
    positive("R", r)?;
    let z = T::lit(bessel_first_zero(d));
    Ok(z * z / (T::lit(2.0) * r * r))
}

/// Energy of the piecewise-linear radial test function `phi(|x|/r)`:
/// `omega_d (2^d - 1) r^(d-2) + omega_d 2^d r^d`.
pub fn capacity_upper<T: Real>(r: T, d: usize) -> Result<T> {
    check_dim(d)?;
    positive("r", r)?;
    let omega = unit_ball_volume::<T>(d);
    let two_d = powi(T::lit(2.0), d);
    Ok(omega * (two_d - T::one()) * powi(r, d - 2) + omega * two_d * powi(r, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Fading,
    Nonfading,
    Solid,
}

/// Classification conventions for finite sequences.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeParams {
    /// Fraction of the sequence, counted from the end, forming the tail window.
    pub window_fraction: f64,
    /// Solid if every tail value exceeds this multiple of the first element.
    pub solid_factor: f64,
    /// Nonfading if the tail infimum is at least this multiple of the first element.
    pub nonfading_factor: f64,
}

impl Default for RegimeParams {
    fn default() -> Self {
        Self { window_fraction: 0.5, solid_factor: 100.0, nonfading_factor: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// `rho_n^(d-2) / R_n^d`.
    pub sequence: Vec<f64>,
    pub tail_start: usize,
    pub tail_min: f64,
}

pub fn homogenization_regime<T: Real>(rhos: &[T], rs: &[T], d: usize, params: RegimeParams) -> Result<RegimeReport> {
    check_dim(d)?;
    if rhos.is_empty() || rhos.len() != rs.len() {
        return Err(invalid("sequences must be nonempty and of equal length"));
    }
    if !(params.window_fraction > 0.0 && params.window_fraction <= 1.0) {
        return Err(invalid("window fraction must lie in (0, 1]"));
    }
    let mut sequence = Vec::with_capacity(rhos.len());
    for (&rho, &r) in rhos.iter().zip(rs) {
        positive("rho", rho)?;
        positive("R", r)?;
        sequence.push((powi(rho, d - 2) / powi(r, d)).as_f64());
    }
    let n = sequence.len();
    let tail_len = ((n as f64 * params.window_fraction).ceil() as usize).clamp(1, n);
    let tail_start = n - tail_len;
    let tail_min = sequence[tail_start..].iter().copied().fold(f64::INFINITY, f64::min);
    let first = sequence[0];
    let regime = if tail_min > params.solid_factor * first {
        Regime::Solid
    } else if tail_min >= params.nonfading_factor * first {
        Regime::Nonfading
    } else {
        Regime::Fading
    };
    Ok(RegimeReport { regime, sequence, tail_start, tail_min })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstStep<T> {
    pub mu0_lower: T,
    pub e_t: T,
    pub kappa_t: T,
    /// `lambda_Omega - log((1-t) a' delta^(d-2)/R^d)`.
    pub bracket: T,
}

fn check_fraction<T: Real>(t: T) -> Result<()> {
    if !(t > T::zero() && t < T::one()) {
        return Err(invalid("t must lie in (0, 1)"));
    }
    Ok(())
}

/// Energy threshold and uncertainty constant of the first construction step.
pub fn kappa_first_step<T: Real>(delta: T, r: T, lambda_omega: T, t: T, d: usize) -> Result<FirstStep<T>> {
    let k = DimensionalConstants::new(d)?;
    positive("delta", delta)?;
    positive("lambda_Omega", lambda_omega)?;
    check_fraction(t)?;
    if !(delta <= r) || !r.is_finite() {
        return Err(invalid("need delta <= R"));
    }
    let ratio = powi(delta, d - 2) / powi(r, d);
    let mu0_lower = T::lit(k.c_mu0) * ratio;
    let bracket = lambda_omega - ((T::one() - t) * T::lit(k.a_prime) * ratio).ln();
    if !(bracket > T::zero()) {
        return Err(Error::DegenerateLog(bracket.as_f64()));
    }
    let kappa_t = (T::one() - t) * T::lit(k.c_prime) * powi(delta / r, d) / (bracket * bracket);
    Ok(FirstStep { mu0_lower, e_t: t * mu0_lower, kappa_t, bracket })
}

/// Coupling `beta_0 = (a_exp rho)^(-2) [lambda_Omega - log((1-t) mu0 / (2A))]^2`.
pub fn optimal_beta<T: Real>(rho: T, mu0: T, lambda_omega: T, t: T, d: usize) -> Result<T> {
    let k = DimensionalConstants::new(d)?;
    positive("rho", rho)?;
    positive("mu0", mu0)?;
    positive("lambda_Omega", lambda_omega)?;
    check_fraction(t)?;
    let bracket = lambda_omega - ((T::one() - t) * mu0 / (T::lit(2.0) * T::lit(k.a_big))).ln();
    if !(bracket > T::zero()) {
        return Err(Error::DegenerateLog(bracket.as_f64()));
    }
    let ar = T::lit(k.a_exp) * rho;
    Ok(bracket * bracket / (ar * ar))
}

/// Energy interval and uncertainty constant with the canonical constant choice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FinalKappa {
    pub i_max: f64,
    pub kappa: f64,
    /// `c_mu0 / 2`.
    pub c_interval: f64,
    /// `bessel_zero^2`.
    pub b: f64,
    /// `a' / 2 * 8^-(d-2) * 6^-d`.
    pub a: f64,
    /// `c' / 2 * 48^-d`.
    pub c: f64,
    /// `min(R, R_G)`.
    pub r_eff: f64,
    /// `b / r_eff^2 + |log(a delta^(d-2) / R^d)|`.
    pub bracket: f64,
}

/// `I_max = C eta0 delta^(d-2)/R^d`,
/// `kappa = c (delta/R)^d [b/min(R,R_G)^2 + |log(a delta^(d-2)/R^d)|]^-2`.
///
/// The first-step constants at `t = 1/2` are taken after the worst-case
/// substitution `delta -> delta/8`, `R -> 6R`.
pub fn kappa_final<T: Real>(delta: T, r: T, r_g: T, eta0: T, d: usize) -> Result<FinalKappa> {
    let k = DimensionalConstants::new(d)?;
    positive("delta", delta)?;
    positive("eta0", eta0)?;
    if !(delta <= r) || !r.is_finite() {
        return Err(invalid("need delta <= R"));
    }
    if !(r_g > T::zero()) {
        return Err(invalid("R_G must be positive (or infinite)"));
    }
    let (delta, r, r_g, eta0) = (delta.as_f64(), r.as_f64(), r_g.as_f64(), eta0.as_f64());
    let di = d as i32;
    let ratio = delta.powi(di - 2) / r.powi(di);
    let c_interval = 0.5 * k.c_mu0;
    let b = k.bessel_zero * k.bessel_zero;
    let a = 0.5 * k.a_prime * 8f64.powi(-(di - 2)) * 6f64.powi(-di);
    let c = 0.5 * k.c_prime * 48f64.powi(-di);
    let r_eff = r.min(r_g);
    let bracket = b / (r_eff * r_eff) + (a * ratio).ln().abs();
    Ok(FinalKappa {
        i_max: c_interval * eta0 * ratio,
        kappa: c * (delta / r).powi(di) / (bracket * bracket),
        c_interval,
        b,
        a,
        c,
        r_eff,
        bracket,
    })
}
