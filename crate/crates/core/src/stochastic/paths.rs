//! Euler simulation of Brownian motion reflected at the boundary of `G`,
//! with first hits of `S` and occupation times of `B`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{AxisBox, BallUnion, ConvexDomain, DomainKind};
use crate::scalar::{dist, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct PathConfig<T> {
    pub dt: T,
    pub horizon: T,
    pub n_paths: usize,
    pub seed: u64,
    pub start: Vec<T>,
}

impl<T: Real> PathConfig<T> {
    pub fn new(dt: T, n_paths: usize, seed: u64, start: Vec<T>) -> Self {
        Self { dt, horizon: T::one(), n_paths, seed, start }
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round().to_usize().unwrap_or(0)
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(invalid("dt must be positive"));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(invalid("horizon must be positive"));
        }
        if self.n_paths == 0 {
            return Err(invalid("need at least one path"));
        }
        if self.start.len() != dim {
            return Err(invalid("start point has the wrong dimension"));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > T::lit(1e-9) * steps {
            return Err(invalid("horizon must be an integer multiple of dt"));
        }
        Ok(())
    }

    /// Endpoint hit detection needs `dt <= rho^2 / 100` against walls of
    /// thickness `rho`.
    pub fn check_resolution(&self, rho: T) -> Result<()> {
        let max = rho * rho / T::lit(100.0);
        if self.dt > max * (T::one() + T::lit(1e-12)) {
            return Err(invalid(format!(
                "dt = {} exceeds rho^2/100 = {} for wall thickness {}",
                self.dt.as_f64(),
                max.as_f64(),
                rho.as_f64()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathOutcome<T> {
    pub hit_s: bool,
    pub first_hit: Option<T>,
    /// Time spent in `B` over `[0, horizon]`, or over the simulated part
    /// when `stopped_early`.
    pub occupation_t: T,
    pub exit_reflections: usize,
    /// Position at the horizon (at the stopping step when stopped early).
    #[serde(skip)]
    pub end: Vec<T>,
    pub stopped_early: bool,
}

/// Reflection rule derived from the host domain.
pub(crate) enum Reflector<T> {
    Box(AxisBox<T>),
    Ball { center: Vec<T>, radius: T },
}

impl<T: Real> Reflector<T> {
    pub(crate) fn new(g: &ConvexDomain<T>) -> Result<Self> {
        match g.kind() {
            DomainKind::Box(b) => Ok(Reflector::Box(b.clone())),
            DomainKind::WholeSpace { truncation } => Ok(Reflector::Box(truncation.clone())),
            DomainKind::Ball { center, radius } => Ok(Reflector::Ball { center: center.clone(), radius: *radius }),
            DomainKind::HalfSpaces { .. } => Err(Error::UnsupportedReflection("half-space intersection")),
        }
    }

    /// Maps `x` back into the domain; returns whether it moved.
    fn reflect(&self, x: &mut [T]) -> bool {
        match self {
            Reflector::Box(b) => {
                let mut moved = false;
                for ((xi, &lo), &hi) in x.iter_mut().zip(b.lo()).zip(b.hi()) {
                    if *xi < lo || *xi > hi {
                        moved = true;
                        let period = T::lit(2.0) * (hi - lo);
                        let mut y = (*xi - lo) % period;
                        if y < T::zero() {
                            y += period;
                        }
                        if y > hi - lo {
                            y = period - y;
                        }
                        *xi = lo + y;
                    }
                }
                moved
            }
            Reflector::Ball { center, radius } => {
                let r = dist(x, center);
                if r <= *radius {
                    return false;
                }
                let mut target = T::lit(2.0) * *radius - r;
                if target < T::zero() {
                    // Overshoot past the far side; fold again.
                    target = (-target).min(*radius);
                }
                let s = target / r;
                for (xi, &c) in x.iter_mut().zip(center) {
                    *xi = c + (*xi - c) * s;
                }
                true
            }
        }
    }
}

/// Simulates one path. `stop_above` ends the path once the occupation time
/// exceeds it.
pub(crate) fn simulate_one<T: Real>(
    refl: &Reflector<T>,
    s: &BallUnion<T>,
    b: &BallUnion<T>,
    cfg: &PathConfig<T>,
    index: u64,
    stop_above: Option<T>,
) -> PathOutcome<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let steps = cfg.n_steps();
    let sd = cfg.dt.sqrt().as_f64();
    let mut x = cfg.start.clone();
    let mut out = PathOutcome {
        hit_s: false,
        first_hit: None,
        occupation_t: T::zero(),
        exit_reflections: 0,
        end: Vec::new(),
        stopped_early: false,
    };
    if s.contains(&x) {
        out.hit_s = true;
        out.first_hit = Some(T::zero());
    }
    for step in 0..steps {
        if b.contains(&x) {
            out.occupation_t += cfg.dt;
            if let Some(limit) = stop_above {
                if out.occupation_t > limit {
                    out.stopped_early = true;
                    break;
                }
            }
        }
        for xi in x.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *xi += T::lit(sd * z);
        }
        if refl.reflect(&mut x) {
            out.exit_reflections += 1;
        }
        if !out.hit_s && s.contains(&x) {
            out.hit_s = true;
            out.first_hit = Some(T::from_usize_lossy(step + 1) * cfg.dt);
        }
    }
    out.end = x;
    out
}

pub(crate) fn check_inputs<T: Real>(g: &ConvexDomain<T>, s: &BallUnion<T>, b: &BallUnion<T>, cfg: &PathConfig<T>) -> Result<Reflector<T>> {
    let d = g.dim();
    cfg.validate(d)?;
    for u in [s, b] {
        if !u.is_empty() && u.dim() != d {
            return Err(invalid("ball union dimension differs from the domain"));
        }
    }
    let refl = Reflector::new(g)?;
    let inside = match &refl {
        Reflector::Box(bx) => bx.contains_tol(&cfg.start, T::zero()),
        Reflector::Ball { center, radius } => dist(&cfg.start, center) <= *radius,
    };
    if !inside {
        return Err(invalid("start point lies outside the domain"));
    }
    Ok(refl)
}

/// Runs `cfg.n_paths` independent reflected paths. Path `i` draws from
/// the ChaCha8 stream `i` of `cfg.seed`, so the outcome list does not depend
/// on the thread count.
pub fn simulate_paths<T: Real>(g: &ConvexDomain<T>, s: &BallUnion<T>, b: &BallUnion<T>, cfg: &PathConfig<T>) -> Result<Vec<PathOutcome<T>>> {
    let refl = check_inputs(g, s, b, cfg)?;
    Ok((0..cfg.n_paths as u64).into_par_iter().map(|i| simulate_one(&refl, s, b, cfg, i, None)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_folding_handles_large_overshoot() {
        let r = Reflector::Box(AxisBox::new(vec![0.0f64, 0.0], vec![1.0, 2.0]).unwrap());
        let mut x = vec![-0.25, 4.5];
        assert!(r.reflect(&mut x));
        assert!((x[0] - 0.25).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
        let mut y = vec![0.5, 1.0];
        assert!(!r.reflect(&mut y));
    }

    #[test]
    fn ball_mirror_is_radial() {
        let r = Reflector::Ball { center: vec![1.0f64, 0.0, 0.0], radius: 1.0 };
        let mut x = vec![2.3, 0.0, 0.0];
        r.reflect(&mut x);
        assert!((x[0] - 1.7).abs() < 1e-12);
    }
}
