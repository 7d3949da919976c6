use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{invalid, Error, Result};
use crate::scalar::{dist, dot, norm, Real};

/// Axis-aligned closed box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisBox<T> {
    lo: Vec<T>,
    hi: Vec<T>,
}

impl<T: Real> AxisBox<T> {
    pub fn new(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("box corners must have equal, nonzero length"));
        }
        if lo.iter().zip(&hi).any(|(&l, &h)| !(l < h) || !l.is_finite() || !h.is_finite()) {
            return Err(invalid("box requires finite lo[i] < hi[i] on every axis"));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[-w, w]^d`.
    pub fn centered_cube(d: usize, half_width: T) -> Result<Self> {
        Self::new(vec![-half_width; d], vec![half_width; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[T] {
        &self.lo
    }

    pub fn hi(&self) -> &[T] {
        &self.hi
    }

    pub fn contains_tol(&self, x: &[T], tol: T) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&xi, (&l, &h))| xi >= l - tol && xi <= h + tol)
    }

    pub fn volume(&self) -> T {
        self.lo.iter().zip(&self.hi).map(|(&l, &h)| h - l).fold(T::one(), |a, b| a * b)
    }

    pub fn min_side(&self) -> T {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(&l, &h)| h - l)
            .fold(T::infinity(), T::min)
    }
}

/// Closed half-space `{x : normal . x <= offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace<T> {
    pub normal: Vec<T>,
    pub offset: T,
}

impl<T: Real> HalfSpace<T> {
    /// Normalizes `normal` and rescales `offset` accordingly.
    pub fn new(normal: Vec<T>, offset: T) -> Result<Self> {
        let n = norm(&normal);
        if !(n > T::zero()) || !n.is_finite() || !offset.is_finite() {
            return Err(invalid("half-space normal must be finite and nonzero"));
        }
        Ok(Self {
            normal: normal.into_iter().map(|c| c / n).collect(),
            offset: offset / n,
        })
    }

    /// Signed slack `offset - normal . x`; nonnegative inside.
    pub fn slack(&self, x: &[T]) -> T {
        self.offset - dot(&self.normal, x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind<T> {
    Box(AxisBox<T>),
    Ball {
        center: Vec<T>,
        radius: T,
    },
    /// Intersection of half-spaces, optionally clipped by a closed ball.
    HalfSpaces {
        planes: Vec<HalfSpace<T>>,
        interior_point: Vec<T>,
        clip: Option<(Vec<T>, T)>,
    },
    /// All of R^d; numerics act on `truncation` with a Neumann outer wall.
    WholeSpace { truncation: AxisBox<T> },
}

/// Convex region serving as the host domain `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexDomain<T> {
    kind: DomainKind<T>,
}

/// Result of [`ConvexDomain::inradius`]; `value` is `+inf` for unbounded domains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InradiusEstimate<T> {
    pub value: T,
    pub tolerance: T,
}

fn check_dim(d: usize) -> Result<()> {
    if d < 3 {
        return Err(invalid(format!("dimension must be at least 3, got {d}")));
    }
    Ok(())
}

impl<T: Real> ConvexDomain<T> {
    pub fn new_box(lo: Vec<T>, hi: Vec<T>) -> Result<Self> {
        let b = AxisBox::new(lo, hi)?;
        check_dim(b.dim())?;
        Ok(Self { kind: DomainKind::Box(b) })
    }

    pub fn from_box(b: AxisBox<T>) -> Result<Self> {
        check_dim(b.dim())?;
        Ok(Self { kind: DomainKind::Box(b) })
    }

    pub fn new_ball(center: Vec<T>, radius: T) -> Result<Self> {
        check_dim(center.len())?;
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(invalid("ball radius must be positive and finite"));
        }
        Ok(Self {
            kind: DomainKind::Ball { center, radius },
        })
    }

    /// `interior_point` must satisfy every constraint strictly.
    pub fn new_halfspaces(
        planes: Vec<HalfSpace<T>>,
        interior_point: Vec<T>,
        clip: Option<(Vec<T>, T)>,
    ) -> Result<Self> {
        let d = interior_point.len();
        check_dim(d)?;
        if planes.is_empty() {
            return Err(invalid("half-space intersection needs at least one plane"));
        }
        if planes.iter().any(|p| p.normal.len() != d) {
            return Err(invalid("half-space normals must match the interior point dimension"));
        }
        if planes.iter().any(|p| !(p.slack(&interior_point) > T::zero())) {
            return Err(invalid("interior point violates a half-space constraint"));
        }
        if let Some((c, r)) = &clip {
            if c.len() != d || !(*r > T::zero()) || !(dist(c, &interior_point) < *r) {
                return Err(invalid("interior point must lie strictly inside the clipping ball"));
            }
        }
        Ok(Self {
            kind: DomainKind::HalfSpaces {
                planes,
                interior_point,
                clip,
            },
        })
    }

    pub fn whole_space(truncation: AxisBox<T>) -> Result<Self> {
        check_dim(truncation.dim())?;
        Ok(Self {
            kind: DomainKind::WholeSpace { truncation },
        })
    }

    pub fn kind(&self) -> &DomainKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Box(b) => b.dim(),
            DomainKind::Ball { center, .. } => center.len(),
            DomainKind::HalfSpaces { interior_point, .. } => interior_point.len(),
            DomainKind::WholeSpace { truncation } => truncation.dim(),
        }
    }

    pub fn is_whole_space(&self) -> bool {
        matches!(self.kind, DomainKind::WholeSpace { .. })
    }

    /// Closed-set membership in the mathematical domain.
    pub fn contains(&self, x: &[T]) -> bool {
        self.contains_tol(x, T::zero())
    }

    pub fn contains_tol(&self, x: &[T], tol: T) -> bool {
        match &self.kind {
            DomainKind::Box(b) => b.contains_tol(x, tol),
            DomainKind::Ball { center, radius } => dist(x, center) <= *radius + tol,
            DomainKind::HalfSpaces { planes, clip, .. } => {
                planes.iter().all(|p| p.slack(x) >= -tol)
                    && clip.as_ref().map_or(true, |(c, r)| dist(x, c) <= *r + tol)
            }
            DomainKind::WholeSpace { .. } => true,
        }
    }

    /// Membership in the region numerics act on (the truncation box for R^d).
    pub fn contains_numerical(&self, x: &[T], tol: T) -> bool {
        match &self.kind {
            DomainKind::WholeSpace { truncation } => truncation.contains_tol(x, tol),
            _ => self.contains_tol(x, tol),
        }
    }

    /// Bounding box of the numerical region.
    pub fn bounding_box(&self) -> Result<AxisBox<T>> {
        match &self.kind {
            DomainKind::Box(b) => Ok(b.clone()),
            DomainKind::Ball { center, radius } => AxisBox::new(
                center.iter().map(|&c| c - *radius).collect(),
                center.iter().map(|&c| c + *radius).collect(),
            ),
            DomainKind::WholeSpace { truncation } => Ok(truncation.clone()),
            DomainKind::HalfSpaces { planes, clip, .. } => halfspace_bounding_box(planes, clip.as_ref()),
        }
    }

    /// Lebesgue measure when finite and available in closed form.
    pub fn volume(&self) -> Option<T> {
        match &self.kind {
            DomainKind::Box(b) => Some(b.volume()),
            DomainKind::Ball { radius, .. } => {
                Some(crate::bounds::unit_ball_volume::<T>(self.dim()) * radius.powi(self.dim() as i32))
            }
            _ => None,
        }
    }

    /// Inradius `sup { r : B_r(x) in G }`; exact for boxes and balls, a
    /// cutting-plane linear program for half-space intersections.
    pub fn inradius(&self) -> InradiusEstimate<T> {
        match &self.kind {
            DomainKind::Box(b) => InradiusEstimate {
                value: b.min_side() / T::lit(2.0),
                tolerance: T::zero(),
            },
            DomainKind::Ball { radius, .. } => InradiusEstimate {
                value: *radius,
                tolerance: T::zero(),
            },
            DomainKind::WholeSpace { .. } => InradiusEstimate {
                value: T::infinity(),
                tolerance: T::zero(),
            },
            DomainKind::HalfSpaces { planes, clip, .. } => chebyshev_ball(planes, clip.as_ref()).0,
        }
    }

    /// Center of a ball of radius `inradius().value` inside the domain; the
    /// truncation center for whole space.
    pub fn inscribed_center(&self) -> Vec<T> {
        match &self.kind {
            DomainKind::Box(b) => b.lo().iter().zip(b.hi()).map(|(&l, &h)| (l + h) / T::lit(2.0)).collect(),
            DomainKind::Ball { center, .. } => center.clone(),
            DomainKind::WholeSpace { truncation } => {
                truncation.lo().iter().zip(truncation.hi()).map(|(&l, &h)| (l + h) / T::lit(2.0)).collect()
            }
            DomainKind::HalfSpaces { planes, clip, interior_point } => chebyshev_ball(planes, clip.as_ref())
                .1
                .map_or_else(|| interior_point.clone(), |c| c.into_iter().map(T::lit).collect()),
        }
    }
}

fn to_f64<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

const CUT_TOL: f64 = 1e-7;
const MAX_CUTS: usize = 400;

/// Largest inscribed ball of a half-space intersection, with a ball clip
/// handled by tangent cutting planes. Also returns the center attaining the
/// reported radius, when bounded.
fn chebyshev_ball<T: Real>(planes: &[HalfSpace<T>], clip: Option<&(Vec<T>, T)>) -> (InradiusEstimate<T>, Option<Vec<f64>>) {
    let d = planes[0].normal.len();
    let mut cuts: Vec<Vec<f64>> = Vec::new();
    if clip.is_some() {
        for k in 0..d {
            for s in [1.0, -1.0] {
                let mut u = vec![0.0; d];
                u[k] = s;
                cuts.push(u);
            }
        }
    }
    let clip64 = clip.map(|(c, r)| (to_f64(c), r.as_f64()));
    // Kelley's method: rv is a decreasing upper bound, `best` an attained radius.
    let mut best = 0.0f64;
    let mut best_x: Option<Vec<f64>> = None;
    let mut upper = f64::INFINITY;
    for _ in 0..MAX_CUTS {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let xs: Vec<_> = (0..d).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
        let r = lp.add_var(1.0, (0.0, f64::INFINITY));
        for p in planes {
            let mut row: Vec<_> = xs.iter().zip(&p.normal).map(|(&v, n)| (v, n.as_f64())).collect();
            row.push((r, 1.0));
            lp.add_constraint(&row, ComparisonOp::Le, p.offset.as_f64());
        }
        if let Some((c, rad)) = &clip64 {
            for u in &cuts {
                let mut row: Vec<_> = xs.iter().zip(u).map(|(&v, &uk)| (v, uk)).collect();
                row.push((r, 1.0));
                let rhs = rad + u.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
                lp.add_constraint(&row, ComparisonOp::Le, rhs);
            }
        }
        let sol = match lp.solve() {
            Ok(s) => s,
            Err(minilp::Error::Unbounded) => {
                return (
                    InradiusEstimate {
                        value: T::infinity(),
                        tolerance: T::zero(),
                    },
                    None,
                )
            }
            Err(minilp::Error::Infeasible) => {
                return (
                    InradiusEstimate {
                        value: T::zero(),
                        tolerance: T::zero(),
                    },
                    None,
                )
            }
        };
        let x: Vec<f64> = xs.iter().map(|&v| sol[v]).collect();
        let rv = sol[r];
        let Some((c, rad)) = &clip64 else {
            return (
                InradiusEstimate {
                    value: T::lit(rv),
                    tolerance: T::lit(CUT_TOL),
                },
                Some(x),
            );
        };
        upper = upper.min(rv);
        let off: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
        let dc = off.iter().map(|v| v * v).sum::<f64>().sqrt();
        let attained = rv.min(rad - dc);
        if attained > best || best_x.is_none() {
            best = best.max(attained);
            best_x = Some(x.clone());
        }
        if upper - best <= CUT_TOL || dc == 0.0 {
            break;
        }
        cuts.push(off.iter().map(|v| v / dc).collect());
    }
    (
        InradiusEstimate {
            value: T::lit(best),
            tolerance: T::lit((upper - best).max(CUT_TOL)),
        },
        best_x,
    )
}

fn halfspace_bounding_box<T: Real>(planes: &[HalfSpace<T>], clip: Option<&(Vec<T>, T)>) -> Result<AxisBox<T>> {
    let d = planes[0].normal.len();
    let mut lo = vec![T::zero(); d];
    let mut hi = vec![T::zero(); d];
    for k in 0..d {
        for (sign, slot) in [(1.0, &mut hi), (-1.0, &mut lo)] {
            let mut lp = Problem::new(OptimizationDirection::Maximize);
            let xs: Vec<_> = (0..d)
                .map(|j| {
                    let (l, h) = clip.map_or((f64::NEG_INFINITY, f64::INFINITY), |(c, r)| {
                        (c[j].as_f64() - r.as_f64(), c[j].as_f64() + r.as_f64())
                    });
                    lp.add_var(if j == k { sign } else { 0.0 }, (l, h))
                })
                .collect();
            for p in planes {
                let row: Vec<_> = xs.iter().zip(&p.normal).map(|(&v, n)| (v, n.as_f64())).collect();
                lp.add_constraint(&row, ComparisonOp::Le, p.offset.as_f64());
            }
            match lp.solve() {
                Ok(sol) => slot[k] = T::lit(sign * sol.objective()),
                Err(minilp::Error::Unbounded) => return Err(Error::UnboundedDomain),
                Err(minilp::Error::Infeasible) => return Err(invalid("half-space intersection is empty")),
            }
        }
    }
    AxisBox::new(lo, hi)
}
