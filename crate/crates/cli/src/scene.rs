//! Turns a geometry table into a host domain, an obstacle set and the named
//! quantities (`R`, `delta`, ...) that bound expressions may refer to.

use std::collections::BTreeMap;
use std::fs::File;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use ucp_lab::geometry::{
    centered_ball_pool, certified_covering_radius, make_appendix_example, scatter_balls, AxisBox, DomainKind, HalfSpace,
    RadiusProfile,
};
use ucp_lab::{BallUnion, ConvexDomain};

use crate::config::{BallsSpec, DomainSpec, GeometrySpec, ProfileSpec};

pub struct Scene {
    pub g: ConvexDomain,
    pub s: BallUnion,
    pub truncation: Option<AxisBox<f64>>,
    pub quantities: BTreeMap<String, f64>,
}

#[derive(Serialize)]
pub struct SceneSummary {
    pub domain: String,
    pub dim: usize,
    pub volume: Option<f64>,
    pub inradius: f64,
    pub balls: usize,
    pub min_radius: Option<f64>,
    pub quantities: BTreeMap<String, f64>,
}

impl Scene {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn quantity(&self, key: &str) -> Result<f64> {
        self.quantities.get(key).copied().ok_or_else(|| anyhow!("geometry does not define `{key}`"))
    }

    pub fn summary(&self) -> SceneSummary {
        let domain = match self.g.kind() {
            DomainKind::Box(_) => "box",
            DomainKind::Ball { .. } => "ball",
            DomainKind::HalfSpaces { .. } => "halfspaces",
            DomainKind::WholeSpace { .. } => "whole_space",
        };
        SceneSummary {
            domain: domain.into(),
            dim: self.dim(),
            volume: self.g.volume(),
            inradius: self.g.inradius().value,
            balls: self.s.len(),
            min_radius: self.s.min_radius(),
            quantities: self.quantities.clone(),
        }
    }
}

fn centered_ball(d: usize, r: f64) -> Result<BallUnion> {
    Ok(BallUnion::uniform(d, vec![vec![0.0; d]], r)?)
}

fn domain(spec: &DomainSpec) -> Result<(ConvexDomain, Option<AxisBox<f64>>)> {
    Ok(match spec {
        DomainSpec::Box { lo, hi } => (ConvexDomain::new_box(lo.clone(), hi.clone())?, None),
        DomainSpec::Ball { center, radius } => (ConvexDomain::new_ball(center.clone(), *radius)?, None),
        DomainSpec::WholeSpace { dim, half_width } => {
            let t = AxisBox::centered_cube(*dim, *half_width)?;
            (ConvexDomain::whole_space(t.clone())?, Some(t))
        }
        DomainSpec::Halfspaces { normals, offsets, interior_point, clip_center, clip_radius } => {
            if normals.len() != offsets.len() {
                bail!("one offset per normal is required");
            }
            let planes = normals
                .iter()
                .zip(offsets)
                .map(|(n, &o)| HalfSpace::new(n.clone(), o))
                .collect::<ucp_lab::Result<Vec<_>>>()?;
            let clip = match (clip_center, clip_radius) {
                (Some(c), Some(r)) => Some((c.clone(), *r)),
                (None, None) => None,
                _ => bail!("clip_center and clip_radius go together"),
            };
            (ConvexDomain::new_halfspaces(planes, interior_point.clone(), clip)?, None)
        }
    })
}

pub fn build(spec: &GeometrySpec) -> Result<Scene> {
    let mut q = BTreeMap::new();
    let (g, s, truncation) = match spec {
        GeometrySpec::Annulus { d, radius, rho } => {
            let g = ConvexDomain::new_ball(vec![0.0; *d], *radius)?;
            q.insert("R".into(), *radius);
            q.insert("rho".into(), *rho);
            (g, centered_ball(*d, *rho)?, None)
        }
        GeometrySpec::Wall { d, half_width, inner } => {
            let t = AxisBox::centered_cube(*d, *half_width)?;
            q.insert("rho".into(), *inner);
            (ConvexDomain::whole_space(t.clone())?, centered_ball(*d, *inner)?, Some(t))
        }
        GeometrySpec::BallPool { d, n, ell, rho } => {
            let pool = centered_ball_pool(*d, *n, *ell, *rho)?;
            q.insert("R".into(), pool.denseness_r);
            q.insert("delta".into(), pool.denseness_delta);
            q.insert("rho".into(), *rho);
            q.insert("ell".into(), *ell);
            (pool.domain()?, pool.obstacles, None)
        }
        GeometrySpec::Scattered { d, side, count, radius, seed, spacing } => {
            let region = AxisBox::new(vec![0.0; *d], vec![*side; *d])?;
            let g = ConvexDomain::from_box(region.clone())?;
            let s = scatter_balls(&region, *count, *radius, *seed)?;
            let r = certified_covering_radius(&s, &g, *radius, spacing.unwrap_or(radius / 2.0))?;
            q.insert("R".into(), r);
            q.insert("delta".into(), *radius);
            q.insert("rho".into(), *radius);
            (g, s, None)
        }
        GeometrySpec::Lattice { d, profile, half_width } => {
            let p = match profile {
                ProfileSpec::Constant(r) => {
                    // Every point lies within sqrt(d)/2 of a lattice center.
                    q.insert("R".into(), (*d as f64).sqrt() / 2.0 + r);
                    q.insert("delta".into(), *r);
                    q.insert("rho".into(), *r);
                    RadiusProfile::Constant(*r)
                }
                ProfileSpec::Decaying(r0) => RadiusProfile::Decaying(*r0),
            };
            let (g, s) = make_appendix_example(*d, &p, *half_width)?;
            let t = match g.kind() {
                DomainKind::WholeSpace { truncation } => truncation.clone(),
                _ => unreachable!("lattice examples live in whole space"),
            };
            (g, s, Some(t))
        }
        GeometrySpec::Custom { domain: dspec, balls, r, delta } => {
            let (g, t) = domain(dspec)?;
            let s = match balls {
                None => BallUnion::empty(g.dim()),
                Some(BallsSpec::Inline { centers, radii }) => BallUnion::new(g.dim(), centers.clone(), radii.clone())?,
                Some(BallsSpec::Csv { path }) => {
                    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
                    BallUnion::read_csv(f)?
                }
            };
            if let Some(r) = r {
                q.insert("R".into(), *r);
            }
            if let Some(dl) = delta {
                q.insert("delta".into(), *dl);
            }
            (g, s, t)
        }
    };
    q.insert("d".into(), g.dim() as f64);
    if let Some(v) = g.volume() {
        q.insert("vol_G".into(), v);
    }
    Ok(Scene { g, s, truncation, quantities: q })
}
