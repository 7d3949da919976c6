//! Convex host domains, ball-union obstacle sets and the geometric
//! certificates built on them.

mod balls;
mod constructions;
mod denseness;
mod domain;
mod skeleton;

pub use balls::{scatter_balls, BallUnion};
pub use constructions::{centered_ball_pool, make_appendix_example, make_ball_pool, BallPool, RadiusProfile};
pub use denseness::{certified_covering_radius, check_relative_denseness, DensenessCertificate};
#[allow(unused_imports)]
pub(crate) use denseness::{lattice_point, sample_lattice};
pub use domain::{AxisBox, ConvexDomain, DomainKind, HalfSpace, InradiusEstimate};
pub use skeleton::{build_skeleton, voronoi_assign, Skeleton};
