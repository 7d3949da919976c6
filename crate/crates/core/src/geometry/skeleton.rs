use super::balls::BallUnion;
use crate::error::{invalid, Result};
use crate::scalar::{dist, dist2, Real};

/// Maximal `separation`-separated subset of a candidate point set.
#[derive(Clone, Debug, PartialEq)]
pub struct Skeleton<T> {
    pub points: Vec<Vec<T>>,
    /// Index of each skeleton point in the candidate list.
    pub source_indices: Vec<usize>,
    pub separation: T,
    pub cover_radius: T,
    pub source_count: usize,
    /// Skeleton points whose nearest other skeleton point is farther than
    /// `6 * separation`. Only reported: the bound needs a convex host and a
    /// dense obstacle set, which finite inputs need not satisfy.
    pub spacing_violations: Vec<usize>,
}

impl<T: Real> Skeleton<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Balls of radius `radius` around every skeleton point.
    pub fn fattening(&self, radius: T) -> Result<BallUnion<T>> {
        let d = self.points.first().map_or(0, Vec::len);
        BallUnion::uniform(d, self.points.clone(), radius)
    }

    /// Distance from `p` to the nearest other skeleton point.
    pub fn nearest_other(&self, p: usize) -> Option<T> {
        self.points
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != p)
            .map(|(_, x)| dist(x, &self.points[p]))
            .reduce(T::min)
    }
}

/// Greedy scan in input order: a candidate is accepted iff it is at least
/// `separation` away from every previously accepted point.
pub fn build_skeleton<T: Real>(candidates: &[Vec<T>], separation: T) -> Result<Skeleton<T>> {
    if candidates.is_empty() {
        return Err(invalid("skeleton needs at least one candidate"));
    }
    if !(separation > T::zero()) {
        return Err(invalid("skeleton separation must be positive"));
    }
    let sep2 = separation * separation;
    let mut points: Vec<Vec<T>> = Vec::new();
    let mut source_indices = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if points.iter().all(|p| dist2(p, c) >= sep2) {
            points.push(c.clone());
            source_indices.push(i);
        }
    }
    let mut sk = Skeleton {
        points,
        source_indices,
        separation,
        cover_radius: separation * T::lit(3.0),
        source_count: candidates.len(),
        spacing_violations: Vec::new(),
    };
    let limit = separation * T::lit(6.0);
    sk.spacing_violations = (0..sk.len())
        .filter(|&p| sk.nearest_other(p).is_some_and(|dn| dn > limit))
        .collect();
    Ok(sk)
}

/// Nearest skeleton point; ties go to the smallest index.
pub fn voronoi_assign<T: Real>(skeleton: &Skeleton<T>, x: &[T]) -> Result<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, p) in skeleton.points.iter().enumerate() {
        let d2 = dist2(p, x);
        if best.map_or(true, |(_, b)| d2 < b) {
            best = Some((i, d2));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| invalid("empty skeleton"))
}
