use rayon::prelude::*;

use super::balls::BallUnion;
use super::domain::{AxisBox, ConvexDomain};
use crate::error::{invalid, Result};
use crate::scalar::{dist, Real};

/// Outcome of a sampled `(R, delta)`-relative denseness check.
#[derive(Clone, Debug, PartialEq)]
pub struct DensenessCertificate<T> {
    pub r: T,
    pub delta: T,
    pub verified: bool,
    pub sample_spacing: T,
    pub samples: usize,
    /// Sample with the smallest margin.
    pub worst_point: Vec<T>,
    /// `min_x max_y (R - delta - |x - y|)` over samples `x` and eligible centers `y`.
    pub margin: T,
    /// Ball witnessing the worst point, if any ball has radius >= delta.
    pub witness: Option<usize>,
}

/// Uniform sample lattice over `bbox` with spacing at most `spacing`,
/// including both faces of every axis.
pub(crate) fn sample_lattice<T: Real>(bbox: &AxisBox<T>, spacing: T) -> (Vec<usize>, Vec<T>) {
    let counts: Vec<usize> = bbox
        .lo()
        .iter()
        .zip(bbox.hi())
        .map(|(&l, &h)| ((h - l) / spacing).ceil().to_usize().unwrap_or(0).max(1) + 1)
        .collect();
    let steps = bbox
        .lo()
        .iter()
        .zip(bbox.hi())
        .zip(&counts)
        .map(|((&l, &h), &n)| (h - l) / T::from_usize_lossy(n - 1))
        .collect();
    (counts, steps)
}

pub(crate) fn lattice_point<T: Real>(bbox: &AxisBox<T>, counts: &[usize], steps: &[T], mut flat: usize, out: &mut [T]) {
    for k in (0..counts.len()).rev() {
        let i = flat % counts[k];
        flat /= counts[k];
        out[k] = bbox.lo()[k] + steps[k] * T::from_usize_lossy(i);
    }
}

/// Certifies that every lattice sample `x` of `g` has a ball of `b` with
/// radius at least `delta` whose center `y` satisfies `|x - y| + delta <= r`.
pub fn check_relative_denseness<T: Real>(
    b: &BallUnion<T>,
    g: &ConvexDomain<T>,
    r: T,
    delta: T,
    sample_spacing: T,
) -> Result<DensenessCertificate<T>> {
    if !(delta > T::zero()) || delta > r {
        return Err(invalid("denseness requires 0 < delta <= R"));
    }
    if !(sample_spacing > T::zero()) {
        return Err(invalid("sample spacing must be positive"));
    }
    if sample_spacing > delta / T::lit(2.0) {
        return Err(invalid("sample spacing must not exceed delta/2"));
    }
    let bbox = g.bounding_box()?;
    let (counts, steps) = sample_lattice(&bbox, sample_spacing);
    let total: usize = counts.iter().product();
    let d = g.dim();
    let eligible: Vec<usize> = (0..b.len()).filter(|&i| b.radii()[i] >= delta).collect();

    let per_sample: Vec<Option<(T, Option<usize>)>> = (0..total)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); d],
            |x, flat| {
                lattice_point(&bbox, &counts, &steps, flat, x);
                if !g.contains_numerical(x, T::zero()) {
                    return None;
                }
                let mut best = T::neg_infinity();
                let mut who = None;
                for &i in &eligible {
                    let m = r - delta - dist(x, &b.centers()[i]);
                    if m > best {
                        best = m;
                        who = Some(i);
                    }
                }
                Some((best, who))
            },
        )
        .collect();

    let mut samples = 0;
    let mut worst: Option<(usize, T, Option<usize>)> = None;
    for (flat, entry) in per_sample.into_iter().enumerate() {
        let Some((m, who)) = entry else { continue };
        samples += 1;
        if worst.map_or(true, |(_, wm, _)| m < wm) {
            worst = Some((flat, m, who));
        }
    }
    let (flat, margin, witness) = worst.ok_or_else(|| invalid("no sample points fall inside the domain"))?;
    let mut worst_point = vec![T::zero(); d];
    lattice_point(&bbox, &counts, &steps, flat, &mut worst_point);
    Ok(DensenessCertificate {
        r,
        delta,
        verified: margin >= T::zero(),
        sample_spacing,
        samples,
        worst_point,
        margin,
        witness,
    })
}

/// Smallest covering radius certified on the sample lattice, padded by the
/// lattice half-diagonal so that it also covers points between samples.
pub fn certified_covering_radius<T: Real>(b: &BallUnion<T>, g: &ConvexDomain<T>, delta: T, sample_spacing: T) -> Result<T> {
    let probe = check_relative_denseness(b, g, delta, delta, sample_spacing)?;
    if probe.witness.is_none() {
        return Err(invalid("no ball of radius >= delta"));
    }
    // margin = -max_x min_y |x - y| at R = delta.
    let half_diag = sample_spacing * T::from_usize_lossy(g.dim()).sqrt() / T::lit(2.0);
    Ok(delta - probe.margin + half_diag)
}
