use super::balls::BallUnion;
use super::domain::{AxisBox, ConvexDomain};
use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Union of lattice cells `k + (0, ell)^d` carrying one obstacle ball each.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPool<T> {
    pub dim: usize,
    pub ell: T,
    pub rho: T,
    pub cells: Vec<Vec<i64>>,
    pub obstacles: BallUnion<T>,
    /// Covering radius guaranteed by construction, `sqrt(d) * ell`.
    pub denseness_r: T,
    /// Thickness guaranteed by construction, `rho`.
    pub denseness_delta: T,
}

impl<T: Real> BallPool<T> {
    pub fn contains(&self, x: &[T]) -> bool {
        self.cells.iter().any(|k| {
            k.iter().zip(x).all(|(&ki, &xi)| {
                let lo = T::lit(ki as f64) * self.ell;
                xi >= lo && xi <= lo + self.ell
            })
        })
    }

    /// The region as a box, when the cells fill a rectangular block exactly.
    pub fn as_box(&self) -> Option<AxisBox<T>> {
        let d = self.dim;
        let mut lo = vec![i64::MAX; d];
        let mut hi = vec![i64::MIN; d];
        for k in &self.cells {
            for a in 0..d {
                lo[a] = lo[a].min(k[a]);
                hi[a] = hi[a].max(k[a]);
            }
        }
        let block: i64 = lo.iter().zip(&hi).map(|(l, h)| h - l + 1).product();
        let mut distinct = self.cells.clone();
        distinct.sort();
        distinct.dedup();
        if block != distinct.len() as i64 {
            return None;
        }
        let lo_x = lo.iter().map(|&l| T::lit(l as f64) * self.ell).collect();
        let hi_x = hi.iter().map(|&h| T::lit((h + 1) as f64) * self.ell).collect();
        AxisBox::new(lo_x, hi_x).ok()
    }

    pub fn domain(&self) -> Result<ConvexDomain<T>> {
        let b = self.as_box().ok_or_else(|| invalid("ball pool cells do not form a box"))?;
        ConvexDomain::from_box(b)
    }
}

/// Ball pool with one ball `B_rho(k*ell + offset_k)` per cell `k`.
/// Each offset is measured from the cell's lower corner.
pub fn make_ball_pool<T: Real>(gamma: &[Vec<i64>], ell: T, rho: T, offsets: &[Vec<T>]) -> Result<BallPool<T>> {
    if gamma.is_empty() {
        return Err(invalid("ball pool needs at least one cell"));
    }
    if gamma.len() != offsets.len() {
        return Err(invalid("one offset per cell is required"));
    }
    if !(rho > T::zero()) || !(rho < ell / T::lit(2.0)) {
        return Err(invalid("ball pool requires 0 < rho < ell/2"));
    }
    let d = gamma[0].len();
    if d < 3 {
        return Err(invalid("dimension must be at least 3"));
    }
    let mut centers = Vec::with_capacity(gamma.len());
    for (i, (k, off)) in gamma.iter().zip(offsets).enumerate() {
        if k.len() != d || off.len() != d {
            return Err(invalid("cell index and offset dimensions disagree"));
        }
        if off.iter().any(|&o| !(o > rho && o < ell - rho)) {
            return Err(invalid(format!("ball {i} is not strictly inside its cell")));
        }
        centers.push(k.iter().zip(off).map(|(&ki, &o)| T::lit(ki as f64) * ell + o).collect());
    }
    Ok(BallPool {
        dim: d,
        ell,
        rho,
        cells: gamma.to_vec(),
        obstacles: BallUnion::uniform(d, centers, rho)?,
        denseness_r: T::from_usize_lossy(d).sqrt() * ell,
        denseness_delta: rho,
    })
}

/// All cells of an `n^d` block starting at the origin, with centered balls.
pub fn centered_ball_pool<T: Real>(d: usize, n: usize, ell: T, rho: T) -> Result<BallPool<T>> {
    let total = n.checked_pow(d as u32).ok_or_else(|| invalid("too many cells"))?;
    let gamma: Vec<Vec<i64>> = (0..total)
        .map(|mut flat| {
            let mut k = vec![0i64; d];
            for a in (0..d).rev() {
                k[a] = (flat % n) as i64;
                flat /= n;
            }
            k
        })
        .collect();
    let offsets = vec![vec![ell / T::lit(2.0); d]; total];
    make_ball_pool(&gamma, ell, rho, &offsets)
}

/// Radii assignment for the perforated-space example on integer centers.
#[derive(Clone, Debug, PartialEq)]
pub enum RadiusProfile<T> {
    Constant(T),
    /// `r0 * 2^(-|k|_inf)`.
    Decaying(T),
    /// Explicit radius per center, in lattice order.
    PerCenter(Vec<T>),
}

/// Whole space perforated by balls on `Z^d` inside the truncation cube of
/// the given half-width. Centers are enumerated row-major, last axis fastest.
pub fn make_appendix_example<T: Real>(
    d: usize,
    profile: &RadiusProfile<T>,
    box_half_width: T,
) -> Result<(ConvexDomain<T>, BallUnion<T>)> {
    if d < 3 {
        return Err(invalid("dimension must be at least 3"));
    }
    if !(box_half_width >= T::zero()) {
        return Err(invalid("box half-width must be nonnegative"));
    }
    let m = box_half_width.floor().to_i64().ok_or_else(|| invalid("box too large"))?;
    let side = (2 * m + 1) as usize;
    let total = side.pow(d as u32);
    let mut centers = Vec::with_capacity(total);
    let mut sup_norms = Vec::with_capacity(total);
    for mut flat in 0..total {
        let mut k = vec![0i64; d];
        for a in (0..d).rev() {
            k[a] = (flat % side) as i64 - m;
            flat /= side;
        }
        sup_norms.push(k.iter().map(|v| v.abs()).max().unwrap_or(0));
        centers.push(k.iter().map(|&v| T::lit(v as f64)).collect::<Vec<T>>());
    }
    let radii: Vec<T> = match profile {
        RadiusProfile::Constant(r) => vec![*r; total],
        RadiusProfile::Decaying(r0) => sup_norms.iter().map(|&s| *r0 * T::lit(2.0).powi(-(s as i32))).collect(),
        RadiusProfile::PerCenter(v) => {
            if v.len() != total {
                return Err(invalid(format!("expected {total} radii, got {}", v.len())));
            }
            v.clone()
        }
    };
    if let Some(r) = radii.iter().find(|&&r| !(r > T::zero() && r < T::lit(0.5))) {
        return Err(invalid(format!("radius {r} outside (0, 1/2)")));
    }
    let truncation = AxisBox::centered_cube(d, box_half_width + T::lit(0.5))?;
    Ok((ConvexDomain::whole_space(truncation)?, BallUnion::new(d, centers, radii)?))
}
