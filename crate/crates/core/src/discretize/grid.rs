use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::geometry::{AxisBox, BallUnion, ConvexDomain};
use crate::scalar::Real;

/// Node classification, with the byte codes used by the mask file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[repr(u8)]
pub enum NodeClass {
    Outside = 0,
    Interior = 1,
    NeumannBoundary = 2,
    DirichletRemoved = 3,
}

impl NodeClass {
    pub fn is_active(self) -> bool {
        matches!(self, NodeClass::Interior | NodeClass::NeumannBoundary)
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => NodeClass::Outside,
            1 => NodeClass::Interior,
            2 => NodeClass::NeumannBoundary,
            3 => NodeClass::DirichletRemoved,
            _ => return Err(Error::Parse(format!("invalid node code {c}"))),
        })
    }
}

pub(crate) const NO_DOF: usize = usize::MAX;

/// Uniform grid over the (truncated) closure of `G` with every node classified.
/// Nodes are numbered row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDiscretization<T> {
    pub dim: usize,
    pub h: T,
    pub origin: Vec<T>,
    pub shape: Vec<usize>,
    pub mask: Vec<NodeClass>,
    /// Node -> dof, `usize::MAX` for inactive nodes.
    pub dof_index: Vec<usize>,
    /// Dof -> node.
    pub dof_nodes: Vec<usize>,
    /// Largest `h / r` over the obstacle balls, if any.
    pub h_over_rho: Option<T>,
}

impl<T: Real> GridDiscretization<T> {
    /// Rebuilds the dof numbering from a classification mask.
    pub fn from_mask(h: T, origin: Vec<T>, shape: Vec<usize>, mask: Vec<NodeClass>) -> Result<Self> {
        let dim = shape.len();
        if origin.len() != dim || mask.len() != shape.iter().product::<usize>() {
            return Err(invalid("mask dimensions disagree"));
        }
        if !(h > T::zero()) {
            return Err(invalid("grid spacing must be positive"));
        }
        let mut dof_index = vec![NO_DOF; mask.len()];
        let mut dof_nodes = Vec::new();
        for (node, c) in mask.iter().enumerate() {
            if c.is_active() {
                dof_index[node] = dof_nodes.len();
                dof_nodes.push(node);
            }
        }
        if dof_nodes.is_empty() {
            return Err(Error::EmptyInterior);
        }
        Ok(Self { dim, h, origin, shape, mask, dof_index, dof_nodes, h_over_rho: None })
    }

    pub fn n_nodes(&self) -> usize {
        self.mask.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_nodes.len()
    }

    pub fn count(&self, class: NodeClass) -> usize {
        self.mask.iter().filter(|&&c| c == class).count()
    }

    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim];
        for a in (0..self.dim.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }

    pub fn multi_index(&self, mut node: usize, out: &mut [usize]) {
        for a in (0..self.dim).rev() {
            out[a] = node % self.shape[a];
            node /= self.shape[a];
        }
    }

    pub fn node_coords(&self, node: usize, out: &mut [T]) {
        let mut idx = node;
        for a in (0..self.dim).rev() {
            let i = idx % self.shape[a];
            idx /= self.shape[a];
            out[a] = self.origin[a] + self.h * T::from_usize_lossy(i);
        }
    }

    pub fn dof_coords(&self, dof: usize) -> Vec<T> {
        let mut x = vec![T::zero(); self.dim];
        self.node_coords(self.dof_nodes[dof], &mut x);
        x
    }

    /// Per-dof indicator of membership in `b` (closed balls).
    pub fn indicator(&self, b: &BallUnion<T>) -> Vec<bool> {
        let tol = self.h * T::lit(1e-9);
        (0..self.n_dofs())
            .into_par_iter()
            .map_init(
                || vec![T::zero(); self.dim],
                |x, dof| {
                    self.node_coords(self.dof_nodes[dof], x);
                    b.contains_tol(x, tol)
                },
            )
            .collect()
    }

    /// Position of every dof of `self` in the dof numbering of `host`, for
    /// grids sharing origin, spacing and shape.
    pub fn embedding_into(&self, host: &Self) -> Result<Vec<usize>> {
        if self.shape != host.shape || self.origin != host.origin || self.h != host.h {
            return Err(invalid("grids are not aligned"));
        }
        self.dof_nodes
            .iter()
            .map(|&node| {
                let j = host.dof_index[node];
                if j == NO_DOF {
                    Err(invalid("dof of the embedded grid is inactive on the host grid"))
                } else {
                    Ok(j)
                }
            })
            .collect()
    }

    /// Volume fraction of `b` among active dofs.
    pub fn fraction_in(&self, b: &BallUnion<T>) -> T {
        let hits = self.indicator(b).iter().filter(|&&v| v).count();
        T::from_usize_lossy(hits) / T::from_usize_lossy(self.n_dofs())
    }
}

/// Classifies the nodes of a uniform grid of spacing `h` covering `G` (or
/// `truncation`, for whole space) with one layer of outside margin.
pub fn classify_grid<T: Real>(
    g: &ConvexDomain<T>,
    s: &BallUnion<T>,
    h: T,
    truncation: Option<&AxisBox<T>>,
) -> Result<GridDiscretization<T>> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(invalid("grid spacing must be positive"));
    }
    let dim = g.dim();
    if !s.is_empty() && s.dim() != dim {
        return Err(invalid("obstacle dimension differs from the domain"));
    }
    let bbox = match (g.is_whole_space(), truncation) {
        (true, Some(t)) => t.clone(),
        _ => g.bounding_box()?,
    };
    let cover = |x: &[T]| {
        let tol = h * T::lit(1e-9);
        if g.is_whole_space() {
            bbox.contains_tol(x, tol)
        } else {
            g.contains_tol(x, tol)
        }
    };
    let origin: Vec<T> = bbox.lo().iter().map(|&l| l - h).collect();
    let shape: Vec<usize> = bbox
        .lo()
        .iter()
        .zip(bbox.hi())
        .map(|(&l, &u)| {
            let cells = ((u - l) / h - T::lit(1e-9)).ceil().to_usize().unwrap_or(0);
            cells + 3
        })
        .collect();
    let n_nodes: usize = shape.iter().product();
    let mut grid = GridDiscretization {
        dim,
        h,
        origin,
        shape,
        mask: vec![NodeClass::Outside; n_nodes],
        dof_index: Vec::new(),
        dof_nodes: Vec::new(),
        h_over_rho: None,
    };
    let tol = h * T::lit(1e-9);
    let first: Vec<NodeClass> = (0..n_nodes)
        .into_par_iter()
        .map_init(
            || vec![T::zero(); dim],
            |x, node| {
                grid.node_coords(node, x);
                if !cover(x) {
                    NodeClass::Outside
                } else if s.contains_tol(x, tol) {
                    NodeClass::DirichletRemoved
                } else {
                    NodeClass::Interior
                }
            },
        )
        .collect();
    let strides = grid.strides();
    let shape = grid.shape.clone();
    let mask: Vec<NodeClass> = (0..n_nodes)
        .into_par_iter()
        .map_init(
            || vec![0usize; dim],
            |idx, node| {
                if first[node] != NodeClass::Interior {
                    return first[node];
                }
                grid.multi_index(node, idx);
                for a in 0..dim {
                    let below = idx[a] == 0 || first[node - strides[a]] == NodeClass::Outside;
                    let above = idx[a] + 1 == shape[a] || first[node + strides[a]] == NodeClass::Outside;
                    if below || above {
                        return NodeClass::NeumannBoundary;
                    }
                }
                NodeClass::Interior
            },
        )
        .collect();
    grid.mask = mask;
    check_resolution(&grid, s)?;
    let rebuilt = GridDiscretization::from_mask(grid.h, grid.origin, grid.shape, grid.mask)?;
    let h_over_rho = s.min_radius().map(|r| h / r);
    Ok(GridDiscretization { h_over_rho, ..rebuilt })
}

/// Every ball must contain at least one grid node, otherwise it is invisible.
pub(crate) fn check_resolution<T: Real>(grid: &GridDiscretization<T>, b: &BallUnion<T>) -> Result<()> {
    let h = grid.h;
    let tol = h * T::lit(1e-9);
    for (i, (c, r)) in b.iter().enumerate() {
        // Scan the nodes of the ball's bounding box.
        let lo: Vec<i64> = (0..grid.dim)
            .map(|a| ((c[a] - r - grid.origin[a]) / h).floor().to_i64().unwrap_or(0).max(0))
            .collect();
        let hi: Vec<i64> = (0..grid.dim)
            .map(|a| {
                ((c[a] + r - grid.origin[a]) / h)
                    .ceil()
                    .to_i64()
                    .unwrap_or(0)
                    .min(grid.shape[a] as i64 - 1)
            })
            .collect();
        let mut found = false;
        if lo.iter().zip(&hi).all(|(l, u)| l <= u) {
            let mut idx = lo.clone();
            let mut x = vec![T::zero(); grid.dim];
            'scan: loop {
                for a in 0..grid.dim {
                    x[a] = grid.origin[a] + h * T::lit(idx[a] as f64);
                }
                if crate::scalar::dist(&x, c) <= r + tol {
                    found = true;
                    break 'scan;
                }
                let mut a = grid.dim;
                loop {
                    if a == 0 {
                        break 'scan;
                    }
                    a -= 1;
                    idx[a] += 1;
                    if idx[a] <= hi[a] {
                        break;
                    }
                    idx[a] = lo[a];
                }
            }
        }
        if !found {
            return Err(Error::UnresolvedObstacle { index: i, radius: r.as_f64(), h: h.as_f64() });
        }
    }
    Ok(())
}
