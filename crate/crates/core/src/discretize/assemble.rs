use rayon::prelude::*;

use super::grid::{check_resolution, GridDiscretization, NodeClass, NO_DOF};
use super::operator::SparseSymmetricOperator;
use crate::error::{invalid, Error, Result};
use crate::geometry::BallUnion;
use crate::linalg::min_eigenvalue;
use crate::scalar::Real;

/// Symmetric `d x d` coefficient matrix field, row-major.
pub trait CoefficientField<T>: Sync {
    fn sample(&self, x: &[T]) -> Vec<T>;

    /// Whether every sample is diagonal; enables skipping cross terms.
    fn is_diagonal(&self) -> bool {
        false
    }
}

/// `s * I` everywhere.
#[derive(Clone, Copy, Debug)]
pub struct ScaledIdentity<T> {
    pub dim: usize,
    pub scale: T,
}

impl<T: Real> CoefficientField<T> for ScaledIdentity<T> {
    fn sample(&self, _x: &[T]) -> Vec<T> {
        diag_matrix(self.dim, self.scale)
    }

    fn is_diagonal(&self) -> bool {
        true
    }
}

/// `low * I` on cubes `k + [0, cell)^d` with even `sum(k)`, `high * I` on the others.
#[derive(Clone, Copy, Debug)]
pub struct Checkerboard<T> {
    pub dim: usize,
    pub cell: T,
    pub low: T,
    pub high: T,
}

impl<T: Real> CoefficientField<T> for Checkerboard<T> {
    fn sample(&self, x: &[T]) -> Vec<T> {
        let parity: i64 = x.iter().map(|&v| (v / self.cell).floor().to_i64().unwrap_or(0)).sum();
        diag_matrix(self.dim, if parity.rem_euclid(2) == 0 { self.low } else { self.high })
    }

    fn is_diagonal(&self) -> bool {
        true
    }
}

/// General field given by a closure.
pub struct FnCoefficient<F> {
    pub f: F,
    pub diagonal: bool,
}

impl<T: Real, F: Fn(&[T]) -> Vec<T> + Sync> CoefficientField<T> for FnCoefficient<F> {
    fn sample(&self, x: &[T]) -> Vec<T> {
        (self.f)(x)
    }

    fn is_diagonal(&self) -> bool {
        self.diagonal
    }
}

fn diag_matrix<T: Real>(d: usize, s: T) -> Vec<T> {
    let mut m = vec![T::zero(); d * d];
    for i in 0..d {
        m[i * d + i] = s;
    }
    m
}

fn potential<T: Real>(grid: &GridDiscretization<T>, beta: T, b: &BallUnion<T>) -> Result<Option<Vec<T>>> {
    if !(beta >= T::zero()) || !beta.is_finite() {
        return Err(invalid("coupling beta must be finite and nonnegative"));
    }
    if beta == T::zero() || b.is_empty() {
        return Ok(None);
    }
    check_resolution(grid, b)?;
    Ok(Some(grid.indicator(b).into_iter().map(|inb| if inb { beta } else { T::zero() }).collect()))
}

/// `1/2` times the graph Laplacian of the active-node lattice with edge
/// weight `1/h^2`, plus `beta` on dofs inside `b`. Edges to removed nodes
/// contribute to the diagonal only (Dirichlet on `S`); edges to outside
/// nodes are dropped (Neumann on the boundary of `G`).
pub fn assemble_laplacian<T: Real>(grid: &GridDiscretization<T>, beta: T, b: &BallUnion<T>) -> Result<SparseSymmetricOperator<T>> {
    let rows = edge_rows(grid, None::<&ScaledIdentity<T>>, T::one())?;
    SparseSymmetricOperator::from_rows(rows, potential(grid, beta, b)?)
}

/// Face-flux discretization of `-1/2 div(a grad)`: axis-`k` edges carry
/// `a_kk` sampled at the edge midpoint, off-diagonal entries of `a` enter
/// through cell-averaged difference quotients with `a` sampled at cell centers.
pub fn assemble_divergence_form<T: Real, C: CoefficientField<T> + ?Sized>(
    grid: &GridDiscretization<T>,
    a: &C,
    eta0: T,
    beta: T,
    b: &BallUnion<T>,
) -> Result<SparseSymmetricOperator<T>> {
    if !(eta0 > T::zero()) {
        return Err(invalid("eta0 must be positive"));
    }
    let mut rows = edge_rows(grid, Some(a), eta0)?;
    if !a.is_diagonal() {
        add_cross_terms(grid, a, eta0, &mut rows)?;
    }
    SparseSymmetricOperator::from_rows(rows, potential(grid, beta, b)?)
}

fn check_sample<T: Real>(m: &[T], d: usize, x: &[T], eta0: T) -> Result<()> {
    if m.len() != d * d {
        return Err(invalid("coefficient sample has the wrong size"));
    }
    for i in 0..d {
        for j in 0..i {
            let scale = m[i * d + j].abs().max(m[j * d + i].abs()).max(T::one());
            if (m[i * d + j] - m[j * d + i]).abs() > T::lit(1e-12) * scale {
                return Err(invalid(format!("coefficient at {:?} is not symmetric", x.iter().map(|v| v.as_f64()).collect::<Vec<_>>())));
            }
        }
    }
    let min_eig = min_eigenvalue(m, d)?;
    if min_eig < eta0 * (T::one() - T::lit(1e-12)) {
        return Err(Error::EllipticityViolation {
            location: x.iter().map(|v| v.as_f64()).collect(),
            min_eig: min_eig.as_f64(),
            eta0: eta0.as_f64(),
        });
    }
    Ok(())
}

fn edge_rows<T: Real, C: CoefficientField<T> + ?Sized>(
    grid: &GridDiscretization<T>,
    a: Option<&C>,
    eta0: T,
) -> Result<Vec<Vec<(usize, T)>>> {
    let d = grid.dim;
    let strides = grid.strides();
    let c = T::lit(0.5) / (grid.h * grid.h);
    let half_h = grid.h / T::lit(2.0);
    (0..grid.n_dofs())
        .into_par_iter()
        .map(|dof| {
            let node = grid.dof_nodes[dof];
            let mut idx = vec![0usize; d];
            grid.multi_index(node, &mut idx);
            let mut x = vec![T::zero(); d];
            let mut row = Vec::with_capacity(2 * d + 1);
            let mut diag = T::zero();
            for k in 0..d {
                for up in [false, true] {
                    let q = if up {
                        if idx[k] + 1 >= grid.shape[k] {
                            continue;
                        }
                        node + strides[k]
                    } else {
                        if idx[k] == 0 {
                            continue;
                        }
                        node - strides[k]
                    };
                    let class = grid.mask[q];
                    if class == NodeClass::Outside {
                        continue;
                    }
                    let w = match a {
                        None => T::one(),
                        Some(field) => {
                            grid.node_coords(node.min(q), &mut x);
                            x[k] += half_h;
                            let m = field.sample(&x);
                            check_sample(&m, d, &x, eta0)?;
                            m[k * d + k]
                        }
                    };
                    let v = w * c;
                    diag += v;
                    if class != NodeClass::DirichletRemoved {
                        row.push((grid.dof_index[q], -v));
                    }
                }
            }
            row.push((dof, diag));
            Ok(row)
        })
        .collect()
}

fn add_cross_terms<T: Real, C: CoefficientField<T> + ?Sized>(
    grid: &GridDiscretization<T>,
    a: &C,
    eta0: T,
    rows: &mut [Vec<(usize, T)>],
) -> Result<()> {
    let d = grid.dim;
    let strides = grid.strides();
    let corners = 1usize << d;
    let g = T::one() / (T::from_usize_lossy(corners / 2) * grid.h);
    let half = T::lit(0.5);
    let sign = |bits: usize, k: usize| if bits >> (d - 1 - k) & 1 == 1 { g } else { -g };
    rows.par_iter_mut().enumerate().try_for_each(|(dof, row)| -> Result<()> {
        let node = grid.dof_nodes[dof];
        let mut idx = vec![0usize; d];
        grid.multi_index(node, &mut idx);
        // Cells containing this node, by ascending base node.
        let mut cells: Vec<(usize, usize)> = Vec::with_capacity(corners);
        'mask: for own in 0..corners {
            let mut base = node;
            for k in 0..d {
                let bit = own >> (d - 1 - k) & 1;
                if idx[k] < bit || idx[k] - bit + 1 >= grid.shape[k] {
                    continue 'mask;
                }
                base -= bit * strides[k];
            }
            cells.push((base, own));
        }
        cells.sort_unstable();
        let mut x = vec![T::zero(); d];
        for (base, own) in cells {
            let corner_node = |bits: usize| (0..d).map(|k| (bits >> (d - 1 - k) & 1) * strides[k]).sum::<usize>() + base;
            if (0..corners).any(|bits| grid.mask[corner_node(bits)] == NodeClass::Outside) {
                continue;
            }
            grid.node_coords(base, &mut x);
            x.iter_mut().for_each(|v| *v += grid.h / T::lit(2.0));
            let m = a.sample(&x);
            check_sample(&m, d, &x, eta0)?;
            for k in 0..d {
                for l in k + 1..d {
                    let akl = m[k * d + l];
                    if akl == T::zero() {
                        continue;
                    }
                    for bits in 0..corners {
                        let q = corner_node(bits);
                        let j = grid.dof_index[q];
                        if j == NO_DOF {
                            continue;
                        }
                        let v = half * akl * (sign(own, k) * sign(bits, l) + sign(own, l) * sign(bits, k));
                        row.push((j, v));
                    }
                }
            }
        }
        Ok(())
    })
}
