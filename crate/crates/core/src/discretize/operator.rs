use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Symmetric sparse operator `L + diag(potential)` in CSR form. Both
/// triangles of `L` are stored; `potential` is kept apart so the pure
/// Laplacian part stays inspectable.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetricOperator<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    potential: Option<Vec<T>>,
}

const ROW_CHUNK: usize = 2048;

impl<T: Real> SparseSymmetricOperator<T> {
    /// Builds from per-row `(col, value)` lists. Entries are summed per
    /// column and sorted; symmetry is checked exactly.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>, potential: Option<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last = usize::MAX;
            for (c, v) in row {
                if c >= n {
                    return Err(invalid(format!("column {c} out of range")));
                }
                if c == last {
                    *vals.last_mut().expect("nonempty") += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = c;
                }
            }
            row_ptr.push(cols.len());
        }
        if let Some(p) = &potential {
            if p.len() != n {
                return Err(invalid("potential length differs from the dof count"));
            }
        }
        let op = Self { n, row_ptr, cols, vals, potential };
        if op.max_asymmetry() != T::zero() {
            return Err(invalid("assembled matrix is not exactly symmetric"));
        }
        Ok(op)
    }

    /// Symmetric operator from a dense row-major matrix, keeping nonzeros.
    pub fn from_dense(a: &[T], n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(invalid("dense matrix size mismatch"));
        }
        let rows = (0..n)
            .map(|i| (0..n).filter(|&j| a[i * n + j] != T::zero()).map(|j| (j, a[i * n + j])).collect())
            .collect();
        Self::from_rows(rows, None)
    }

    /// Builds from lower-triangle triplets `(row, col, value)` with `row >= col`.
    pub fn from_lower_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n || j > i {
                return Err(invalid(format!("triplet ({i}, {j}) is not in the lower triangle of a {n}x{n} matrix")));
            }
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(rows, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn potential(&self) -> Option<&[T]> {
        self.potential.as_deref()
    }

    pub fn with_potential(mut self, potential: Option<Vec<T>>) -> Result<Self> {
        if let Some(p) = &potential {
            if p.len() != self.n {
                return Err(invalid("potential length differs from the dof count"));
            }
        }
        self.potential = potential;
        Ok(self)
    }

    /// `(col, value)` pairs of row `i` of the Laplacian part.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    fn laplacian_entry(&self, i: usize, j: usize) -> T {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => T::zero(),
        }
    }

    /// Entry of the full operator (potential included).
    pub fn get(&self, i: usize, j: usize) -> T {
        let lap = self.laplacian_entry(i, j);
        if i == j {
            lap + self.potential.as_ref().map_or(T::zero(), |p| p[i])
        } else {
            lap
        }
    }

    /// Largest `|A_ij - A_ji|` over stored entries.
    pub fn max_asymmetry(&self) -> T {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| (v - self.laplacian_entry(j, i)).abs()).fold(T::zero(), T::max))
            .fold(T::zero(), T::max)
    }

    fn apply_row(&self, i: usize, x: &[T]) -> T {
        let mut s = T::zero();
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            s += self.vals[k] * x[self.cols[k]];
        }
        if let Some(p) = &self.potential {
            s += p[i] * x[i];
        }
        s
    }

    /// `y = A x`, parallel over row blocks.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n <= ROW_CHUNK {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.apply_row(i, x);
            }
            return;
        }
        y.par_chunks_mut(ROW_CHUNK).enumerate().for_each(|(c, yc)| {
            let base = c * ROW_CHUNK;
            for (k, yi) in yc.iter_mut().enumerate() {
                *yi = self.apply_row(base + k, x);
            }
        });
    }

    pub fn apply_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.apply(x, &mut y);
        y
    }

    /// Row sums of the Laplacian part alone.
    pub fn laplacian_row_sums(&self) -> Vec<T> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// Gershgorin upper bound on the spectrum (also the 1-norm for a
    /// symmetric operator with nonnegative potential).
    pub fn gershgorin_bound(&self) -> T {
        (0..self.n)
            .map(|i| {
                let p = self.potential.as_ref().map_or(T::zero(), |p| p[i]);
                let mut diag = p;
                let mut off = T::zero();
                for (j, v) in self.row(i) {
                    if j == i {
                        diag += v;
                    } else {
                        off += v.abs();
                    }
                }
                diag + off
            })
            .fold(T::zero(), T::max)
    }

    pub fn norm_one(&self) -> T {
        (0..self.n)
            .map(|i| {
                let p = self.potential.as_ref().map_or(T::zero(), |p| p[i]);
                self.row(i).map(|(j, v)| if j == i { (v + p).abs() } else { v.abs() }).sum::<T>()
                    + if self.row(i).any(|(j, _)| j == i) { T::zero() } else { p.abs() }
            })
            .fold(T::zero(), T::max)
    }

    /// Dense row-major copy of the full operator.
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.n;
        let mut a = vec![T::zero(); n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                a[i * n + j] += v;
            }
            if let Some(p) = &self.potential {
                a[i * n + i] += p[i];
            }
        }
        a
    }

    /// Lower-triangle triplets of the full operator, row-major.
    pub fn lower_triplets(&self) -> Vec<(usize, usize, T)> {
        let mut out = Vec::with_capacity(self.nnz() / 2 + self.n);
        for i in 0..self.n {
            let mut wrote_diag = false;
            for (j, v) in self.row(i) {
                if j < i {
                    out.push((i, j, v));
                } else if j == i {
                    let p = self.potential.as_ref().map_or(T::zero(), |p| p[i]);
                    out.push((i, i, v + p));
                    wrote_diag = true;
                }
            }
            if !wrote_diag {
                if let Some(p) = &self.potential {
                    if p[i] != T::zero() {
                        out.push((i, i, p[i]));
                    }
                }
            }
        }
        out
    }

    /// Principal submatrix on the (sorted, distinct) index set `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Result<Self> {
        let mut pos = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.n || pos[old] != usize::MAX {
                return Err(invalid("invalid index set"));
            }
            pos[old] = new;
        }
        let rows = keep
            .iter()
            .map(|&i| self.row(i).filter(|&(j, _)| pos[j] != usize::MAX).map(|(j, v)| (pos[j], v)).collect())
            .collect();
        let potential = self.potential.as_ref().map(|p| keep.iter().map(|&i| p[i]).collect());
        Self::from_rows(rows, potential)
    }

    /// `s * A`.
    pub fn scaled(&self, s: T) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        if let Some(p) = &mut out.potential {
            p.iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    /// `A - B` for operators of equal size (potentials folded into the diagonal).
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(invalid("operator sizes differ"));
        }
        let rows = (0..self.n)
            .map(|i| {
                let mut r: Vec<(usize, T)> = self.row(i).collect();
                r.extend(other.row(i).map(|(j, v)| (j, -v)));
                let p = self.potential.as_ref().map_or(T::zero(), |p| p[i]) - other.potential.as_ref().map_or(T::zero(), |p| p[i]);
                if p != T::zero() {
                    r.push((i, p));
                }
                r
            })
            .collect();
        Self::from_rows(rows, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_asymmetric() {
        let rows = vec![vec![(0, 1.0), (1, 2.0)], vec![(0, 3.0), (1, 1.0)]];
        assert!(SparseSymmetricOperator::from_rows(rows, None).is_err());
    }

    #[test]
    fn dense_round_trip_and_apply() {
        let a = vec![2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let op = SparseSymmetricOperator::from_dense(&a, 3).unwrap();
        assert_eq!(op.nnz(), 7);
        assert_eq!(op.to_dense(), a);
        assert_eq!(op.apply_vec(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 1.0]);
        assert_eq!(op.gershgorin_bound(), 4.0);
        let op = op.with_potential(Some(vec![1.0, 0.0, 0.0])).unwrap();
        assert_eq!(op.get(0, 0), 3.0);
        assert_eq!(op.lower_triplets(), vec![(0, 0, 3.0), (1, 0, -1.0), (1, 1, 2.0), (2, 1, -1.0), (2, 2, 2.0)]);
        let sub = op.principal_submatrix(&[0, 2]).unwrap();
        assert_eq!(sub.to_dense(), vec![3.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn large_apply_matches_serial() {
        let n = 10_000;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0 + (i % 7) as f64)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        let op = SparseSymmetricOperator::from_rows(rows, None).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let y = op.apply_vec(&x);
        for i in [0, 1, 5000, n - 1] {
            let mut want = (2.0 + (i % 7) as f64) * x[i];
            if i > 0 {
                want -= x[i - 1];
            }
            if i + 1 < n {
                want -= x[i + 1];
            }
            assert!((y[i] - want).abs() < 1e-12);
        }
    }
}
