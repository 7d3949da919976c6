//! Matrix Market export/import and the grid-mask binary format.

use std::io::{BufRead, BufReader, Read, Write};

use super::grid::{GridDiscretization, NodeClass};
use super::operator::SparseSymmetricOperator;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MM_HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

/// Writes the full operator (potential folded into the diagonal) as a
/// symmetric coordinate file: lower triangle, 1-based, row-major order,
/// values in shortest round-trip exponent notation.
pub fn write_matrix_market<T: Real, W: Write>(op: &SparseSymmetricOperator<T>, mut w: W) -> Result<()> {
    let trip = op.lower_triplets();
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {} {}", op.n(), op.n(), trip.len())?;
    for (i, j, v) in trip {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v.as_f64())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market<T: Real, R: Read>(r: R) -> Result<SparseSymmetricOperator<T>> {
    let mut lines = BufReader::new(r).lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))??;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket matrix coordinate real symmetric") {
        return Err(Error::Parse(format!("unsupported header `{header}`")));
    }
    let mut size: Option<(usize, usize)> = None;
    let mut trip = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        let bad = || Error::Parse(format!("line {}: `{t}`", lineno + 2));
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(bad());
                }
                let rows: usize = fields[0].parse().map_err(|_| bad())?;
                let cols: usize = fields[1].parse().map_err(|_| bad())?;
                let nnz: usize = fields[2].parse().map_err(|_| bad())?;
                if rows != cols {
                    return Err(Error::Parse("symmetric matrix must be square".into()));
                }
                size = Some((rows, nnz));
                trip.reserve(nnz);
            }
            Some((n, _)) => {
                if fields.len() != 3 {
                    return Err(bad());
                }
                let i: usize = fields[0].parse().map_err(|_| bad())?;
                let j: usize = fields[1].parse().map_err(|_| bad())?;
                let v: f64 = fields[2].parse().map_err(|_| bad())?;
                if i == 0 || j == 0 || i > n || j > n || j > i {
                    return Err(bad());
                }
                trip.push((i - 1, j - 1, T::lit(v)));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| Error::Parse("missing size line".into()))?;
    if trip.len() != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {}", trip.len())));
    }
    SparseSymmetricOperator::from_lower_triplets(n, &trip)
}

const MASK_MAGIC: &str = "UCPMASK 1";

/// Text header followed by one byte per node (codes 0 outside, 1 interior,
/// 2 neumann boundary, 3 dirichlet removed), row-major, last axis fastest:
///
/// ```text
/// UCPMASK 1
/// dim 3
/// shape 5 5 5
/// h 5e-1
/// origin -5e-1 -5e-1 -5e-1
/// end
/// ```
pub fn write_mask<T: Real, W: Write>(grid: &GridDiscretization<T>, mut w: W) -> Result<()> {
    let join = |v: Vec<String>| v.join(" ");
    writeln!(w, "{MASK_MAGIC}")?;
    writeln!(w, "dim {}", grid.dim)?;
    writeln!(w, "shape {}", join(grid.shape.iter().map(|s| s.to_string()).collect()))?;
    writeln!(w, "h {:e}", grid.h.as_f64())?;
    writeln!(w, "origin {}", join(grid.origin.iter().map(|o| format!("{:e}", o.as_f64())).collect()))?;
    writeln!(w, "end")?;
    let bytes: Vec<u8> = grid.mask.iter().map(|c| c.code()).collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

pub fn read_mask<T: Real, R: Read>(r: R) -> Result<GridDiscretization<T>> {
    let mut reader = BufReader::new(r);
    let next_line = |reader: &mut BufReader<R>| -> Result<String> {
        let mut s = String::new();
        if reader.read_line(&mut s)? == 0 {
            return Err(Error::Parse("truncated mask header".into()));
        }
        Ok(s.trim_end_matches('\n').to_string())
    };
    if next_line(&mut reader)? != MASK_MAGIC {
        return Err(Error::Parse("not a mask file".into()));
    }
    let field = |line: String, key: &str| -> Result<Vec<String>> {
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse(format!("expected `{key}` line, got `{line}`")));
        }
        Ok(parts.map(str::to_string).collect())
    };
    let perr = |what: &str| Error::Parse(format!("bad {what} in mask header"));
    let dim: usize = field(next_line(&mut reader)?, "dim")?
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr("dim"))?;
    let shape: Vec<usize> = field(next_line(&mut reader)?, "shape")?
        .iter()
        .map(|v| v.parse().map_err(|_| perr("shape")))
        .collect::<Result<_>>()?;
    let h: f64 = field(next_line(&mut reader)?, "h")?
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| perr("h"))?;
    let origin: Vec<T> = field(next_line(&mut reader)?, "origin")?
        .iter()
        .map(|v| v.parse::<f64>().map(T::lit).map_err(|_| perr("origin")))
        .collect::<Result<_>>()?;
    if next_line(&mut reader)? != "end" || shape.len() != dim || origin.len() != dim {
        return Err(perr("layout"));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != shape.iter().product::<usize>() {
        return Err(Error::Parse(format!("mask body has {} bytes, expected {}", bytes.len(), shape.iter().product::<usize>())));
    }
    let mask = bytes.into_iter().map(NodeClass::from_code).collect::<Result<Vec<_>>>()?;
    GridDiscretization::from_mask(T::lit(h), origin, shape, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble_laplacian, classify_grid};
    use crate::geometry::{BallUnion, ConvexDomain};

    #[test]
    fn two_dof_file() {
        let op = SparseSymmetricOperator::from_dense(&[2.0, -1.0, -1.0, 2.0], 2).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&op, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, format!("{MM_HEADER}\n2 2 3\n1 1 2e0\n2 1 -1e0\n2 2 2e0\n"));
        assert_eq!(read_matrix_market::<f64, _>(&buf[..]).unwrap(), op);
    }

    #[test]
    fn grid_operator_round_trip_bit_exact() {
        let g = ConvexDomain::new_box(vec![0.0; 3], vec![1.0; 3]).unwrap();
        let s = BallUnion::uniform(3, vec![vec![0.5; 3]], 0.15).unwrap();
        let grid = classify_grid(&g, &s, 1.0 / 19.0, None).unwrap();
        let b = s.fattened(0.1).unwrap();
        let op = assemble_laplacian(&grid, 7.3, &b).unwrap();
        let mut buf = Vec::new();
        write_matrix_market(&op, &mut buf).unwrap();
        let back: SparseSymmetricOperator<f64> = read_matrix_market(&buf[..]).unwrap();
        assert_eq!(back.to_dense(), op.to_dense());

        let mut mbuf = Vec::new();
        write_mask(&grid, &mut mbuf).unwrap();
        let g2: GridDiscretization<f64> = read_mask(&mbuf[..]).unwrap();
        assert_eq!(g2.mask, grid.mask);
        assert_eq!(g2.origin, grid.origin);
        assert_eq!(g2.h, grid.h);
        assert_eq!(g2.dof_nodes, grid.dof_nodes);
    }

    #[test]
    fn malformed_inputs() {
        assert!(read_matrix_market::<f64, _>(&b"%%MatrixMarket matrix array real general\n"[..]).is_err());
        assert!(read_matrix_market::<f64, _>(&b"%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n"[..]).is_err());
        assert!(read_matrix_market::<f64, _>(&b"%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.0\n"[..]).is_err());
        assert!(read_mask::<f64, _>(&b"UCPMASK 1\ndim 3\n"[..]).is_err());
    }
}
