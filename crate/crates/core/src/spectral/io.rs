//! `SpectralResult` files: one JSON header line followed by the
//! eigenvectors as little-endian `f64`, vector after vector.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SpectralResult;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    n: usize,
    count: usize,
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    iterations: usize,
    converged: bool,
    tolerance: f64,
}

const FORMAT: &str = "ucp-lab-spectral-1";

pub fn write_spectral_result<T: Real>(path: &Path, r: &SpectralResult<T>) -> Result<()> {
    let n = r.eigenvectors.first().map_or(0, Vec::len);
    let header = Header {
        format: FORMAT.into(),
        n,
        count: r.eigenvectors.len(),
        eigenvalues: r.eigenvalues.iter().map(|v| v.as_f64()).collect(),
        residuals: r.residuals.iter().map(|v| v.as_f64()).collect(),
        iterations: r.iterations,
        converged: r.converged,
        tolerance: r.tolerance.as_f64(),
    };
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for v in &r.eigenvectors {
        for x in v {
            w.write_all(&x.as_f64().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_spectral_result<T: Real>(path: &Path) -> Result<SpectralResult<T>> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut line = String::new();
    r.read_line(&mut line)?;
    let h: Header = serde_json::from_str(line.trim_end())?;
    if h.format != FORMAT {
        return Err(Error::Parse(format!("unknown spectral format {:?}", h.format)));
    }
    if h.eigenvalues.len() != h.count || h.residuals.len() != h.count {
        return Err(Error::Parse("header counts disagree".into()));
    }
    let mut buf = [0u8; 8];
    let mut vectors = Vec::with_capacity(h.count);
    for _ in 0..h.count {
        let mut v = Vec::with_capacity(h.n);
        for _ in 0..h.n {
            r.read_exact(&mut buf).map_err(|_| Error::Parse("truncated eigenvector block".into()))?;
            v.push(T::lit(f64::from_le_bytes(buf)));
        }
        vectors.push(v);
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Parse("trailing bytes after eigenvector block".into()));
    }
    Ok(SpectralResult {
        eigenvalues: h.eigenvalues.into_iter().map(T::lit).collect(),
        eigenvectors: vectors,
        residuals: h.residuals.into_iter().map(T::lit).collect(),
        iterations: h.iterations,
        converged: h.converged,
        tolerance: T::lit(h.tolerance),
    })
}
