use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::domain::{AxisBox, ConvexDomain};
use crate::error::{invalid, Error, Result};
use crate::scalar::{dist2, Real};

/// Finite union of closed balls, used both as the obstacle set `S` and as
/// its fattening `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallUnion<T> {
    dim: usize,
    centers: Vec<Vec<T>>,
    radii: Vec<T>,
}

impl<T: Real> BallUnion<T> {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            centers: Vec::new(),
            radii: Vec::new(),
        }
    }

    pub fn new(dim: usize, centers: Vec<Vec<T>>, radii: Vec<T>) -> Result<Self> {
        if centers.len() != radii.len() {
            return Err(invalid(format!(
                "{} centers but {} radii",
                centers.len(),
                radii.len()
            )));
        }
        if centers.iter().any(|c| c.len() != dim || c.iter().any(|v| !v.is_finite())) {
            return Err(invalid(format!("every center must be a finite point of R^{dim}")));
        }
        if radii.iter().any(|&r| !(r > T::zero()) || !r.is_finite()) {
            return Err(invalid("ball radii must be positive and finite"));
        }
        Ok(Self { dim, centers, radii })
    }

    /// Balls of a common radius.
    pub fn uniform(dim: usize, centers: Vec<Vec<T>>, radius: T) -> Result<Self> {
        let radii = vec![radius; centers.len()];
        Self::new(dim, centers, radii)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Vec<T>] {
        &self.centers
    }

    pub fn radii(&self) -> &[T] {
        &self.radii
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> {
        self.centers.iter().map(Vec::as_slice).zip(self.radii.iter().copied())
    }

    pub fn push(&mut self, center: Vec<T>, radius: T) -> Result<()> {
        if center.len() != self.dim || !(radius > T::zero()) {
            return Err(invalid("ball must match the union's dimension and have positive radius"));
        }
        self.centers.push(center);
        self.radii.push(radius);
        Ok(())
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.contains_tol(x, T::zero())
    }

    pub fn contains_tol(&self, x: &[T], tol: T) -> bool {
        self.iter().any(|(c, r)| {
            let rr = r + tol;
            dist2(x, c) <= rr * rr
        })
    }

    /// Index of the first ball containing `x`.
    pub fn locate(&self, x: &[T]) -> Option<usize> {
        self.iter().position(|(c, r)| dist2(x, c) <= r * r)
    }

    /// Same centers with every radius increased by `by` (the `by`-neighborhood).
    pub fn fattened(&self, by: T) -> Result<Self> {
        Self::new(self.dim, self.centers.clone(), self.radii.iter().map(|&r| r + by).collect())
    }

    /// Same centers with every radius replaced by `radius`.
    pub fn with_radius(&self, radius: T) -> Result<Self> {
        Self::uniform(self.dim, self.centers.clone(), radius)
    }

    pub fn min_radius(&self) -> Option<T> {
        self.radii.iter().copied().reduce(T::min)
    }

    /// Checks that every center lies in the closure of `host`.
    pub fn check_within(&self, host: &ConvexDomain<T>) -> Result<()> {
        match self.centers.iter().position(|c| !host.contains(c)) {
            Some(i) => Err(invalid(format!("ball center {i} lies outside the host domain"))),
            None => Ok(()),
        }
    }

    /// CSV with header `cx,cy,cz,r` (`c0,...,c{d-1},r` outside d = 3).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(csv_header(self.dim))?;
        for (c, r) in self.iter() {
            let row: Vec<String> = c.iter().chain(std::iter::once(&r)).map(|v| format!("{:e}", v.as_f64())).collect();
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rd.headers()?.clone();
        let dim = headers.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| Error::Parse("ball CSV needs at least two columns".into()))?;
        let expected = csv_header(dim);
        if headers.iter().ne(expected.iter().map(String::as_str)) {
            return Err(Error::Parse(format!("ball CSV header must be {}", expected.join(","))));
        }
        let mut centers = Vec::new();
        let mut radii = Vec::new();
        for (line, rec) in rd.records().enumerate() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| s.parse::<f64>().map(T::lit))
                .collect::<std::result::Result<Vec<T>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", line + 1)))?;
            if vals.len() != dim + 1 {
                return Err(Error::Parse(format!("row {}: expected {} fields", line + 1, dim + 1)));
            }
            radii.push(vals[dim]);
            centers.push(vals[..dim].to_vec());
        }
        Self::new(dim, centers, radii)
    }
}

fn csv_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = if dim == 3 {
        ["cx", "cy", "cz"].iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(|i| format!("c{i}")).collect()
    };
    h.push("r".into());
    h
}

/// Scatters `count` balls of radius `radius` uniformly inside `region`,
/// keeping each ball fully inside it. Deterministic in `seed`.
pub fn scatter_balls<T: Real>(region: &AxisBox<T>, count: usize, radius: T, seed: u64) -> Result<BallUnion<T>> {
    let d = region.dim();
    if region.lo().iter().zip(region.hi()).any(|(&l, &h)| h - l <= radius + radius) {
        return Err(invalid("region too small for the requested radius"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = (0..count)
        .map(|_| {
            (0..d)
                .map(|k| {
                    let lo = region.lo()[k] + radius;
                    let hi = region.hi()[k] - radius;
                    lo + (hi - lo) * T::lit(rng.gen::<f64>())
                })
                .collect()
        })
        .collect();
    BallUnion::uniform(d, centers, radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_closed() {
        let b = BallUnion::uniform(3, vec![vec![0.0; 3]], 0.5).unwrap();
        assert!(b.contains(&[0.5, 0.0, 0.0]));
        assert!(!b.contains(&[0.5 + 1e-12, 0.0, 0.0]));
        assert_eq!(b.locate(&[0.0, 0.1, 0.0]), Some(0));
    }

    #[test]
    fn rejects_mismatched_and_nonpositive() {
        assert!(BallUnion::new(3, vec![vec![0.0; 3]], vec![]).is_err());
        assert!(BallUnion::new(3, vec![vec![0.0; 3]], vec![0.0]).is_err());
        assert!(BallUnion::new(3, vec![vec![0.0; 2]], vec![1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let b = BallUnion::new(3, vec![vec![0.1, -2.0, 3.5], vec![1.0 / 3.0, 0.0, 0.0]], vec![0.25, 1e-3]).unwrap();
        let mut buf = Vec::new();
        b.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("cx,cy,cz,r\n"));
        let back = BallUnion::<f64>::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn csv_rejects_bad_header() {
        let bad = "x,y,z,r\n0,0,0,1\n";
        assert!(BallUnion::<f64>::read_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn scatter_is_deterministic_and_inside() {
        let region = AxisBox::new(vec![0.0; 3], vec![2.0; 3]).unwrap();
        let a = scatter_balls(&region, 20, 0.1, 7).unwrap();
        let b = scatter_balls(&region, 20, 0.1, 7).unwrap();
        assert_eq!(a, b);
        for (c, r) in a.iter() {
            assert!(c.iter().all(|&v| v - r >= 0.0 && v + r <= 2.0));
        }
    }
}
