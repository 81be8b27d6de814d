//! Finite point sets in ℝ^d and their CSV representation.
//!
//! CSV files carry a header `x_1,...,x_d` optionally followed by a `weight`
//! column. Reals are written with Rust's shortest round-trip formatting so a
//! file re-read yields bit-identical coordinates.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(crate::error::out_of_range("dimension", "must be at least 1"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Parse(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parse("non-finite coordinate".into()));
        }
        Ok(Self { dim, coords })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim: dim.max(1),
            coords: Vec::new(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).ok_or(Error::Empty("point list"))?;
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            coords.extend_from_slice(r);
        }
        Self::new(dim, coords)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn extend(&mut self, other: &PointSet) -> Result<()> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        self.coords.extend_from_slice(&other.coords);
        Ok(())
    }

    /// Applies `f` to every point.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<PointSet> {
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.iter() {
            coords.extend(f(p));
        }
        PointSet::new(self.dim, coords)
    }

    /// Points in the given index order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointSet {
            dim: self.dim,
            coords,
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W, weights: Option<&[f64]>) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x_{i}")).collect();
        if weights.is_some() {
            header.push("weight".into());
        }
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(self.dim + 1);
        for (i, p) in self.iter().enumerate() {
            row.clear();
            row.extend(p.iter().map(|c| c.to_string()));
            if let Some(ws) = weights {
                row.push(ws[i].to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `x_1..x_d[,weight]`. Returns the points and the weight column if present.
    pub fn read_csv<R: Read>(reader: R) -> Result<(PointSet, Option<Vec<f64>>)> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = r.headers()?.clone();
        let mut dim = 0;
        let mut weight_col = None;
        for (i, h) in headers.iter().enumerate() {
            if h == "weight" {
                weight_col = Some(i);
            } else if h == format!("x_{}", dim + 1) {
                dim += 1;
            } else {
                return Err(Error::Parse(format!("unexpected column `{h}`")));
            }
        }
        if dim == 0 {
            return Err(Error::Parse("no coordinate columns".into()));
        }
        let mut coords = Vec::new();
        let mut weights = weight_col.map(|_| Vec::new());
        for rec in r.records() {
            let rec = rec?;
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number `{field}`")))?;
                if Some(i) == weight_col {
                    weights.as_mut().unwrap().push(v);
                } else {
                    coords.push(v);
                }
            }
        }
        Ok((PointSet::new(dim, coords)?, weights))
    }
}

#[inline]
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s.sqrt()
}

/// Shell membership `| dist - t | <= delta`, the single predicate shared by
/// kernels, neighbor queries and brute-force oracles.
#[inline]
pub fn in_shell(dist: f64, t: f64, delta: f64) -> bool {
    (dist - t).abs() <= delta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let pts = PointSet::from_rows(&[[0.1, 1.0 / 3.0], [2.5e-17, -7.0]]).unwrap();
        let ws = [0.25, 0.75];
        let mut buf = Vec::new();
        pts.write_csv(&mut buf, Some(&ws)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_1,x_2,weight\n"));
        let (back, w) = PointSet::read_csv(&buf[..]).unwrap();
        assert_eq!(back, pts);
        assert_eq!(w.unwrap(), ws);
    }

    #[test]
    fn rejects_unknown_columns() {
        let text = "x_1,y\n1,2\n";
        assert!(PointSet::read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![1.0]];
        assert!(PointSet::from_rows(&rows).is_err());
    }
}
