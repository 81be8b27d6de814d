//! Discrete probability measures and product Cantor constructions.
//!
//! An [`IfsSpec`] describes the same one-dimensional iterated function system
//! on every axis: `m` maps `x -> r x + b_k` with `b_k = k (1 - r) / (m - 1)`.
//! The product over `d` axes has similarity dimension `d log m / log(1/r)`.
//! [`IfsSpec::atoms`] replaces the invariant measure by one atom per
//! depth-level cylinder, placed at the cylinder center.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::kernel::SpatialGrid;
use crate::points::{distance, PointSet};
use crate::sum::{compensated_sum, Accumulator};

pub const ATOM_BUDGET: u64 = 10_000_000;
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    points: PointSet,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: PointSet, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        if weights.len() != points.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} atoms",
                weights.len(),
                points.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not positive")));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { points, weights })
    }

    pub fn uniform(points: PointSet) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n as f64; n])
    }

    /// Divides `raw` by its sum.
    pub fn normalized(points: PointSet, raw: Vec<f64>) -> Result<Self> {
        let total = compensated_sum(raw.iter().copied());
        if !(total > 0.0) {
            return Err(Error::InvalidMeasure("total mass is not positive".into()));
        }
        Self::new(points, raw.into_iter().map(|w| w / total).collect())
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        self.points.point(i)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Same weights at transformed atom positions.
    pub fn map_points(&self, f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        Ok(Self {
            points: self.points.map_points(f)?,
            weights: self.weights.clone(),
        })
    }

    /// Atoms reordered so that new atom `i` is old atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            points: self.points.select(perm),
            weights: perm.iter().map(|&i| self.weights[i]).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.points.write_csv(writer, Some(&self.weights))
    }

    /// Reads `x_1..x_d[,weight]`; a missing weight column means uniform.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (points, weights) = PointSet::read_csv(reader)?;
        match weights {
            Some(w) => Self::new(points, w),
            None => Self::uniform(points),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IfsSpec {
    pub d: usize,
    pub m: usize,
    pub r: f64,
    /// Per-axis offsets `b_k`, shared by all axes.
    pub translations: Vec<f64>,
    pub depth: u32,
}

impl IfsSpec {
    pub fn new(d: usize, m: usize, r: f64, depth: u32) -> Result<Self> {
        if d == 0 {
            return Err(out_of_range("d", "must be at least 1"));
        }
        if m < 2 {
            return Err(out_of_range("m", format!("need at least 2 maps per axis, got {m}")));
        }
        if !(r > 0.0 && r <= 1.0 / m as f64) {
            return Err(out_of_range(
                "r",
                format!("contraction {r} outside (0, 1/{m}]: images would overlap"),
            ));
        }
        let translations = (0..m).map(|k| k as f64 * (1.0 - r) / (m - 1) as f64).collect();
        Ok(Self {
            d,
            m,
            r,
            translations,
            depth,
        })
    }

    /// Similarity dimension `d log m / log(1/r)`.
    pub fn dimension(&self) -> f64 {
        self.d as f64 * (self.m as f64).ln() / (1.0 / self.r).ln()
    }

    /// Gap between neighboring first-level images on one axis; the open set
    /// condition holds iff this is non-negative.
    pub fn separation(&self) -> f64 {
        self.translations
            .windows(2)
            .map(|w| w[1] - w[0] - self.r)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn atom_count(&self) -> u64 {
        (self.m as u64).saturating_pow(self.depth.saturating_mul(self.d as u32))
    }

    pub fn cylinder_side(&self) -> f64 {
        self.r.powi(self.depth as i32)
    }

    pub fn cylinder_diameter(&self) -> f64 {
        self.cylinder_side() * (self.d as f64).sqrt()
    }

    pub fn with_depth(&self, depth: u32) -> Self {
        Self { depth, ..self.clone() }
    }

    /// Cylinder centers with uniform weights `m^(-depth d)`.
    pub fn atoms(&self) -> Result<DiscreteMeasure> {
        let count = self.atom_count();
        if count > ATOM_BUDGET {
            return Err(Error::BudgetExceeded {
                limit: ATOM_BUDGET,
                unit: "atoms",
            });
        }
        let axis = self.axis_centers();
        let per_axis = axis.len();
        let n = count as usize;
        let mut coords = Vec::with_capacity(n * self.d);
        let mut digits = vec![0usize; self.d];
        for _ in 0..n {
            coords.extend(digits.iter().map(|&k| axis[k]));
            // odometer, last axis fastest
            for slot in digits.iter_mut().rev() {
                *slot += 1;
                if *slot < per_axis {
                    break;
                }
                *slot = 0;
            }
        }
        let points = PointSet::new(self.d, coords)?;
        DiscreteMeasure::new(points, vec![1.0 / count as f64; n])
    }

    fn axis_centers(&self) -> Vec<f64> {
        let mut lefts = vec![0.0];
        let mut scale = 1.0;
        for _ in 0..self.depth {
            let mut next = Vec::with_capacity(lefts.len() * self.m);
            for &left in &lefts {
                for &b in &self.translations {
                    next.push(left + scale * b);
                }
            }
            lefts = next;
            scale *= self.r;
        }
        lefts.into_iter().map(|left| left + 0.5 * scale).collect()
    }
}

/// Product Cantor spec with four maps per axis whose dimension is `s`.
pub fn build_ifs(d: usize, s: f64, depth: u32) -> Result<IfsSpec> {
    if d == 0 {
        return Err(out_of_range("d", "must be at least 1"));
    }
    if !(s > 0.0 && s <= d as f64) {
        return Err(out_of_range(
            "target_dimension",
            format!("{s} must lie in (0, {d}]"),
        ));
    }
    let m = 4usize;
    let r = if s == d as f64 {
        0.25
    } else {
        (m as f64).powf(-(d as f64) / s)
    };
    IfsSpec::new(d, m, r, depth)
}

/// Convenience: atoms of `spec`.
pub fn atoms_at_depth(spec: &IfsSpec) -> Result<DiscreteMeasure> {
    spec.atoms()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallMassProfile {
    /// `(radius, max mass over the sampled centers)`.
    pub rows: Vec<(f64, f64)>,
    /// Least-squares slope of log mass against log radius. `None` with fewer
    /// than two radii.
    pub slope: Option<f64>,
}

/// Largest closed-ball mass around the given atom indices, per radius.
pub fn ball_mass_profile(mu: &DiscreteMeasure, radii: &[f64], centers: &[usize]) -> Result<BallMassProfile> {
    if radii.is_empty() {
        return Err(Error::Empty("radius list"));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(out_of_range("radii", "must be positive"));
    }
    if radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(out_of_range("radii", "must be sorted increasing"));
    }
    if centers.is_empty() {
        return Err(Error::Empty("center sample"));
    }
    if let Some(&c) = centers.iter().find(|&&c| c >= mu.len()) {
        return Err(out_of_range("centers", format!("atom index {c} out of bounds")));
    }
    let rows = radii
        .iter()
        .map(|&rho| {
            let grid = SpatialGrid::build(mu.points(), rho)?;
            let mass = centers
                .par_iter()
                .map(|&c| {
                    let x = mu.point(c);
                    grid.ball(mu.points(), x, rho)
                        .iter()
                        .map(|&i| mu.weight(i))
                        .collect::<Accumulator>()
                        .value()
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(0.0, f64::max);
            Ok((rho, mass))
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = fit_loglog_slope(&rows);
    Ok(BallMassProfile { rows, slope })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(rows: &[(f64, f64)]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Discrete Riesz energy `sum_{i != j} w_i w_j |p_i - p_j|^(-s)`, the
/// real-space counterpart of the Fourier energy integral (equal up to a
/// constant depending on `d` and `s`).
pub fn riesz_energy(mu: &DiscreteMeasure, s: f64) -> Result<f64> {
    let d = mu.dim() as f64;
    if !(s > 0.0 && s < d) {
        return Err(out_of_range("s", format!("{s} must lie in (0, {d})")));
    }
    let n = mu.len();
    let rows: Vec<Result<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = mu.point(i);
            let mut acc = Accumulator::new();
            for j in i + 1..n {
                let r = distance(p, mu.point(j));
                if r == 0.0 {
                    return Err(Error::InvalidMeasure(format!("atoms {i} and {j} coincide")));
                }
                acc.add(mu.weight(j) * r.powf(-s));
            }
            Ok(2.0 * mu.weight(i) * acc.value())
        })
        .collect();
    let mut total = Accumulator::new();
    for r in rows {
        total.add(r?);
    }
    Ok(total.value())
}
