//! The normalized annulus kernel and a hashed lattice for shell queries.
//!
//! The sphere measure `σ_t` mollified at width `ε` is realized as
//! `Z⁻¹ · 1[t - ε <= |v| <= t + ε]` with `Z` the Lebesgue volume of that
//! annulus, so the kernel integrates to one.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::measure::DiscreteMeasure;
use crate::points::{distance, in_shell, PointSet};
use crate::sum::Accumulator;

pub const MAX_GRID_DIM: usize = 8;

/// Volume of the unit ball in ℝ^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub t: f64,
    pub epsilon: f64,
    pub d: usize,
}

impl KernelSpec {
    pub fn new(t: f64, epsilon: f64, d: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(out_of_range("t", format!("{t} must be positive")));
        }
        if !(epsilon > 0.0) {
            return Err(out_of_range("epsilon", format!("{epsilon} must be positive")));
        }
        if epsilon >= t {
            return Err(out_of_range("epsilon", format!("{epsilon} must be below t = {t}")));
        }
        if d == 0 {
            return Err(out_of_range("d", "must be at least 1"));
        }
        Ok(Self { t, epsilon, d })
    }

    /// `Z = V_d ((t+ε)^d - (t-ε)^d)`.
    pub fn normalization(&self) -> f64 {
        let d = self.d as i32;
        unit_ball_volume(self.d) * ((self.t + self.epsilon).powi(d) - (self.t - self.epsilon).powi(d))
    }

    #[inline]
    pub fn contains(&self, dist: f64) -> bool {
        in_shell(dist, self.t, self.epsilon)
    }

    #[inline]
    pub fn eval_dist(&self, dist: f64) -> f64 {
        if self.contains(dist) {
            1.0 / self.normalization()
        } else {
            0.0
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.eval_dist(r)
    }
}

pub fn kernel_eval(k: &KernelSpec, v: &[f64]) -> f64 {
    k.eval(v)
}

type CellKey = [i64; MAX_GRID_DIM];

/// Points bucketed by `floor(p / cell)` per coordinate. Immutable once built.
#[derive(Clone, Debug)]
pub struct SpatialGrid {
    dim: usize,
    cell: f64,
    len: usize,
    cells: FxHashMap<CellKey, Vec<usize>>,
}

impl SpatialGrid {
    pub fn build(points: &PointSet, cell: f64) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(out_of_range("cell size", format!("{cell} must be positive")));
        }
        let dim = points.dim();
        if dim > MAX_GRID_DIM {
            return Err(out_of_range(
                "dimension",
                format!("spatial grid supports up to {MAX_GRID_DIM}, got {dim}"),
            ));
        }
        let mut cells: FxHashMap<CellKey, Vec<usize>> = FxHashMap::default();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i);
        }
        Ok(Self {
            dim,
            cell,
            len: points.len(),
            cells,
        })
    }

    fn key(p: &[f64], cell: f64) -> CellKey {
        let mut k = [0i64; MAX_GRID_DIM];
        for (slot, &c) in k.iter_mut().zip(p) {
            *slot = (c / cell).floor() as i64;
        }
        k
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.len()
    }

    /// Indices with `| |x - p_i| - t | <= delta`, sorted.
    pub fn annulus(&self, points: &PointSet, x: &[f64], t: f64, delta: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.scan(points, x, (t - delta).max(0.0), t + delta, |dist| in_shell(dist, t, delta), &mut out);
        out
    }

    /// Indices with `|x - p_i| <= radius`, sorted.
    pub fn ball(&self, points: &PointSet, x: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.scan(points, x, 0.0, radius, |dist| dist <= radius, &mut out);
        out
    }

    fn scan(
        &self,
        points: &PointSet,
        x: &[f64],
        inner: f64,
        outer: f64,
        accept: impl Fn(f64) -> bool,
        out: &mut Vec<usize>,
    ) {
        if self.cells.is_empty() || !(outer >= 0.0) {
            return;
        }
        // conservative bounds; the exact test is `accept`
        let slack = 1e-9 * (outer + self.cell);
        let outer_sq = (outer + slack).powi(2);
        let inner_sq = (inner - slack).max(0.0).powi(2);
        let h = self.cell;

        let mut lo = [0i64; MAX_GRID_DIM];
        let mut hi = [0i64; MAX_GRID_DIM];
        let mut box_cells = 1f64;
        for k in 0..self.dim {
            lo[k] = ((x[k] - outer - slack) / h).floor() as i64;
            hi[k] = ((x[k] + outer + slack) / h).floor() as i64;
            box_cells *= (hi[k] - lo[k] + 1) as f64;
        }

        let visit = |key: &CellKey, out: &mut Vec<usize>| {
            if let Some(list) = self.cells.get(key) {
                for &i in list {
                    if accept(distance(x, points.point(i))) {
                        out.push(i);
                    }
                }
            }
        };

        if box_cells > self.cells.len() as f64 {
            for key in self.cells.keys() {
                let (min_sq, max_sq) = self.cell_bounds(x, key);
                if min_sq <= outer_sq && max_sq >= inner_sq {
                    visit(key, out);
                }
            }
        } else {
            let mut key = [0i64; MAX_GRID_DIM];
            self.walk(0, x, &lo, &hi, &mut key, 0.0, 0.0, outer_sq, inner_sq, &mut |k| visit(k, out));
        }
        out.sort_unstable();
    }

    fn axis_gaps(&self, xk: f64, c: i64) -> (f64, f64) {
        let a = c as f64 * self.cell;
        let b = a + self.cell;
        let near = if xk < a {
            a - xk
        } else if xk > b {
            xk - b
        } else {
            0.0
        };
        let far = (xk - a).abs().max((xk - b).abs());
        (near, far)
    }

    fn cell_bounds(&self, x: &[f64], key: &CellKey) -> (f64, f64) {
        let mut min_sq = 0.0;
        let mut max_sq = 0.0;
        for k in 0..self.dim {
            let (near, far) = self.axis_gaps(x[k], key[k]);
            min_sq += near * near;
            max_sq += far * far;
        }
        (min_sq, max_sq)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        k: usize,
        x: &[f64],
        lo: &CellKey,
        hi: &CellKey,
        key: &mut CellKey,
        min_sq: f64,
        max_sq: f64,
        outer_sq: f64,
        inner_sq: f64,
        visit: &mut dyn FnMut(&CellKey),
    ) {
        if k == self.dim {
            if max_sq >= inner_sq {
                visit(key);
            }
            return;
        }
        for c in lo[k]..=hi[k] {
            let (near, far) = self.axis_gaps(x[k], c);
            let m = min_sq + near * near;
            if m > outer_sq {
                continue;
            }
            key[k] = c;
            self.walk(k + 1, x, lo, hi, key, m, max_sq + far * far, outer_sq, inner_sq, visit);
        }
    }

    fn check(&self, points: &PointSet) -> Result<()> {
        if points.len() != self.len {
            return Err(Error::GridMismatch {
                grid: self.len,
                measure: points.len(),
            });
        }
        if points.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: points.dim(),
            });
        }
        Ok(())
    }
}

/// Atom indices of `mu` in the shell `| |x - p| - t | <= delta`, sorted.
/// Any cell size gives the exact answer; cells near `2 delta` keep the
/// number of visited cells proportional to the shell surface.
pub fn annulus_neighbors(
    grid: &SpatialGrid,
    points: &PointSet,
    x: &[f64],
    t: f64,
    delta: f64,
) -> Result<Vec<usize>> {
    grid.check(points)?;
    if x.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: x.len(),
        });
    }
    Ok(grid.annulus(points, x, t, delta))
}

/// `σ_t^ε * μ (x)` through an existing grid over `mu`.
pub fn spherical_average_with(grid: &SpatialGrid, mu: &DiscreteMeasure, k: &KernelSpec, x: &[f64]) -> Result<f64> {
    let hits = annulus_neighbors(grid, mu.points(), x, k.t, k.epsilon)?;
    let mass: Accumulator = hits.iter().map(|&i| mu.weight(i)).collect();
    Ok(mass.value() / k.normalization())
}

pub fn spherical_average(mu: &DiscreteMeasure, k: &KernelSpec, x: &[f64]) -> Result<f64> {
    let grid = SpatialGrid::build(mu.points(), k.epsilon)?;
    spherical_average_with(&grid, mu, k, x)
}

/// Spherical averages evaluated at every atom of `mu`.
pub fn spherical_averages_at_atoms(mu: &DiscreteMeasure, k: &KernelSpec) -> Result<Vec<f64>> {
    let grid = SpatialGrid::build(mu.points(), k.epsilon)?;
    (0..mu.len())
        .into_par_iter()
        .map(|i| spherical_average_with(&grid, mu, k, mu.point(i)))
        .collect()
}

/// Smallest value `v` whose weighted lower cumulative mass reaches `q`.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> f64 {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let total: f64 = weights.iter().sum();
    let mut cum = Accumulator::new();
    for &i in &idx {
        cum.add(weights[i]);
        if cum.value() >= q * total * (1.0 - 1e-12) {
            return values[i];
        }
    }
    values[*idx.last().expect("non-empty")]
}

/// Picks the radius maximizing the weighted `q`-quantile of spherical
/// averages over atoms. Returns `(t_star, score)`; the first candidate wins
/// ties.
pub fn select_radius_interval(mu: &DiscreteMeasure, candidates: &[f64], epsilon: f64, q: f64) -> Result<(f64, f64)> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate radius list"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(out_of_range("q", format!("{q} must lie in [0, 1]")));
    }
    let mut best: Option<(f64, f64)> = None;
    for &t in candidates {
        let k = KernelSpec::new(t, epsilon, mu.dim())?;
        let avgs = spherical_averages_at_atoms(mu, &k)?;
        let score = weighted_quantile(&avgs, mu.weights(), q);
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((t, score));
        }
    }
    Ok(best.expect("non-empty candidates"))
}
