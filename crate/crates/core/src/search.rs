//! Search for t-distance 4-cycles and shattering witnesses in finite point
//! sets, with tolerance `delta` on edges and separation `margin` on non-edges.

pub mod verify;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::kernel::SpatialGrid;
use crate::points::{distance, in_shell, PointSet};

fn check_tolerances(t: f64, delta: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(out_of_range("t", format!("{t} must be positive")));
    }
    if !(delta > 0.0 && delta < t) {
        return Err(out_of_range("delta", format!("{delta} must lie in (0, t)")));
    }
    Ok(())
}

fn grid_for(points: &PointSet, t: f64, delta: f64) -> Result<SpatialGrid> {
    SpatialGrid::build(points, ((t + delta) / 4.0).max(2.0 * delta))
}

/// Adjacency `i ~ j` iff `| |p_i - p_j| - t | <= delta`, `i != j`.
/// Lists are sorted.
pub fn distance_graph(points: &PointSet, t: f64, delta: f64) -> Result<Vec<Vec<usize>>> {
    check_tolerances(t, delta)?;
    let grid = grid_for(points, t, delta)?;
    Ok(shell_lists(points, &grid, t, delta))
}

fn shell_lists(points: &PointSet, grid: &SpatialGrid, t: f64, delta: f64) -> Vec<Vec<usize>> {
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut v = grid.annulus(points, points.point(i), t, delta);
            v.retain(|&j| j != i);
            v
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleWitness {
    /// Cycle order `x ~ y ~ z ~ w ~ x`.
    pub vertices: [usize; 4],
    pub t: f64,
    pub delta: f64,
}

/// Enumerates 4-cycles of the distance graph, one per cycle up to its eight
/// labelings. A cycle is reported as `(x, y, z, w)` with `x` its smallest
/// index, `z` opposite to `x` and `y < w`; output is sorted in that order
/// and truncated to `max_results`.
pub fn find_4cycles(points: &PointSet, t: f64, delta: f64, max_results: usize) -> Result<Vec<CycleWitness>> {
    let adj = distance_graph(points, t, delta)?;
    let n = points.len();
    let mut out = Vec::new();
    let chunk = 256;
    let mut start = 0;
    while start < n && out.len() < max_results {
        let end = (start + chunk).min(n);
        let found: Vec<Vec<[usize; 4]>> = (start..end)
            .into_par_iter()
            .map(|x| cycles_from(points, &adj, x, max_results))
            .collect();
        for c in found.into_iter().flatten() {
            if out.len() == max_results {
                break;
            }
            out.push(CycleWitness { vertices: c, t, delta });
        }
        start = end;
    }
    Ok(out)
}

fn cycles_from(points: &PointSet, adj: &[Vec<usize>], x: usize, cap: usize) -> Vec<[usize; 4]> {
    // wedges x - y - z with y, z > x, grouped by z
    let mut wedges: Vec<(usize, usize)> = Vec::new();
    for &y in adj[x].iter().filter(|&&y| y > x) {
        for &z in adj[y].iter().filter(|&&z| z > x) {
            wedges.push((z, y));
        }
    }
    wedges.sort_unstable();
    let px = points.point(x);
    let mut out = Vec::new();
    for group in wedges.chunk_by(|a, b| a.0 == b.0) {
        let z = group[0].0;
        if group.len() < 2 || distance(px, points.point(z)) == 0.0 {
            continue;
        }
        for (i, &(_, y)) in group.iter().enumerate() {
            for &(_, w) in &group[i + 1..] {
                if distance(points.point(y), points.point(w)) == 0.0 {
                    continue;
                }
                out.push([x, y, z, w]);
                if out.len() == cap {
                    return out;
                }
            }
        }
    }
    out
}

/// Shattering witness: atoms `x_1..x_k` and one center per subset of
/// `{1..k}`; subset `I` is the bitmask with bit `i-1` set for `i` in `I`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShatterWitness {
    pub k: usize,
    pub shattered_points: Vec<usize>,
    /// `centers[mask]` is the atom playing `y_I`.
    pub centers: Vec<usize>,
    pub t: f64,
    pub delta: f64,
    pub margin: f64,
}

/// Label of a subset such as `y_13` or `y_empty`.
pub fn subset_label(mask: usize) -> String {
    if mask == 0 {
        return "y_empty".into();
    }
    let digits: String = (0..usize::BITS as usize)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (i + 1).to_string())
        .collect();
    format!("y_{digits}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CenterReport {
    pub subset: String,
    pub index: usize,
    pub coords: Vec<f64>,
    pub distances: Vec<f64>,
    /// Per shattered point: `delta - | |x_i - y| - t |` for members,
    /// `| |x_i - y| - t | - margin` for non-members. All non-negative.
    pub slacks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub k: usize,
    pub t: f64,
    pub delta: f64,
    pub margin: f64,
    pub shattered_points: Vec<(usize, Vec<f64>)>,
    pub centers: Vec<CenterReport>,
}

impl ShatterWitness {
    pub fn report(&self, points: &PointSet) -> WitnessReport {
        let centers = self
            .centers
            .iter()
            .enumerate()
            .map(|(mask, &y)| {
                let py = points.point(y);
                let distances: Vec<f64> = self
                    .shattered_points
                    .iter()
                    .map(|&x| distance(points.point(x), py))
                    .collect();
                let slacks = distances
                    .iter()
                    .enumerate()
                    .map(|(i, &d)| {
                        let off = (d - self.t).abs();
                        if mask >> i & 1 == 1 {
                            self.delta - off
                        } else {
                            off - self.margin
                        }
                    })
                    .collect();
                CenterReport {
                    subset: subset_label(mask),
                    index: y,
                    coords: py.to_vec(),
                    distances,
                    slacks,
                }
            })
            .collect();
        WitnessReport {
            k: self.k,
            t: self.t,
            delta: self.delta,
            margin: self.margin,
            shattered_points: self
                .shattered_points
                .iter()
                .map(|&x| (x, points.point(x).to_vec()))
                .collect(),
            centers,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CycleReport {
    pub t: f64,
    pub delta: f64,
    pub vertices: Vec<(usize, Vec<f64>)>,
    /// Side lengths `|x-y|, |y-z|, |z-w|, |w-x|`.
    pub sides: Vec<f64>,
    /// `delta - | side - t |` per side.
    pub slacks: Vec<f64>,
}

impl CycleWitness {
    pub fn report(&self, points: &PointSet) -> CycleReport {
        let v = self.vertices;
        let sides: Vec<f64> = (0..4)
            .map(|i| distance(points.point(v[i]), points.point(v[(i + 1) % 4])))
            .collect();
        CycleReport {
            t: self.t,
            delta: self.delta,
            vertices: v.iter().map(|&i| (i, points.point(i).to_vec())).collect(),
            slacks: sides.iter().map(|s| self.delta - (s - self.t).abs()).collect(),
            sides,
        }
    }
}

pub const MAX_SEARCH_K: usize = 3;
/// Candidate x-tuples examined per parallel batch.
const BATCH: usize = 4096;

struct Searcher<'a> {
    points: &'a PointSet,
    adj: Vec<Vec<usize>>,
    t: f64,
    delta: f64,
    margin: f64,
    k: usize,
}

impl Searcher<'_> {
    fn off_annulus(&self, x: usize, y: usize) -> bool {
        (distance(self.points.point(x), self.points.point(y)) - self.t).abs() >= self.margin
    }

    fn admissible(&self, xs: &[usize], mask: usize, y: usize) -> bool {
        let py = self.points.point(y);
        xs.iter().enumerate().all(|(i, &x)| {
            let d = distance(self.points.point(x), py);
            if d == 0.0 {
                return false;
            }
            if mask >> i & 1 == 1 {
                in_shell(d, self.t, self.delta)
            } else {
                self.off_annulus(x, y)
            }
        })
    }

    /// Lowest-index center for every subset, or `None`. Candidate sets of
    /// different subsets are disjoint because `margin > delta`, so picking
    /// the smallest admissible atom per subset never collides.
    fn centers(&self, xs: &[usize]) -> Option<Vec<usize>> {
        let full = 1usize << self.k;
        let mut centers = vec![usize::MAX; full];
        // non-empty subsets first: their candidates come from short lists
        for mask in 1..full {
            let mut members: Vec<&Vec<usize>> =
                (0..self.k).filter(|i| mask >> i & 1 == 1).map(|i| &self.adj[xs[i]]).collect();
            members.sort_by_key(|l| l.len());
            let (first, rest) = members.split_first().expect("non-empty subset");
            let y = first
                .iter()
                .copied()
                .find(|&y| rest.iter().all(|l| l.binary_search(&y).is_ok()) && self.admissible(xs, mask, y))?;
            centers[mask] = y;
        }
        centers[0] = (0..self.points.len()).find(|&y| self.admissible(xs, 0, y))?;
        Some(centers)
    }
}

/// Searches for a `k`-shattering witness. Candidate tuples `x_1 < .. < x_k`
/// with pairwise distances in `(0, 2(t + delta)]` are scanned in
/// lexicographic order; the first tuple admitting all `2^k` centers wins.
/// At most `budget` tuples are examined. Returns `Ok(None)` when the whole
/// candidate space was scanned without success and
/// `Err(BudgetExhausted)` when the budget ran out first.
pub fn shatter_witness_search(
    points: &PointSet,
    t: f64,
    delta: f64,
    margin: f64,
    k: usize,
    budget: u64,
) -> Result<Option<ShatterWitness>> {
    check_tolerances(t, delta)?;
    if !(margin > delta && margin.is_finite()) {
        return Err(out_of_range("margin", format!("{margin} must exceed delta = {delta}")));
    }
    if !(1..=MAX_SEARCH_K).contains(&k) {
        return Err(out_of_range("k", format!("{k} must lie in 1..={MAX_SEARCH_K}")));
    }
    let grid = grid_for(points, t, delta)?;
    let searcher = Searcher {
        points,
        adj: shell_lists(points, &grid, t, delta),
        t,
        delta,
        margin,
        k,
    };
    let reach = 2.0 * (t + delta);
    let mut examined = 0u64;
    let mut batch: Vec<[usize; MAX_SEARCH_K]> = Vec::with_capacity(BATCH);

    let run = |batch: &mut Vec<[usize; MAX_SEARCH_K]>| -> Option<ShatterWitness> {
        let hit = batch
            .par_iter()
            .find_map_first(|xs| searcher.centers(&xs[..k]).map(|c| (xs[..k].to_vec(), c)));
        batch.clear();
        hit.map(|(xs, centers)| ShatterWitness {
            k,
            shattered_points: xs,
            centers,
            t,
            delta,
            margin,
        })
    };

    for x1 in 0..points.len() {
        if searcher.adj[x1].is_empty() {
            continue;
        }
        let p1 = points.point(x1);
        let near: Vec<usize> = if k > 1 {
            grid.ball(points, p1, reach)
                .into_iter()
                .filter(|&j| j > x1 && !searcher.adj[j].is_empty() && distance(p1, points.point(j)) > 0.0)
                .collect()
        } else {
            Vec::new()
        };
        let mut emit = |xs: [usize; MAX_SEARCH_K], batch: &mut Vec<[usize; MAX_SEARCH_K]>| -> Result<Option<ShatterWitness>> {
            if examined == budget {
                if let Some(w) = run(batch) {
                    return Ok(Some(w));
                }
                return Err(Error::BudgetExhausted { examined });
            }
            examined += 1;
            batch.push(xs);
            if batch.len() == BATCH {
                return Ok(run(batch));
            }
            Ok(None)
        };
        match k {
            1 => {
                if let Some(w) = emit([x1, 0, 0], &mut batch)? {
                    return Ok(Some(w));
                }
            }
            2 => {
                for &x2 in &near {
                    if let Some(w) = emit([x1, x2, 0], &mut batch)? {
                        return Ok(Some(w));
                    }
                }
            }
            _ => {
                for (i, &x2) in near.iter().enumerate() {
                    let p2 = points.point(x2);
                    for &x3 in &near[i + 1..] {
                        let d = distance(p2, points.point(x3));
                        if d > 0.0 && d <= reach {
                            if let Some(w) = emit([x1, x2, x3], &mut batch)? {
                                return Ok(Some(w));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(run(&mut batch))
}

/// Largest `k <= 3` for which a witness is found within `budget` tuples per
/// search, `0` if none. Each `k` is searched independently, so the result is
/// monotone in the budget.
pub fn vc_lower_bound(points: &PointSet, t: f64, delta: f64, margin: f64, budget: u64) -> Result<usize> {
    for k in (1..=MAX_SEARCH_K).rev() {
        match shatter_witness_search(points, t, delta, margin, k, budget) {
            Ok(Some(_)) => return Ok(k),
            Ok(None) | Err(Error::BudgetExhausted { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_labels() {
        assert_eq!(subset_label(0), "y_empty");
        assert_eq!(subset_label(0b101), "y_13");
        assert_eq!(subset_label(0b111), "y_123");
    }

    #[test]
    fn square_has_one_cycle() {
        let pts = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        let adj = distance_graph(&pts, 1.0, 1e-9).unwrap();
        assert_eq!(adj, vec![vec![1, 3], vec![0, 2], vec![1, 3], vec![0, 2]]);
        let c = find_4cycles(&pts, 1.0, 1e-9, 10).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].vertices, [0, 1, 2, 3]);
    }

    #[test]
    fn equilateral_triangle_adjacency() {
        let h = 3f64.sqrt() / 2.0;
        let pts = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let adj = distance_graph(&pts, 1.0, 1e-9).unwrap();
        assert_eq!(adj, vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
        assert!(find_4cycles(&pts, 1.0, 1e-9, 10).unwrap().is_empty());
    }

    #[test]
    fn margin_must_exceed_delta() {
        let pts = PointSet::from_rows(&[[0.0]]).unwrap();
        assert!(shatter_witness_search(&pts, 1.0, 0.1, 0.1, 1, 10).is_err());
        assert!(shatter_witness_search(&pts, 1.0, 0.1, 0.2, 4, 10).is_err());
    }

    #[test]
    fn empty_and_single_point_sets() {
        let empty = PointSet::empty(2);
        assert_eq!(vc_lower_bound(&empty, 1.0, 1e-6, 2e-6, 1000).unwrap(), 0);
        let one = PointSet::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(vc_lower_bound(&one, 1.0, 1e-6, 2e-6, 1000).unwrap(), 0);
    }
}
