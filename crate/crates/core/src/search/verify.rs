//! Witness checker working from raw coordinates only. It deliberately
//! shares no helpers with the search so that a bug there cannot hide here.

use super::{CycleWitness, ShatterWitness};
use crate::points::PointSet;

/// Relative slack granted to every comparison.
pub const CHECK_TOL: f64 = 1e-12;

fn euclid(points: &PointSet, a: usize, b: usize) -> f64 {
    let d = points.dim();
    let c = points.coords();
    let (pa, pb) = (&c[a * d..a * d + d], &c[b * d..b * d + d]);
    let mut acc = 0.0f64;
    for i in 0..d {
        acc = (pa[i] - pb[i]).mul_add(pa[i] - pb[i], acc);
    }
    acc.sqrt()
}

fn all_distinct(points: &PointSet, idx: &[usize]) -> Result<(), String> {
    for (i, &a) in idx.iter().enumerate() {
        if a >= points.len() {
            return Err(format!("index {a} out of bounds"));
        }
        for &b in &idx[i + 1..] {
            if a == b {
                return Err(format!("index {a} used twice"));
            }
            if euclid(points, a, b) <= 0.0 {
                return Err(format!("atoms {a} and {b} coincide"));
            }
        }
    }
    Ok(())
}

/// Re-checks conditions (i)-(iii): members within `delta` of `t`,
/// non-members at least `margin` away from `t`, all points distinct.
pub fn check_shatter_witness(points: &PointSet, w: &ShatterWitness) -> Result<(), String> {
    let k = w.k;
    if w.shattered_points.len() != k || w.centers.len() != 1 << k {
        return Err(format!("witness for k = {k} has wrong shape"));
    }
    if !(w.margin > w.delta) {
        return Err("margin does not exceed delta".into());
    }
    let mut all = w.shattered_points.clone();
    all.extend(&w.centers);
    all_distinct(points, &all)?;
    let tol = CHECK_TOL * w.t.max(1.0);
    for (mask, &y) in w.centers.iter().enumerate() {
        for (i, &x) in w.shattered_points.iter().enumerate() {
            let off = (euclid(points, x, y) - w.t).abs();
            let member = (mask & (1 << i)) != 0;
            if member && off > w.delta + tol {
                return Err(format!("center {y} for subset {mask:b} misses x_{} by {off}", i + 1));
            }
            if !member && off < w.margin - tol {
                return Err(format!(
                    "center {y} for subset {mask:b} is within margin of x_{} (off by {off})",
                    i + 1
                ));
            }
        }
    }
    Ok(())
}

pub fn check_cycle_witness(points: &PointSet, w: &CycleWitness) -> Result<(), String> {
    let v = w.vertices;
    all_distinct(points, &v)?;
    let tol = CHECK_TOL * w.t.max(1.0);
    for i in 0..4 {
        let off = (euclid(points, v[i], v[(i + 1) % 4]) - w.t).abs();
        if off > w.delta + tol {
            return Err(format!("side {}-{} is off by {off}", v[i], v[(i + 1) % 4]));
        }
    }
    Ok(())
}
