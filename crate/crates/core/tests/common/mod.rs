#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spherevc::{ConfigGraph, DiscreteMeasure, PointSet};

/// Random atoms in `[0, side]^d` with weights drawn from `[0.5, 1.5]`.
pub fn random_measure(seed: u64, n: usize, d: usize, side: f64) -> DiscreteMeasure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() * side).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    DiscreteMeasure::normalized(PointSet::new(d, coords).unwrap(), raw).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Random rotation (QR of a Gaussian-ish matrix) plus translation.
pub fn rigid_motion(seed: u64, d: usize) -> impl Fn(&[f64]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    let q = m.qr().q();
    let shift: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
    move |p: &[f64]| {
        let v = &q * DVector::from_column_slice(p);
        v.iter().zip(&shift).map(|(a, b)| a + b).collect()
    }
}

pub fn ball_volume(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        5 => 8.0 * PI * PI / 15.0,
        _ => panic!("oracle covers d <= 5"),
    }
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Least-squares distance from `x` to the affine hull of `anchors` via SVD.
pub fn affine_oracle(x: &[f64], anchors: &[&[f64]]) -> f64 {
    let d = x.len();
    let base = anchors[0];
    if anchors.len() == 1 {
        return euclid(x, base);
    }
    let a = DMatrix::from_fn(d, anchors.len() - 1, |r, c| anchors[c + 1][r] - base[r]);
    let b = DVector::from_fn(d, |r, _| x[r] - base[r]);
    let svd = a.clone().svd(true, true);
    let lam = svd.solve(&b, 1e-12).unwrap();
    (b - a * lam).norm()
}

/// `Λ` by plain enumeration in evaluation order, with kernel, volume and
/// affine distance computed here.
pub fn oracle_lambda(g: &ConfigGraph, mu: &DiscreteMeasure, t: f64, eps: f64, c: f64) -> f64 {
    let n = g.vertex_count();
    let order = g.ordering();
    let mut pos = vec![0; n];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    let mut earlier = vec![Vec::new(); n];
    for &[a, b] in g.edges() {
        let (pa, pb) = (pos[a], pos[b]);
        if pa < pb {
            earlier[pb].push(pa);
        } else {
            earlier[pa].push(pb);
        }
    }
    let d = mu.dim();
    let z = ball_volume(d) * ((t + eps).powi(d as i32) - (t - eps).powi(d as i32));
    let mut assign = vec![0usize; n];
    let mut total = 0.0;
    recurse(0, 1.0, &mut assign, &earlier, mu, t, eps, c, z, &mut total);
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    j: usize,
    prod: f64,
    assign: &mut Vec<usize>,
    earlier: &[Vec<usize>],
    mu: &DiscreteMeasure,
    t: f64,
    eps: f64,
    c: f64,
    z: f64,
    total: &mut f64,
) {
    if j == assign.len() {
        *total += prod;
        return;
    }
    for a in 0..mu.len() {
        let x = mu.point(a);
        let mut q = prod * mu.weight(a);
        let mut ok = true;
        for &i in &earlier[j] {
            let r = euclid(x, mu.point(assign[i]));
            if (r - t).abs() > eps {
                ok = false;
                break;
            }
            q /= z;
        }
        if !ok {
            continue;
        }
        if !earlier[j].is_empty() {
            let anchors: Vec<&[f64]> = earlier[j].iter().map(|&i| mu.point(assign[i])).collect();
            if affine_oracle(x, &anchors) <= c {
                continue;
            }
        }
        assign[j] = a;
        recurse(j + 1, q, assign, earlier, mu, t, eps, c, z, total);
    }
}
