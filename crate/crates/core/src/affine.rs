//! Distance from a point to the affine hull of finitely many anchors.

use crate::error::{Error, Result};
use crate::points::distance;

const RANK_TOL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Removes the components of `v` along the orthonormal `basis`, twice.
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for e in basis {
            let c = dot(v, e);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi -= c * ei;
            }
        }
    }
}

/// Distance from `x` to the affine span of `anchors`.
///
/// Directions `a_i - a_0` are orthonormalized by modified Gram-Schmidt with
/// one reorthogonalization pass; directions whose residual falls below
/// `1e-12` of their length (duplicates, dependent anchors) are dropped.
pub fn affine_span_distance(x: &[f64], anchors: &[&[f64]]) -> Result<f64> {
    if anchors.is_empty() {
        return Err(Error::Empty("anchor list"));
    }
    for a in anchors {
        if a.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: a.len(),
            });
        }
    }
    Ok(span_distance(x, anchors))
}

/// Unchecked variant for hot loops; `anchors` must be non-empty.
#[inline]
pub fn span_distance(x: &[f64], anchors: &[&[f64]]) -> f64 {
    match anchors {
        [a] => distance(x, a),
        [a, b] => line_distance(x, a, b),
        _ => general_distance(x, anchors),
    }
}

fn line_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut u_sq = 0.0;
    let mut vu = 0.0;
    for k in 0..x.len() {
        let u = b[k] - a[k];
        u_sq += u * u;
        vu += (x[k] - a[k]) * u;
    }
    if u_sq.sqrt() <= RANK_TOL * norm_inf_scale(a, b) {
        return distance(x, a);
    }
    let lam = vu / u_sq;
    let mut r_sq = 0.0;
    for k in 0..x.len() {
        let r = x[k] - a[k] - lam * (b[k] - a[k]);
        r_sq += r * r;
    }
    r_sq.sqrt()
}

fn norm_inf_scale(a: &[f64], b: &[f64]) -> f64 {
    a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
}

fn general_distance(x: &[f64], anchors: &[&[f64]]) -> f64 {
    let base = anchors[0];
    let dim = x.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim.min(anchors.len()));
    for a in &anchors[1..] {
        if basis.len() == dim {
            break;
        }
        let mut u = sub(a, base);
        let len = norm(&u);
        if len == 0.0 {
            continue;
        }
        project_out(&mut u, &basis);
        let res = norm(&u);
        if res <= RANK_TOL * len {
            continue;
        }
        u.iter_mut().for_each(|c| *c /= res);
        basis.push(u);
    }
    let mut v = sub(x, base);
    project_out(&mut v, &basis);
    norm(&v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_and_axis() {
        assert_eq!(affine_span_distance(&[0.0, 1.0], &[&[0.0, 0.0]]).unwrap(), 1.0);
        let d = affine_span_distance(&[0.0, 0.0, 1.0], &[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicates_are_ignored() {
        let a: &[f64] = &[1.0, 1.0];
        let d = affine_span_distance(&[0.0, 0.0], &[a, a, a]).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let d2 = affine_span_distance(&[0.0, 0.0], &[a, a]).unwrap();
        assert!((d2 - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn plane_in_space() {
        // plane through the three anchors has normal (1,-1,1)/sqrt(3)
        let d = affine_span_distance(&[1.0, 2.0, 3.0], &[&[0.0, 0.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]])
            .unwrap();
        assert!((d - 2.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn full_span_gives_zero() {
        let d = affine_span_distance(&[5.0, -2.0], &[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[3.0, 3.0]]).unwrap();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn empty_anchors_rejected() {
        assert!(matches!(affine_span_distance(&[0.0], &[]), Err(Error::Empty(_))));
    }
}
