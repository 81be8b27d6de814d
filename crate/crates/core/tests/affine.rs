mod common;

use common::affine_oracle;
use proptest::prelude::*;
use spherevc::affine::affine_span_distance;

#[test]
fn hand_examples() {
    assert_eq!(affine_span_distance(&[0.0, 1.0], &[&[0.0, 0.0]]).unwrap(), 1.0);
    let d = affine_span_distance(&[3.0, 4.0], &[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
    assert!((d - 4.0).abs() < 1e-15);
}

#[test]
fn plane_through_three_anchors() {
    let x = [1.0, 2.0, 3.0];
    let anchors: [&[f64]; 3] = [&[0.0, 0.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]];
    let got = affine_span_distance(&x, &anchors).unwrap();
    assert!((got - affine_oracle(&x, &anchors)).abs() < 1e-9);
}

#[test]
fn dimension_mismatch() {
    assert!(affine_span_distance(&[0.0, 0.0], &[&[0.0, 0.0, 0.0]]).is_err());
    assert!(affine_span_distance(&[0.0, 0.0], &[]).is_err());
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, d)
}

proptest! {
    #[test]
    fn matches_least_squares(
        (x, anchors) in (2usize..6).prop_flat_map(|d| (point(d), prop::collection::vec(point(d), 1..5)))
    ) {
        let refs: Vec<&[f64]> = anchors.iter().map(|a| a.as_slice()).collect();
        let got = affine_span_distance(&x, &refs).unwrap();
        let want = affine_oracle(&x, &refs);
        prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn repeated_anchors_do_not_matter(
        (x, anchors) in (2usize..5).prop_flat_map(|d| (point(d), prop::collection::vec(point(d), 1..4)))
    ) {
        let refs: Vec<&[f64]> = anchors.iter().map(|a| a.as_slice()).collect();
        let mut doubled = refs.clone();
        doubled.extend(refs.iter().rev());
        let a = affine_span_distance(&x, &refs).unwrap();
        let b = affine_span_distance(&x, &doubled).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn anchors_lie_in_their_span(anchors in prop::collection::vec(point(3), 1..4), pick in 0usize..4) {
        let refs: Vec<&[f64]> = anchors.iter().map(|a| a.as_slice()).collect();
        let x = refs[pick % refs.len()];
        prop_assert!(affine_span_distance(x, &refs).unwrap() < 1e-9);
    }
}
