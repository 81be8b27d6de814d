mod common;

use common::{euclid, rigid_motion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spherevc::fixtures::{fixture, PLANTED_SQUARE_T, WITNESS_T};
use spherevc::search::verify::{check_cycle_witness, check_shatter_witness};
use spherevc::search::{distance_graph, find_4cycles, shatter_witness_search, vc_lower_bound, ShatterWitness};
use spherevc::{Error, PointSet};

fn random_points(seed: u64, n: usize, d: usize) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PointSet::new(d, (0..n * d).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

fn checked_search(pts: &PointSet, t: f64, delta: f64, margin: f64, k: usize) -> Option<ShatterWitness> {
    let w = shatter_witness_search(pts, t, delta, margin, k, u64::MAX).unwrap();
    if let Some(w) = &w {
        check_shatter_witness(pts, w).unwrap();
    }
    w
}

/// Cycles as sorted vertex sets, after mapping indices through `map`.
fn cycle_sets(pts: &PointSet, t: f64, delta: f64, map: impl Fn(usize) -> usize) -> Vec<[usize; 4]> {
    let mut out: Vec<[usize; 4]> = find_4cycles(pts, t, delta, usize::MAX)
        .unwrap()
        .into_iter()
        .map(|c| {
            check_cycle_witness(pts, &c).unwrap();
            let mut v = c.vertices.map(&map);
            v.sort_unstable();
            v
        })
        .collect();
    out.sort_unstable();
    out
}

#[test]
fn distance_graph_matches_pair_scan() {
    for (seed, d) in [(1u64, 2usize), (2, 3)] {
        let pts = random_points(seed, 1000, d);
        let (t, delta) = (0.3, 0.01);
        let adj = distance_graph(&pts, t, delta).unwrap();
        for i in 0..pts.len() {
            let want: Vec<usize> = (0..pts.len())
                .filter(|&j| j != i && (euclid(pts.point(i), pts.point(j)) - t).abs() <= delta)
                .collect();
            assert_eq!(adj[i], want);
        }
    }
}

#[test]
fn small_distance_graphs() {
    let sq = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
    let adj = distance_graph(&sq, 1.0, 1e-9).unwrap();
    assert_eq!(adj, vec![vec![1, 3], vec![0, 2], vec![1, 3], vec![0, 2]]);
    let h = 3f64.sqrt() / 2.0;
    let tri = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
    let adj = distance_graph(&tri, 1.0, 1e-9).unwrap();
    assert_eq!(adj, vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
    assert!(distance_graph(&tri, 1.0, 0.0).is_err());
}

#[test]
fn rhombus_is_a_cycle() {
    let a = 1.1f64;
    let rh = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0 + a.cos(), a.sin()], [a.cos(), a.sin()]]).unwrap();
    let cycles = find_4cycles(&rh, 1.0, 1e-9, 10).unwrap();
    assert_eq!(cycles.len(), 1);
    assert_eq!(cycles[0].vertices, [0, 1, 2, 3]);
    check_cycle_witness(&rh, &cycles[0]).unwrap();
}

#[test]
fn collinear_points_have_no_cycle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let xs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..3.0)).collect();
        let pts = PointSet::from_rows(&xs.iter().map(|&x| [x, 0.5 * x]).collect::<Vec<_>>()).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                let t = euclid(pts.point(i), pts.point(j));
                let delta = 1e-9 * t;
                // every labeling of the four points fails some side
                let mut perm = [0, 1, 2, 3];
                let mut any = false;
                permute(&mut perm, 0, &mut |p| {
                    any |= (0..4).all(|s| (euclid(pts.point(p[s]), pts.point(p[(s + 1) % 4])) - t).abs() <= delta);
                });
                assert!(!any);
                assert!(find_4cycles(&pts, t, delta, 10).unwrap().is_empty());
            }
        }
    }
}

fn permute(p: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
    if k == 4 {
        f(p);
        return;
    }
    for i in k..4 {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

#[test]
fn planted_square_is_recovered() {
    let planted = fixture("planted-square").unwrap();
    let t = PLANTED_SQUARE_T;
    let cycles = find_4cycles(&planted.points, t, 1e-6 * t, 100).unwrap();
    assert_eq!(cycles.len(), 1);
    assert_eq!(cycles[0].vertices, [0, 1, 2, 3]);
    check_cycle_witness(&planted.points, &cycles[0]).unwrap();
    let noise = fixture("square-noise").unwrap();
    assert!(find_4cycles(&noise.points, t, 1e-6 * t, 100).unwrap().is_empty());
}

#[test]
fn cycles_under_relabeling_and_motion() {
    let mut pts = random_points(6, 300, 2);
    let a = 0.8f64;
    let t = 0.2;
    for p in [[0.0, 0.0], [t, 0.0], [t + t * a.cos(), t * a.sin()], [t * a.cos(), t * a.sin()]] {
        pts.push(&[p[0] + 0.4, p[1] + 0.3]).unwrap();
    }
    let delta = 2e-3;
    let base = cycle_sets(&pts, t, delta, |i| i);
    assert!(!base.is_empty());

    let perm: Vec<usize> = (0..pts.len()).map(|i| (i * 7 + 3) % pts.len()).collect();
    let shuffled = pts.select(&perm);
    assert_eq!(cycle_sets(&shuffled, t, delta, |i| perm[i]), base);

    // rigid motions only move distances by rounding; shrink the band to
    // stay clear of marginal pairs
    let motion = rigid_motion(8, 2);
    let moved = pts.map_points(&motion).unwrap();
    let strict = 1.9e-3;
    assert_eq!(cycle_sets(&moved, t, strict, |i| i), cycle_sets(&pts, t, strict, |i| i));
}

#[test]
fn cycle_output_is_truncated_and_ordered() {
    let pts = random_points(9, 400, 2);
    let all = find_4cycles(&pts, 0.2, 0.01, usize::MAX).unwrap();
    assert!(all.len() > 5);
    let few = find_4cycles(&pts, 0.2, 0.01, 5).unwrap();
    assert_eq!(few[..], all[..5]);
    for c in &all {
        let [x, y, _, w] = c.vertices;
        assert!(x < y && y < w && c.vertices[2] > x);
    }
}

#[test]
fn one_shattering_on_three_points() {
    let pts = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 3.0]]).unwrap();
    let w = checked_search(&pts, 1.0, 1e-6, 0.1, 1).unwrap();
    assert_eq!(w.shattered_points, vec![0]);
    assert_eq!(w.centers, vec![2, 1]);
    assert_eq!(vc_lower_bound(&pts, 1.0, 1e-6, 0.1, 1000).unwrap(), 1);
}

#[test]
fn two_shattering_on_fig6() {
    let f = fixture("fig6-witness").unwrap();
    let w = checked_search(&f.points, WITNESS_T, 1e-9, 0.1, 2).unwrap();
    assert_eq!(w.shattered_points, vec![0, 1]);
    assert_eq!(w.centers, vec![2, 3, 4, 5]);
    assert!(checked_search(&f.points, WITNESS_T, 1e-9, 0.1, 3).is_none());
    assert_eq!(vc_lower_bound(&f.points, WITNESS_T, 1e-9, 0.1, 1000).unwrap(), 2);
}

#[test]
fn three_shattering_on_planted_set() {
    let f = fixture("k3-witness").unwrap();
    let (delta, margin) = (1e-6, 2e-6);
    let w = checked_search(&f.points, WITNESS_T, delta, margin, 3).unwrap();
    assert_eq!(w.shattered_points, vec![0, 1, 2]);
    assert_eq!(w.centers, (3..11).collect::<Vec<_>>());
    assert_eq!(vc_lower_bound(&f.points, WITNESS_T, delta, margin, 100_000).unwrap(), 3);
    // the report carries the slacks the checker relies on
    let report = w.report(&f.points);
    assert_eq!(report.centers.len(), 8);
    assert_eq!(report.centers[5].subset, "y_13");
    assert!(report.centers.iter().all(|c| c.slacks.iter().all(|&s| s >= 0.0)));
    serde_json::to_string(&report).unwrap();
}

#[test]
fn planted_witness_survives_rigid_motion() {
    let f = fixture("k3-witness").unwrap();
    let moved = f.points.map_points(rigid_motion(3, 3)).unwrap();
    let w = checked_search(&moved, WITNESS_T, 1e-6, 2e-6, 3).unwrap();
    assert_eq!(w.shattered_points, vec![0, 1, 2]);
}

#[test]
fn budget_exhaustion_is_not_absence() {
    let noise = fixture("square-noise").unwrap();
    let err = shatter_witness_search(&noise.points, 0.25, 0.01, 0.02, 3, 10).unwrap_err();
    assert!(matches!(err, Error::BudgetExhausted { examined: 10 }));
    let sq = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
    assert_eq!(shatter_witness_search(&sq, 1.0, 1e-6, 0.1, 3, u64::MAX).unwrap(), None);
}

#[test]
fn vc_bound_monotone_in_budget() {
    let f = fixture("k3-witness").unwrap();
    let bounds: Vec<usize> = [0u64, 1, 10, 100, 10_000]
        .iter()
        .map(|&b| vc_lower_bound(&f.points, WITNESS_T, 1e-6, 2e-6, b).unwrap())
        .collect();
    assert!(bounds.windows(2).all(|w| w[0] <= w[1]), "{bounds:?}");
    assert_eq!(*bounds.last().unwrap(), 3);
}

#[test]
fn degenerate_inputs() {
    assert_eq!(vc_lower_bound(&PointSet::empty(2), 1.0, 1e-6, 0.1, 100).unwrap(), 0);
    let one = PointSet::from_rows(&[[0.0, 0.0]]).unwrap();
    assert_eq!(vc_lower_bound(&one, 1.0, 1e-6, 0.1, 100).unwrap(), 0);
    assert!(shatter_witness_search(&one, 1.0, 0.1, 0.1, 1, 10).is_err());
    assert!(shatter_witness_search(&one, 1.0, 0.1, 0.2, 4, 10).is_err());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let f = fixture("k3-witness").unwrap();
    let planted = fixture("planted-square").unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            (
                shatter_witness_search(&f.points, WITNESS_T, 1e-6, 2e-6, 3, u64::MAX).unwrap(),
                shatter_witness_search(&f.points, WITNESS_T, 0.3, 0.35, 2, u64::MAX).unwrap(),
                find_4cycles(&planted.points, PLANTED_SQUARE_T, 0.002, 50).unwrap(),
            )
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    if let Some(w) = &one.1 {
        check_shatter_witness(&f.points, w).unwrap();
    }
}
