use spherevc::measure::{atoms_at_depth, ball_mass_profile, build_ifs, fit_loglog_slope, riesz_energy};
use spherevc::{DiscreteMeasure, IfsSpec, PointSet};

fn cantor(depth: u32) -> DiscreteMeasure {
    IfsSpec::new(1, 2, 1.0 / 3.0, depth).unwrap().atoms().unwrap()
}

#[test]
fn build_examples() {
    let full = build_ifs(3, 3.0, 2).unwrap();
    assert_eq!(full.r, 0.25);
    let frac = build_ifs(3, 2.93, 3).unwrap();
    assert!((frac.r - 4f64.powf(-3.0 / 2.93)).abs() < 1e-15);
    assert!((frac.dimension() - 2.93).abs() < 1e-9);
    assert!(frac.separation() >= 0.0);
    let plane = build_ifs(2, 1.5, 2).unwrap();
    assert!((plane.r - 4f64.powf(-4.0 / 3.0)).abs() < 1e-15);
    assert!(build_ifs(2, 0.0, 1).is_err());
    assert!(build_ifs(2, 2.5, 1).is_err());
    assert!(IfsSpec::new(1, 4, 0.3, 1).is_err());
}

#[test]
fn atom_examples() {
    let one = atoms_at_depth(&build_ifs(3, 2.5, 0).unwrap()).unwrap();
    assert_eq!(one.len(), 1);
    assert_eq!(one.weight(0), 1.0);
    assert_eq!(one.point(0), &[0.5, 0.5, 0.5]);

    let line = IfsSpec::new(1, 4, 0.25, 1).unwrap().atoms().unwrap();
    assert_eq!(line.points().coords(), &[0.125, 0.375, 0.625, 0.875]);
    assert!(line.weights().iter().all(|&w| w == 0.25));

    let spec = build_ifs(3, 2.93, 2).unwrap();
    let mu = spec.atoms().unwrap();
    assert_eq!(mu.len(), 4096);
    assert!(mu.weights().iter().all(|&w| w == 1.0 / 4096.0));
    assert_eq!(mu.weights().iter().sum::<f64>(), 1.0);
    assert!((spec.cylinder_diameter() - spec.r * spec.r * 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn atom_budget() {
    assert!(build_ifs(3, 3.0, 8).unwrap().atoms().is_err());
}

#[test]
fn ifs_json_round_trip() {
    let spec = build_ifs(2, 1.7, 3).unwrap();
    let text = serde_json::to_string(&spec).unwrap();
    let back: IfsSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(spec, back);
}

#[test]
fn csv_round_trip() {
    let mu = build_ifs(2, 1.5, 2).unwrap().atoms().unwrap();
    let mut buf = Vec::new();
    mu.write_csv(&mut buf).unwrap();
    let back = DiscreteMeasure::read_csv(buf.as_slice()).unwrap();
    assert_eq!(mu, back);
    let plain = DiscreteMeasure::read_csv("x_1,x_2\n0,0\n1,1\n".as_bytes()).unwrap();
    assert_eq!(plain.weights(), &[0.5, 0.5]);
}

/// Largest number of atoms within `rho` of any of the given centers, by
/// direct scan.
fn count_oracle(mu: &DiscreteMeasure, rho: f64, centers: &[usize]) -> f64 {
    centers
        .iter()
        .map(|&c| {
            (0..mu.len())
                .filter(|&i| {
                    let d: f64 =
                        mu.point(i).iter().zip(mu.point(c)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    d <= rho
                })
                .map(|i| mu.weight(i))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[test]
fn ball_mass_on_uniform_grid() {
    let mu = IfsSpec::new(1, 4, 0.25, 3).unwrap().atoms().unwrap();
    let centers: Vec<usize> = (0..mu.len()).collect();
    let radii = [1.0 / 16.0, 0.25];
    let prof = ball_mass_profile(&mu, &radii, &centers).unwrap();
    for &(rho, mass) in &prof.rows {
        assert!((mass - count_oracle(&mu, rho, &centers)).abs() < 1e-12);
    }
    // closed balls of radius rho hold 2 rho (1 + grid edge) of the mass
    assert!((prof.rows[0].1 - 9.0 / 64.0).abs() < 1e-12);
    assert!((prof.rows[1].1 - 33.0 / 64.0).abs() < 1e-12);
    assert!((prof.slope.unwrap() - 1.0).abs() < 0.15);
}

#[test]
fn ball_mass_of_single_atom() {
    let mu = DiscreteMeasure::uniform(PointSet::from_rows(&[[0.2, 0.4]]).unwrap()).unwrap();
    let prof = ball_mass_profile(&mu, &[0.01, 0.1, 1.0], &[0]).unwrap();
    assert!(prof.rows.iter().all(|r| r.1 == 1.0));
    assert_eq!(prof.slope, Some(0.0));
    assert!(ball_mass_profile(&mu, &[], &[0]).is_err());
    assert!(ball_mass_profile(&mu, &[0.2, 0.1], &[0]).is_err());
}

#[test]
fn cantor_slope() {
    let mu = cantor(5);
    let centers: Vec<usize> = (0..mu.len()).collect();
    // radii slightly above 3^-j keep the ball boundaries off the atom lattice
    let radii: Vec<f64> = (1..5).rev().map(|j| 1.01 * 3f64.powi(-j)).collect();
    let prof = ball_mass_profile(&mu, &radii, &centers).unwrap();
    for &(rho, mass) in &prof.rows {
        assert!((mass - count_oracle(&mu, rho, &centers)).abs() < 1e-12);
    }
    let want = 2f64.ln() / 3f64.ln();
    assert!((prof.slope.unwrap() - want).abs() < 0.1, "{:?}", prof.slope);
}

#[test]
fn product_cantor_frostman_slope() {
    for (d, s) in [(1, 0.8), (2, 1.5)] {
        let spec = build_ifs(d, s, 4).unwrap();
        let mu = spec.atoms().unwrap();
        let centers: Vec<usize> = (0..mu.len()).step_by(7).collect();
        let radii: Vec<f64> = (1..4).rev().map(|j| spec.r.powi(j) * 0.999).collect();
        let slope = ball_mass_profile(&mu, &radii, &centers).unwrap().slope.unwrap();
        assert!((slope - s).abs() < 0.1, "d={d} s={s}: slope {slope}");
    }
}

#[test]
fn loglog_fit() {
    let rows: Vec<(f64, f64)> = [0.1, 0.2, 0.4].iter().map(|&x: &f64| (x, 3.0 * x.powf(1.7))).collect();
    assert!((fit_loglog_slope(&rows).unwrap() - 1.7).abs() < 1e-12);
    assert_eq!(fit_loglog_slope(&rows[..1]), None);
}

#[test]
fn riesz_examples() {
    let two = DiscreteMeasure::uniform(PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap()).unwrap();
    assert!((riesz_energy(&two, 1.0).unwrap() - 0.5).abs() < 1e-15);
    let sq = DiscreteMeasure::uniform(
        PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap(),
    )
    .unwrap();
    let want = (8.0 + 4.0 / 2f64.sqrt()) / 16.0;
    assert!((riesz_energy(&sq, 1.0).unwrap() - want).abs() < 1e-15);
    assert!(riesz_energy(&sq, 2.0).is_err());
    assert!(riesz_energy(&sq, 0.0).is_err());
}

#[test]
fn riesz_monotone_in_exponent() {
    let mu = build_ifs(2, 1.5, 2).unwrap().atoms().unwrap();
    let vals: Vec<f64> = [0.2, 0.5, 1.0, 1.4, 1.9].iter().map(|&s| riesz_energy(&mu, s).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
}

#[test]
fn riesz_across_cantor_depths() {
    let below: Vec<f64> = (3..=12).map(|k| riesz_energy(&cantor(k), 0.5).unwrap()).collect();
    // increments shrink geometrically, so the values form a Cauchy sequence
    let steps: Vec<f64> = below.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(steps.iter().all(|&s| s > 0.0));
    assert!(steps.windows(2).all(|w| w[1] < 0.9 * w[0]), "{steps:?}");
    let ratios: Vec<f64> = below.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios[ratios.len() - 1] < 1.05, "{ratios:?}");

    let above: Vec<f64> = (3..=12).map(|k| riesz_energy(&cantor(k), 0.9).unwrap()).collect();
    assert!(above.windows(2).all(|w| w[1] / w[0] > 1.05), "{above:?}");
}
