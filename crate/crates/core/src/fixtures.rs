//! Deterministic point sets and measures used by tests and the CLI.

use std::io::Write;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measure::{build_ifs, DiscreteMeasure};
use crate::points::PointSet;

pub const FIXTURE_NAMES: [&str; 6] = [
    "planted-square",
    "square-noise",
    "fig6-witness",
    "k3-witness",
    "cantor-2.93",
    "unit-cube-uniform",
];

/// Side of the planted square.
pub const PLANTED_SQUARE_T: f64 = 0.25;
pub const NOISE_POINTS: usize = 1000;
const NOISE_SEED: u64 = 0x5eed_0001;
/// Radius realized by the designed witness sets.
pub const WITNESS_T: f64 = 1.0;
const K3_NOISE_POINTS: usize = 24;
const K3_NOISE_SEED: u64 = 0x5eed_0003;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub points: PointSet,
    /// Present for measures, absent for plain point sets.
    pub weights: Option<Vec<f64>>,
    /// Natural radius for searches on this fixture.
    pub t: f64,
}

impl Fixture {
    pub fn measure(&self) -> Result<DiscreteMeasure> {
        match &self.weights {
            Some(w) => DiscreteMeasure::new(self.points.clone(), w.clone()),
            None => DiscreteMeasure::uniform(self.points.clone()),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.points.write_csv(writer, self.weights.as_deref())
    }
}

pub fn fixture(name: &str) -> Result<Fixture> {
    let (name, points, weights, t) = match name {
        "planted-square" => {
            let mut pts = planted_square_corners();
            pts.extend(&square_noise())?;
            ("planted-square", pts, None, PLANTED_SQUARE_T)
        }
        "square-noise" => ("square-noise", square_noise(), None, PLANTED_SQUARE_T),
        "fig6-witness" => ("fig6-witness", fig6_witness(), None, WITNESS_T),
        "k3-witness" => ("k3-witness", k3_witness()?, None, WITNESS_T),
        "cantor-2.93" => {
            let mu = build_ifs(3, 2.93, 2)?.atoms()?;
            ("cantor-2.93", mu.points().clone(), Some(mu.weights().to_vec()), 0.25)
        }
        "unit-cube-uniform" => {
            let mu = build_ifs(3, 3.0, 2)?.atoms()?;
            ("unit-cube-uniform", mu.points().clone(), Some(mu.weights().to_vec()), 0.25)
        }
        other => return Err(Error::UnknownFixture(other.to_string())),
    };
    Ok(Fixture {
        name,
        points,
        weights,
        t,
    })
}

/// Corners of a rotated square of side `PLANTED_SQUARE_T` inside the unit
/// square, in cycle order.
pub fn planted_square_corners() -> PointSet {
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let origin = [0.37, 0.29];
    let unit = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let rows: Vec<[f64; 2]> = unit
        .iter()
        .map(|&[a, b]| {
            let (a, b) = (a * PLANTED_SQUARE_T, b * PLANTED_SQUARE_T);
            [origin[0] + c * a - s * b, origin[1] + s * a + c * b]
        })
        .collect();
    PointSet::from_rows(&rows).expect("2-d rows")
}

fn square_noise() -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(NOISE_SEED);
    let coords: Vec<f64> = (0..2 * NOISE_POINTS).map(|_| rng.gen::<f64>()).collect();
    PointSet::new(2, coords).expect("even length")
}

/// Points `x1, x2, y_empty, y_1, y_2, y_12` in the plane realizing the
/// 2-shattering graph at radius 1.
pub fn fig6_witness() -> PointSet {
    let h = 3f64.sqrt() / 2.0;
    PointSet::from_rows(&[
        [0.0, 0.0],
        [1.0, 0.0],
        [0.5, -3.0],
        [-1.0, 0.0],
        [2.0, 0.0],
        [0.5, h],
    ])
    .expect("2-d rows")
}

/// Planted 3-shattering configuration in space at radius 1: indices 0..3 are
/// `x_1, x_2, x_3` on a circle of radius 0.6 in the plane `z = 0`, index
/// `3 + mask` is `y_I`; seeded noise follows.
pub fn k3_witness() -> Result<PointSet> {
    let rho = 0.6f64;
    let angles = [0.0f64, 1.9, 4.1];
    let xs: Vec<[f64; 3]> = angles.iter().map(|a| [rho * a.cos(), rho * a.sin(), 0.0]).collect();
    let mut rows: Vec<[f64; 3]> = xs.clone();
    for mask in 0..8usize {
        let members: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
        let y = match members.as_slice() {
            [] => [0.3, -0.2, -3.0],
            [i] => {
                // radially outward from x_i
                let x = xs[*i];
                [x[0] / rho * (rho + 1.0), x[1] / rho * (rho + 1.0), 0.0]
            }
            [i, j] => {
                // in-plane point of the circle equidistant from x_i and x_j,
                // on the side of their midpoint away from the origin
                let (a, b) = (xs[*i], xs[*j]);
                let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                let half = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() / 2.0;
                let r = (1.0 - half * half).sqrt();
                let mlen = (m[0] * m[0] + m[1] * m[1]).sqrt();
                [m[0] + r * m[0] / mlen, m[1] + r * m[1] / mlen, 0.0]
            }
            _ => [0.0, 0.0, (1.0 - rho * rho).sqrt()],
        };
        rows.push(y);
    }
    let mut pts = PointSet::from_rows(&rows)?;
    let mut rng = ChaCha8Rng::seed_from_u64(K3_NOISE_SEED);
    for _ in 0..K3_NOISE_POINTS {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        pts.push(&p)?;
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        assert_eq!(fixture("planted-square").unwrap().points.len(), 1004);
        assert_eq!(fixture("square-noise").unwrap().points.len(), 1000);
        assert_eq!(fixture("fig6-witness").unwrap().points.len(), 6);
        assert_eq!(fixture("k3-witness").unwrap().points.len(), 11 + K3_NOISE_POINTS);
        assert_eq!(fixture("unit-cube-uniform").unwrap().points.len(), 4096);
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(fixture("nope"), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn deterministic() {
        let a = fixture("planted-square").unwrap();
        let b = fixture("planted-square").unwrap();
        assert_eq!(a.points, b.points);
    }
}
