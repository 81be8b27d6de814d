//! Sampling estimators. Work is split into a fixed number of shards, each
//! with its own ChaCha stream, and shard sums are combined in shard order, so
//! the estimate depends only on the seed and not on the thread count.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{ConfigurationEstimate, Method, Problem};
use crate::error::{out_of_range, Result};
use crate::graph::ConfigGraph;
use crate::kernel::{KernelSpec, SpatialGrid};
use crate::measure::DiscreteMeasure;
use crate::sum::Accumulator;

pub const SHARDS: u64 = 64;

pub(crate) fn shard_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

fn shard_sizes(n: u64) -> Vec<u64> {
    (0..SHARDS).map(|s| n / SHARDS + u64::from(s < n % SHARDS)).collect()
}

/// Runs `draw` `n` times across the shards and returns mean and standard error.
fn sharded<F>(n: u64, seed: u64, draw: F) -> Result<(f64, f64)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(out_of_range("n_samples", "must be at least 1"));
    }
    let parts: Vec<Result<(Accumulator, Accumulator)>> = shard_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(shard, count)| {
            let mut rng = shard_rng(seed, shard as u64);
            let mut sum = Accumulator::new();
            let mut sq = Accumulator::new();
            for _ in 0..count {
                let v = draw(&mut rng)?;
                sum.add(v);
                sq.add(v * v);
            }
            Ok((sum, sq))
        })
        .collect();
    let mut sum = Accumulator::new();
    let mut sq = Accumulator::new();
    for part in parts {
        let (s, q) = part?;
        sum.merge(&s);
        sq.merge(&q);
    }
    let nf = n as f64;
    let mean = sum.value() / nf;
    let se = if n > 1 {
        let var = ((sq.value() - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (var / nf).sqrt()
    } else {
        0.0
    };
    Ok((mean, se))
}

/// Plain Monte Carlo: tuples drawn i.i.d. from `μ^(n+1)`, integrand averaged.
pub fn lambda_monte_carlo(
    g: &ConfigGraph,
    mu: &DiscreteMeasure,
    k: &KernelSpec,
    c: f64,
    n_samples: u64,
    seed: u64,
) -> Result<ConfigurationEstimate> {
    let p = Problem::new(g, mu, k, c)?;
    let picker = WeightedIndex::new(mu.weights()).expect("validated weights");
    let edges: usize = p.earlier.iter().map(Vec::len).sum();
    let full = p.inv_z.powi(edges as i32);
    let (value, std_error) = sharded(n_samples, seed, |rng| {
        let mut assign = [0usize; super::MAX_VERTICES];
        for slot in assign.iter_mut().take(p.n_vertices) {
            *slot = picker.sample(rng);
        }
        let hit = (0..p.n_vertices)
            .all(|j| p.earlier[j].iter().all(|&i| p.edge(assign[i], assign[j])) && p.nondegenerate(j, &assign));
        Ok(if hit { full } else { 0.0 })
    })?;
    Ok(ConfigurationEstimate {
        value,
        method: Method::MonteCarlo,
        samples: n_samples,
        std_error,
        seed: Some(seed),
    })
}

/// Shell of one atom with cumulative weights for proportional sampling.
struct Shell {
    center: usize,
    atoms: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Shell {
    fn new(p: &Problem, grid: &SpatialGrid, center: usize) -> Self {
        let atoms = grid.annulus(p.mu.points(), p.mu.point(center), p.kernel.t, p.kernel.epsilon);
        let mut total = 0.0;
        let cumulative = atoms
            .iter()
            .map(|&a| {
                total += p.mu.weight(a);
                total
            })
            .collect();
        Self {
            center,
            atoms,
            cumulative,
        }
    }

    fn mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let u = rng.gen::<f64>() * self.mass();
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.atoms[i.min(self.atoms.len() - 1)]
    }
}

/// Sequential estimator for large measures. Vertex 0 is drawn from `μ`;
/// each later vertex with earlier neighbors is drawn from the shell of its
/// first earlier neighbor in proportion to weight (importance factor
/// `mass / Z`), and the last vertex is summed exactly. Unbiased for any
/// graph; shells are queried on demand, so no neighbor lists are stored.
pub fn lambda_sequential(
    g: &ConfigGraph,
    mu: &DiscreteMeasure,
    k: &KernelSpec,
    c: f64,
    n_samples: u64,
    seed: u64,
) -> Result<ConfigurationEstimate> {
    let p = Problem::new(g, mu, k, c)?;
    let grid = p.grid()?;
    let picker = WeightedIndex::new(mu.weights()).expect("validated weights");
    let last = p.n_vertices - 1;
    let (value, std_error) = sharded(n_samples, seed, |rng| {
        let mut assign = [0usize; super::MAX_VERTICES];
        let mut shells: Vec<Shell> = Vec::new();
        let mut factor = 1.0;
        for j in 0..last {
            let e = &p.earlier[j];
            match e.first() {
                None => assign[j] = picker.sample(rng),
                Some(&parent) => {
                    let center = assign[parent];
                    let si = match shells.iter().position(|s| s.center == center) {
                        Some(si) => si,
                        None => {
                            shells.push(Shell::new(&p, &grid, center));
                            shells.len() - 1
                        }
                    };
                    let shell = &shells[si];
                    if shell.atoms.is_empty() {
                        return Ok(0.0);
                    }
                    assign[j] = shell.sample(rng);
                    factor *= shell.mass() * p.inv_z;
                    if !e.iter().skip(1).all(|&i| p.edge(assign[i], assign[j])) {
                        return Ok(0.0);
                    }
                    factor *= p.inv_z.powi(e.len() as i32 - 1);
                }
            }
            if !p.nondegenerate(j, &assign) {
                return Ok(0.0);
            }
        }
        // exact sum over the last vertex
        let e = &p.earlier[last];
        let cands: Vec<usize> = match e.first() {
            Some(&parent) => match shells.iter().find(|s| s.center == assign[parent]) {
                Some(s) => s.atoms.clone(),
                None => Shell::new(&p, &grid, assign[parent]).atoms,
            },
            None => (0..p.atoms()).collect(),
        };
        let mut inner = Accumulator::new();
        for y in cands {
            assign[last] = y;
            if e.iter().skip(1).all(|&i| p.edge(assign[i], y)) && p.nondegenerate(last, &assign) {
                inner.add(p.mu.weight(y));
            }
        }
        Ok(factor * inner.value() * p.inv_z.powi(e.len() as i32))
    })?;
    Ok(ConfigurationEstimate {
        value,
        method: Method::SequentialMc,
        samples: n_samples,
        std_error,
        seed: Some(seed),
    })
}
