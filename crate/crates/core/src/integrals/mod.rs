//! Configuration integrals `Λ_{G,t,c}^ε μ` over discrete measures.
//!
//! For a graph on vertices `0..=n` (taken in its evaluation order) the
//! integral is the weighted count
//!
//! ```text
//! Σ_{(x_0..x_n) ∈ N_c}  Π_j w(x_j) · Π_{i~j} σ(x_i - x_j)
//! ```
//!
//! where `σ` is the normalized annulus kernel and `N_c` keeps the tuples in
//! which every vertex `j` lies farther than `c` from the affine span of its
//! earlier neighbors `{x_i : i ~ j, i before j}`. A vertex without earlier
//! neighbors is unconstrained.

mod checks;
mod exact;
mod sampling;
mod sweep;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::affine::span_distance;
use crate::error::{out_of_range, Error, Result};
use crate::graph::ConfigGraph;
use crate::kernel::{KernelSpec, SpatialGrid};
use crate::measure::DiscreteMeasure;
use crate::points::distance;

pub use checks::{
    cauchy_schwarz_check, degenerate_mass, deforestation_check, nu_total, CauchySchwarz, DegenerateCondition,
    DeforestationReport,
};
pub use exact::{factorization_spine, lambda_bruteforce, lambda_bruteforce_with_budget, lambda_exact, lambda_factorized};
pub(crate) use sampling::shard_rng;
pub use sampling::{lambda_monte_carlo, lambda_sequential, SHARDS};
pub use sweep::{depth_for_epsilon, epsilon_sweep, write_sweep_csv, SweepOptions, SweepRow, SWEEP_HEADER};

/// Largest graph accepted by the estimators.
pub const MAX_VERTICES: usize = 24;
/// Default limit on partial tuples visited by the brute-force oracle.
pub const BRUTE_FORCE_BUDGET: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    Factorized,
    MonteCarlo,
    /// Sequential sampling along the evaluation order with the last vertex
    /// summed exactly.
    SequentialMc,
}

impl Method {
    pub fn is_exact(self) -> bool {
        matches!(self, Method::BruteForce | Method::Factorized)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::BruteForce => "brute_force",
            Method::Factorized => "factorized",
            Method::MonteCarlo => "monte_carlo",
            Method::SequentialMc => "sequential_mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute_force" => Ok(Method::BruteForce),
            "factorized" => Ok(Method::Factorized),
            "monte_carlo" => Ok(Method::MonteCarlo),
            "sequential_mc" => Ok(Method::SequentialMc),
            _ => Err(out_of_range(
                "method",
                format!("`{s}` is not one of brute_force, factorized, monte_carlo, sequential_mc"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationEstimate {
    pub value: f64,
    pub method: Method,
    /// Tuples visited (exact methods) or samples drawn.
    pub samples: u64,
    /// Zero for exact methods.
    pub std_error: f64,
    pub seed: Option<u64>,
}

impl ConfigurationEstimate {
    pub(crate) fn exact(value: f64, method: Method, visited: u64) -> Self {
        Self {
            value,
            method,
            samples: visited,
            std_error: 0.0,
            seed: None,
        }
    }
}

/// One CSV row `graph,t,epsilon,c,method,value,std_error,samples,seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub graph: String,
    pub t: f64,
    pub epsilon: f64,
    pub c: f64,
    pub estimate: ConfigurationEstimate,
}

pub const RESULT_HEADER: [&str; 9] = ["graph", "t", "epsilon", "c", "method", "value", "std_error", "samples", "seed"];

pub fn write_results_csv<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULT_HEADER)?;
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.graph.clone(),
            r.t.to_string(),
            r.epsilon.to_string(),
            r.c.to_string(),
            e.method.to_string(),
            e.value.to_string(),
            e.std_error.to_string(),
            e.samples.to_string(),
            e.seed.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Evaluates with the requested method. Sampling methods use `samples` and
/// `seed`; exact methods ignore them.
pub fn lambda(
    g: &ConfigGraph,
    mu: &DiscreteMeasure,
    k: &KernelSpec,
    c: f64,
    method: Method,
    samples: u64,
    seed: u64,
) -> Result<ConfigurationEstimate> {
    match method {
        Method::BruteForce => lambda_bruteforce(g, mu, k, c),
        Method::Factorized => lambda_factorized(g, mu, k, c),
        Method::MonteCarlo => lambda_monte_carlo(g, mu, k, c, samples, seed),
        Method::SequentialMc => lambda_sequential(g, mu, k, c, samples, seed),
    }
}

/// Graph, measure and kernel in the form the estimators consume: vertices
/// renumbered so that index equals evaluation position.
pub(crate) struct Problem<'a> {
    pub mu: &'a DiscreteMeasure,
    pub kernel: KernelSpec,
    pub c: f64,
    pub n_vertices: usize,
    pub adjacency: Vec<Vec<usize>>,
    /// Earlier neighbors per vertex, ascending.
    pub earlier: Vec<Vec<usize>>,
    pub inv_z: f64,
    single_anchor_implied: bool,
}

impl<'a> Problem<'a> {
    pub fn new(g: &ConfigGraph, mu: &'a DiscreteMeasure, k: &KernelSpec, c: f64) -> Result<Self> {
        if mu.dim() != k.d {
            return Err(Error::DimensionMismatch {
                expected: k.d,
                got: mu.dim(),
            });
        }
        if !(c > 0.0 && c < k.t) {
            return Err(out_of_range("c", format!("{c} must lie in (0, t = {})", k.t)));
        }
        let n = g.vertex_count();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no vertices".into()));
        }
        if n > MAX_VERTICES {
            return Err(Error::GraphTooLarge {
                vertices: n,
                limit: MAX_VERTICES,
            });
        }
        let g = g.in_evaluation_order();
        let adjacency: Vec<Vec<usize>> = (0..n).map(|v| g.neighbors(v)).collect();
        let earlier = adjacency
            .iter()
            .enumerate()
            .map(|(j, nb)| nb.iter().copied().filter(|&i| i < j).collect())
            .collect();
        Ok(Self {
            mu,
            kernel: *k,
            c,
            n_vertices: n,
            adjacency,
            earlier,
            inv_z: 1.0 / k.normalization(),
            single_anchor_implied: c < (k.t - k.epsilon) * (1.0 - 1e-12),
        })
    }

    #[inline]
    pub fn atoms(&self) -> usize {
        self.mu.len()
    }

    #[inline]
    pub fn edge(&self, a: usize, b: usize) -> bool {
        self.kernel.contains(distance(self.mu.point(a), self.mu.point(b)))
    }

    /// The `N_c` condition of vertex `j` under `assign` (atom per vertex);
    /// reads only `assign[j]` and the entries of `j`'s earlier neighbors.
    /// Callers must also enforce the edges of `j`: a single-anchor condition
    /// is skipped when `c < t - ε`, since the kernel already keeps `x_j` at
    /// distance at least `t - ε` from its neighbor.
    #[inline]
    pub fn nondegenerate(&self, j: usize, assign: &[usize]) -> bool {
        let x = self.mu.point(assign[j]);
        match self.earlier[j].as_slice() {
            [] => true,
            [_] if self.single_anchor_implied => true,
            [a] => distance(x, self.mu.point(assign[*a])) > self.c,
            [a, b] => span_distance(x, &[self.mu.point(assign[*a]), self.mu.point(assign[*b])]) > self.c,
            e => {
                let mut buf: [&[f64]; MAX_VERTICES] = [&[]; MAX_VERTICES];
                for (slot, &i) in buf.iter_mut().zip(e) {
                    *slot = self.mu.point(assign[i]);
                }
                span_distance(x, &buf[..e.len()]) > self.c
            }
        }
    }

    pub fn grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::build(self.mu.points(), self.kernel.epsilon)
    }

    /// Shell neighbor lists of every atom.
    pub fn neighbor_lists(&self, grid: &SpatialGrid) -> Vec<Vec<u32>> {
        let (t, eps) = (self.kernel.t, self.kernel.epsilon);
        (0..self.atoms())
            .into_par_iter()
            .map(|a| {
                grid.annulus(self.mu.points(), self.mu.point(a), t, eps)
                    .into_iter()
                    .map(|i| i as u32)
                    .collect()
            })
            .collect()
    }
}
