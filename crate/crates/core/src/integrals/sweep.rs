//! Configuration integrals along a sequence of kernel widths.

use std::io::Write;

use serde::Serialize;

use super::exact::{factorization_spine, lambda_factorized};
use super::sampling::lambda_sequential;
use super::ConfigurationEstimate;
use crate::error::{out_of_range, Error, Result};
use crate::graph::ConfigGraph;
use crate::kernel::{unit_ball_volume, KernelSpec};
use crate::measure::{IfsSpec, ATOM_BUDGET};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    /// Samples for the sequential estimator when exact evaluation is too costly.
    pub samples: u64,
    pub seed: u64,
    /// Largest predicted inner-loop count for which the factorized sum is used.
    pub exact_work_limit: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 0,
            exact_work_limit: 2e8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub depth: u32,
    pub atoms: usize,
    pub estimate: ConfigurationEstimate,
}

/// Smallest depth whose cylinder side `r^depth` is at most `epsilon`.
pub fn depth_for_epsilon(spec: &IfsSpec, epsilon: f64) -> u32 {
    let mut depth = 0;
    while spec.r.powi(depth as i32) > epsilon {
        depth += 1;
    }
    depth
}

/// For each width, discretizes `family` at the matching depth and evaluates
/// `Λ_g` with kernel `(k_base.t, ε)`. The factorized sum is used while its
/// predicted work (atoms × atoms within `2(t + ε)` × shell size) stays under
/// the limit; beyond that the sequential estimator takes over.
pub fn epsilon_sweep(
    g: &ConfigGraph,
    family: &IfsSpec,
    k_base: &KernelSpec,
    eps_list: &[f64],
    c: f64,
    opts: &SweepOptions,
) -> Result<Vec<SweepRow>> {
    if eps_list.is_empty() {
        return Err(Error::Empty("epsilon list"));
    }
    if eps_list.windows(2).any(|w| w[0] <= w[1]) {
        return Err(out_of_range("epsilon list", "must be strictly decreasing"));
    }
    let smallest = *eps_list.last().expect("non-empty");
    if family.with_depth(depth_for_epsilon(family, smallest)).atom_count() > ATOM_BUDGET {
        return Err(Error::BudgetExceeded {
            limit: ATOM_BUDGET,
            unit: "atoms",
        });
    }
    let factorizable = factorization_spine(g).is_some();
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let depth = depth_for_epsilon(family, eps);
        let mu = family.with_depth(depth).atoms()?;
        let k = KernelSpec::new(k_base.t, eps, k_base.d)?;
        let n = mu.len() as f64;
        let shell = n * k.normalization().min(1.0);
        let reach = n * (unit_ball_volume(k.d) * (2.0 * (k.t + eps)).powi(k.d as i32)).min(1.0);
        let work = n * reach * shell;
        let estimate = if factorizable && work <= opts.exact_work_limit {
            lambda_factorized(g, &mu, &k, c)?
        } else {
            lambda_sequential(g, &mu, &k, c, opts.samples, opts.seed)?
        };
        rows.push(SweepRow {
            epsilon: eps,
            depth,
            atoms: mu.len(),
            estimate,
        });
    }
    Ok(rows)
}

pub const SWEEP_HEADER: [&str; 8] = ["epsilon", "depth", "atoms", "method", "value", "std_error", "samples", "seed"];

pub fn write_sweep_csv<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.epsilon.to_string(),
            r.depth.to_string(),
            r.atoms.to_string(),
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
