//! Exact comparisons between configuration integrals of related graphs.

use rayon::prelude::*;
use serde::Serialize;

use super::exact::{brute_sum, lambda_exact, PairFilter};
use super::{Problem, BRUTE_FORCE_BUDGET};
use crate::error::{out_of_range, Error, Result};
use crate::graph::{deforest, glued_pair, ConfigGraph};
use crate::kernel::{spherical_averages_at_atoms, KernelSpec};
use crate::measure::DiscreteMeasure;
use crate::points::in_shell;
use crate::sum::Accumulator;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeforestationReport {
    pub ratio: f64,
    /// `(a^p, b^p)`.
    pub bounds: (f64, f64),
    /// Smallest and largest spherical average over atoms.
    pub a: f64,
    pub b: f64,
    /// Removed vertices of degree one.
    pub leaves: usize,
    /// Removed vertices of degree zero.
    pub isolated: usize,
    pub lambda_graph: f64,
    pub lambda_core: f64,
}

impl DeforestationReport {
    /// Whether the ratio lies in the bracket up to relative slack `tol`.
    pub fn within_bounds(&self, tol: f64) -> bool {
        self.ratio >= self.bounds.0 * (1.0 - tol) && self.ratio <= self.bounds.1 * (1.0 + tol)
    }
}

/// Compares `Λ_g` with `Λ` of the single-pass deforestation of `g`.
///
/// Every removed leaf contributes one spherical average at its neighbor and
/// every isolated vertex the total mass 1, so the ratio lies in
/// `[a^p, b^p]` with `p` the number of removed leaves. That needs each leaf
/// to follow its (surviving) neighbor in evaluation order and `c < t - ε`,
/// so that the leaf's own non-degeneracy condition always holds.
pub fn deforestation_check(g: &ConfigGraph, mu: &DiscreteMeasure, k: &KernelSpec, c: f64) -> Result<DeforestationReport> {
    let cut = deforest(g, false);
    if cut.leaves.is_empty() && cut.isolated.is_empty() {
        return Err(Error::InvalidGraph("no vertex of degree at most 1".into()));
    }
    if c >= k.t - k.epsilon {
        return Err(out_of_range("c", format!("{c} must be below t - epsilon = {}", k.t - k.epsilon)));
    }
    let pos = g.positions();
    for &leaf in &cut.leaves {
        let nb = g.neighbors(leaf)[0];
        if !cut.kept.contains(&nb) {
            return Err(Error::InvalidGraph(format!(
                "leaf {} is attached to removed vertex {}",
                g.label(leaf),
                g.label(nb)
            )));
        }
        if pos[nb] > pos[leaf] {
            return Err(Error::InvalidGraph(format!(
                "leaf {} precedes its neighbor {} in evaluation order",
                g.label(leaf),
                g.label(nb)
            )));
        }
    }
    let lambda_graph = lambda_exact(g, mu, k, c)?.value;
    let lambda_core = lambda_exact(&cut.graph, mu, k, c)?.value;
    if lambda_core == 0.0 {
        return Err(Error::UndefinedRatio("configuration integral of the deforested graph is 0"));
    }
    let avgs = spherical_averages_at_atoms(mu, k)?;
    let a = avgs.iter().copied().fold(f64::INFINITY, f64::min);
    let b = avgs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let p = cut.leaves.len() as i32;
    Ok(DeforestationReport {
        ratio: lambda_graph / lambda_core,
        bounds: (a.powi(p), b.powi(p)),
        a,
        b,
        leaves: cut.leaves.len(),
        isolated: cut.isolated.len(),
        lambda_graph,
        lambda_core,
    })
}

/// `Σ_{x_0, x_1} w_0 w_1 σ(x_1 - x_0)`, the total mass of the measure on
/// the common vertices of the glued pair.
pub fn nu_total(mu: &DiscreteMeasure, k: &KernelSpec) -> Result<f64> {
    let avgs = spherical_averages_at_atoms(mu, k)?;
    Ok(avgs
        .par_iter()
        .zip(mu.weights())
        .map(|(s, w)| s * w)
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Accumulator>()
        .value())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchySchwarz {
    /// `Λ_H²`.
    pub lhs: f64,
    /// `ν_total · Λ_G`.
    pub rhs: f64,
    pub lambda_h: f64,
    pub lambda_g: f64,
    pub nu_total: f64,
}

impl CauchySchwarz {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs * (1.0 + tol)
    }
}

/// Evaluates both sides of `Λ_H² <= ν_total Λ_G` with `G` written as two
/// copies of `H` glued on their common vertices (see
/// [`crate::graph::glued_pair`]), so that the non-degeneracy set of `G` is
/// the intersection of the two copies' sets. Both integrals are computed by
/// the brute-force oracle.
pub fn cauchy_schwarz_check(mu: &DiscreteMeasure, k: &KernelSpec, c: f64) -> Result<CauchySchwarz> {
    let (g, h) = glued_pair();
    let lambda_h = brute_sum(&Problem::new(&h, mu, k, c)?, None, BRUTE_FORCE_BUDGET)?.0;
    let lambda_g = brute_sum(&Problem::new(&g, mu, k, c)?, None, BRUTE_FORCE_BUDGET)?.0;
    let nu = nu_total(mu, k)?;
    Ok(CauchySchwarz {
        lhs: lambda_h * lambda_h,
        rhs: nu * lambda_g,
        lambda_h,
        lambda_g,
        nu_total: nu,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DegenerateCondition {
    /// `|x_i - x_j| <= delta`.
    VertexCollision(usize, usize),
    /// `| |x_i - x_j| - t | <= delta` for a non-adjacent pair.
    ExtraEdge(usize, usize),
}

/// Share of `Λ_g` carried by tuples meeting `condition` at scale `delta`.
pub fn degenerate_mass(
    g: &ConfigGraph,
    mu: &DiscreteMeasure,
    k: &KernelSpec,
    c: f64,
    condition: DegenerateCondition,
    delta: f64,
) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(out_of_range("delta", format!("{delta} must be positive")));
    }
    let (i, j) = match condition {
        DegenerateCondition::VertexCollision(i, j) | DegenerateCondition::ExtraEdge(i, j) => (i, j),
    };
    let n = g.vertex_count();
    if i >= n || j >= n || i == j {
        return Err(out_of_range("vertex pair", format!("({i}, {j}) must be two distinct vertices below {n}")));
    }
    let pos = g.positions();
    let (lo, hi) = if pos[i] < pos[j] { (pos[i], pos[j]) } else { (pos[j], pos[i]) };
    let t = k.t;
    let collision = move |d: f64| d <= delta;
    let extra = move |d: f64| in_shell(d, t, delta);
    let accept: &(dyn Fn(f64) -> bool + Sync) = match condition {
        DegenerateCondition::VertexCollision(..) => &collision,
        DegenerateCondition::ExtraEdge(..) => &extra,
    };
    let p = Problem::new(g, mu, k, c)?;
    let full = brute_sum(&p, None, BRUTE_FORCE_BUDGET)?.0;
    if full == 0.0 {
        return Err(Error::UndefinedRatio("unrestricted configuration integral is 0"));
    }
    let filter = PairFilter { lo, hi, accept };
    let part = brute_sum(&p, Some(&filter), BRUTE_FORCE_BUDGET)?.0;
    Ok(part / full)
}
