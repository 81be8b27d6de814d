//! Realizable PAC learning with sphere classifiers `h_y(x) = 1` iff
//! `| |x - y| - t | <= delta_tol`, learned by empirical risk minimization
//! over a finite set of candidate centers.

use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{out_of_range, Error, Result};
use crate::integrals::shard_rng;
use crate::points::{distance, in_shell, PointSet};
use crate::sum::compensated_sum;

#[derive(Clone, Debug)]
pub struct PacTask {
    pub domain_points: PointSet,
    /// Sampling distribution over the domain points.
    pub weights: Vec<f64>,
    pub candidate_centers: PointSet,
    pub true_center: usize,
    pub t: f64,
    pub delta_tol: f64,
    /// `labels[c][i]` is `h_c(x_i)`.
    labels: Vec<Vec<bool>>,
}

impl PacTask {
    pub fn new(
        domain_points: PointSet,
        weights: Vec<f64>,
        candidate_centers: PointSet,
        true_center: usize,
        t: f64,
        delta_tol: f64,
    ) -> Result<Self> {
        if domain_points.is_empty() {
            return Err(Error::Empty("domain"));
        }
        if domain_points.dim() != candidate_centers.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain_points.dim(),
                got: candidate_centers.dim(),
            });
        }
        if weights.len() != domain_points.len() || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(out_of_range("weights", "need one finite non-negative weight per domain point"));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(out_of_range("weights", format!("sum to {total}, expected 1")));
        }
        if true_center >= candidate_centers.len() {
            return Err(out_of_range(
                "true_center",
                format!("{true_center} but only {} candidates", candidate_centers.len()),
            ));
        }
        if !(t > 0.0 && delta_tol >= 0.0 && delta_tol < t) {
            return Err(out_of_range("delta_tol", "need 0 <= delta_tol < t"));
        }
        let labels = candidate_centers
            .iter()
            .map(|y| domain_points.iter().map(|x| in_shell(distance(x, y), t, delta_tol)).collect())
            .collect();
        Ok(Self {
            domain_points,
            weights,
            candidate_centers,
            true_center,
            t,
            delta_tol,
            labels,
        })
    }

    pub fn candidates(&self) -> usize {
        self.candidate_centers.len()
    }

    /// `h_{y*}(x_i)`.
    pub fn label(&self, i: usize) -> bool {
        self.labels[self.true_center][i]
    }

    pub fn hypothesis(&self, c: usize) -> &[bool] {
        &self.labels[c]
    }

    /// Exact `P_{x ~ D}[h_c(x) != h_{y*}(x)]`.
    pub fn risk(&self, c: usize) -> f64 {
        let (h, f) = (&self.labels[c], &self.labels[self.true_center]);
        compensated_sum((0..h.len()).filter(|&i| h[i] != f[i]).map(|i| self.weights[i])).clamp(0.0, 1.0)
    }

    /// Monte Carlo estimate of `risk(c)` with its standard error.
    pub fn risk_monte_carlo(&self, c: usize, samples: u64, seed: u64) -> Result<(f64, f64)> {
        if samples == 0 {
            return Err(out_of_range("samples", "must be at least 1"));
        }
        let picker = WeightedIndex::new(&self.weights).map_err(|e| out_of_range("weights", e.to_string()))?;
        let (h, f) = (&self.labels[c], &self.labels[self.true_center]);
        let mut rng = shard_rng(seed, 0);
        let hits = (0..samples)
            .filter(|_| {
                let i = picker.sample(&mut rng);
                h[i] != f[i]
            })
            .count() as f64;
        let n = samples as f64;
        let p = hits / n;
        Ok((p, (p * (1.0 - p) / n).sqrt()))
    }

    /// Size of the largest shattered subset of the domain, searched up to
    /// `max_k` points.
    pub fn shattered_dimension(&self, max_k: usize) -> usize {
        let n = self.domain_points.len();
        let mut level: Vec<Vec<usize>> = vec![Vec::new()];
        let mut best = 0;
        for k in 1..=max_k.min(n) {
            let mut next = Vec::new();
            for set in &level {
                let start = set.last().map_or(0, |&l| l + 1);
                for i in start..n {
                    let mut s = set.clone();
                    s.push(i);
                    if self.shatters(&s) {
                        next.push(s);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            best = k;
            level = next;
        }
        best
    }

    fn shatters(&self, set: &[usize]) -> bool {
        let mut seen = vec![false; 1 << set.len()];
        for h in &self.labels {
            let pattern = set.iter().enumerate().fold(0usize, |acc, (b, &i)| acc | (usize::from(h[i]) << b));
            seen[pattern] = true;
        }
        seen.iter().all(|&s| s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Example {
    /// Index into the domain points.
    pub point: usize,
    pub label: bool,
}

/// Candidate with the fewest mismatches on `sample`, lowest index on ties.
pub fn erm_learn(task: &PacTask, sample: &[Example]) -> Result<usize> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    if let Some(e) = sample.iter().find(|e| e.point >= task.domain_points.len()) {
        return Err(out_of_range("sample", format!("point index {} out of range", e.point)));
    }
    let mut best = (usize::MAX, 0);
    for (c, h) in task.labels.iter().enumerate() {
        let miss = sample.iter().filter(|e| h[e.point] != e.label).count();
        if miss < best.0 {
            best = (miss, c);
            if miss == 0 {
                break;
            }
        }
    }
    Ok(best.1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PacResult {
    pub m: usize,
    pub trials: usize,
    /// True risk of the learned hypothesis per trial.
    pub errors: Vec<f64>,
    pub seed: u64,
}

impl PacResult {
    pub fn success_fraction(&self, epsilon: f64) -> f64 {
        self.errors.iter().filter(|&&e| e <= epsilon).count() as f64 / self.trials as f64
    }

    pub fn median_risk(&self) -> f64 {
        let mut e = self.errors.clone();
        e.sort_by(f64::total_cmp);
        let n = e.len();
        if n % 2 == 1 {
            e[n / 2]
        } else {
            (e[n / 2 - 1] + e[n / 2]) / 2.0
        }
    }
}

/// Runs `trials` independent rounds of: draw `m` labeled examples from `D`,
/// learn by ERM, record the exact risk. Trial `i` uses stream `i` of `seed`,
/// so results do not depend on the thread count.
pub fn pac_trial(task: &PacTask, m: usize, trials: usize, seed: u64) -> Result<PacResult> {
    if m == 0 || trials == 0 {
        return Err(out_of_range("m, trials", "both must be at least 1"));
    }
    let picker = WeightedIndex::new(&task.weights).map_err(|e| out_of_range("weights", e.to_string()))?;
    let errors = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = shard_rng(seed, trial as u64);
            let sample: Vec<Example> = (0..m)
                .map(|_| {
                    let i = picker.sample(&mut rng);
                    Example {
                        point: i,
                        label: task.label(i),
                    }
                })
                .collect();
            erm_learn(task, &sample).map(|c| task.risk(c))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PacResult { m, trials, errors, seed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub m: usize,
    pub success_fraction: f64,
    pub median_risk: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleComplexity {
    pub rows: Vec<CurveRow>,
    pub epsilon: f64,
    pub delta: f64,
    /// Smallest listed `m` whose success fraction reaches `1 - delta`.
    pub m_star: Option<usize>,
    /// Shattered dimension of the candidate class on the domain.
    pub vc_dimension: usize,
    /// `(n log(1/ε) + log(1/δ)) / ε` with `n` the shattered dimension.
    pub reference_shape: f64,
    /// `m_star / reference_shape`, when `m_star` exists.
    pub fitted_constant: Option<f64>,
}

/// Largest shattered set considered when reporting the class dimension.
const MAX_REPORTED_DIM: usize = 6;

/// Success fraction per sample size and the empirical sample complexity at
/// `(epsilon, delta)`, alongside the upper-bound shape.
pub fn sample_complexity_curve(
    task: &PacTask,
    m_list: &[usize],
    trials: usize,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<SampleComplexity> {
    if m_list.is_empty() {
        return Err(Error::Empty("m list"));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(out_of_range("m list", "must be strictly increasing"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0 && delta > 0.0 && delta < 1.0) {
        return Err(out_of_range("epsilon, delta", "both must lie in (0, 1)"));
    }
    let rows = m_list
        .iter()
        .map(|&m| {
            let r = pac_trial(task, m, trials, seed)?;
            Ok(CurveRow {
                m,
                success_fraction: r.success_fraction(epsilon),
                median_risk: r.median_risk(),
                trials,
                seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let m_star = rows.iter().find(|r| r.success_fraction >= 1.0 - delta).map(|r| r.m);
    let n = task.shattered_dimension(MAX_REPORTED_DIM);
    let reference_shape = (n as f64 * (1.0 / epsilon).ln() + (1.0 / delta).ln()) / epsilon;
    Ok(SampleComplexity {
        rows,
        epsilon,
        delta,
        m_star,
        vc_dimension: n,
        reference_shape,
        fitted_constant: m_star.map(|m| m as f64 / reference_shape),
    })
}

pub const CURVE_HEADER: [&str; 5] = ["m", "success_fraction", "median_risk", "trials", "seed"];

pub fn write_curve_csv<W: Write>(writer: W, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CURVE_HEADER)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.success_fraction.to_string(),
            r.median_risk.to_string(),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pair of tasks on the planted 3-shattering configuration. The domain is
/// `x_1, x_2, x_3` (weight 0.1 each) and one far point (weight 0.7); the
/// target is `y_123`. The first task keeps centers `y_I` for
/// `I ⊆ {1,2}` plus the target (shattered dimension 2), the second keeps all
/// eight (dimension 3). Centers are listed by subset size so that ERM
/// prefers the smallest consistent positive set.
pub fn paired_vc_instances() -> Result<(PacTask, PacTask)> {
    let planted = crate::fixtures::k3_witness()?;
    let t = crate::fixtures::WITNESS_T;
    let mut domain = planted.select(&[0, 1, 2]);
    domain.push(&[10.0, 10.0, 10.0])?;
    let weights = vec![0.1, 0.1, 0.1, 0.7];
    // atom 3 + mask holds y_mask
    let by_size = |masks: &[usize]| planted.select(&masks.iter().map(|m| 3 + m).collect::<Vec<_>>());
    let small = by_size(&[0b000, 0b001, 0b010, 0b011, 0b111]);
    let large = by_size(&[0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111]);
    let tol = 1e-9;
    Ok((
        PacTask::new(domain.clone(), weights.clone(), small, 4, t, tol)?,
        PacTask::new(domain, weights, large, 7, t, tol)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_task(centers: &[[f64; 1]], truth: usize) -> PacTask {
        let domain = PointSet::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        PacTask::new(
            domain,
            vec![0.25; 4],
            PointSet::from_rows(centers).unwrap(),
            truth,
            1.0,
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn single_candidate_is_learned() {
        let task = line_task(&[[1.0]], 0);
        let sample = [Example { point: 0, label: true }];
        assert_eq!(erm_learn(&task, &sample).unwrap(), 0);
        assert!(erm_learn(&task, &[]).is_err());
    }

    #[test]
    fn two_candidates_one_consistent() {
        // center 1 labels {0, 2}; center 2.5 labels nothing on the grid
        let task = line_task(&[[2.5], [1.0]], 1);
        let sample = [
            Example { point: 0, label: true },
            Example { point: 1, label: false },
        ];
        assert_eq!(erm_learn(&task, &sample).unwrap(), 1);
        assert_eq!(task.risk(1), 0.0);
        assert_eq!(task.risk(0), 0.5);
    }

    #[test]
    fn paired_dimensions() {
        let (small, large) = paired_vc_instances().unwrap();
        assert_eq!(small.shattered_dimension(4), 2);
        assert_eq!(large.shattered_dimension(4), 3);
        assert_eq!(small.risk(small.true_center), 0.0);
        assert_eq!(large.risk(large.true_center), 0.0);
    }
}
