//! Exact evaluation: the brute-force oracle and the spine-factorized sum.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use super::{ConfigurationEstimate, Method, Problem, BRUTE_FORCE_BUDGET};
use crate::error::{Error, Result};
use crate::graph::ConfigGraph;
use crate::kernel::{KernelSpec, SpatialGrid};
use crate::measure::DiscreteMeasure;
use crate::points::distance;
use crate::sum::Accumulator;

const MAX_SPINE: usize = 3;

/// Restricts a brute-force sum to tuples whose vertices `lo < hi`
/// (evaluation positions) satisfy `accept(|x_lo - x_hi|)`.
pub(crate) struct PairFilter<'f> {
    pub lo: usize,
    pub hi: usize,
    pub accept: &'f (dyn Fn(f64) -> bool + Sync),
}

pub fn lambda_bruteforce(g: &ConfigGraph, mu: &DiscreteMeasure, k: &KernelSpec, c: f64) -> Result<ConfigurationEstimate> {
    lambda_bruteforce_with_budget(g, mu, k, c, BRUTE_FORCE_BUDGET)
}

/// Enumerates tuples vertex by vertex, drawing each vertex with an earlier
/// neighbor from that neighbor's shell list. `budget` caps the number of
/// partial tuples visited.
pub fn lambda_bruteforce_with_budget(
    g: &ConfigGraph,
    mu: &DiscreteMeasure,
    k: &KernelSpec,
    c: f64,
    budget: u64,
) -> Result<ConfigurationEstimate> {
    let p = Problem::new(g, mu, k, c)?;
    let (value, visited) = brute_sum(&p, None, budget)?;
    Ok(ConfigurationEstimate::exact(value, Method::BruteForce, visited))
}

struct Budget<'c> {
    counter: &'c AtomicU64,
    limit: u64,
    local: u64,
}

impl Budget<'_> {
    const FLUSH: u64 = 4096;

    #[inline]
    fn tick(&mut self) -> Result<()> {
        self.local += 1;
        if self.local == Self::FLUSH {
            self.flush()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<()> {
        let total = self.counter.fetch_add(self.local, Ordering::Relaxed) + self.local;
        self.local = 0;
        if total > self.limit {
            return Err(Error::BudgetExceeded {
                limit: self.limit,
                unit: "partial tuples",
            });
        }
        Ok(())
    }
}

struct Brute<'p, 'a, 'f> {
    p: &'p Problem<'a>,
    lists: &'p [Vec<u32>],
    filter: Option<&'p PairFilter<'f>>,
    zpow: Vec<f64>,
}

impl Brute<'_, '_, '_> {
    fn rec(&self, j: usize, assign: &mut [usize], prod: f64, acc: &mut Accumulator, budget: &mut Budget) -> Result<()> {
        let p = self.p;
        if j == p.n_vertices {
            acc.add(prod);
            return Ok(());
        }
        let e = &p.earlier[j];
        let list: Option<&[u32]> = e.first().map(|&i| self.lists[assign[i]].as_slice());
        let len = list.map_or(p.atoms(), <[u32]>::len);
        for idx in 0..len {
            let a = match list {
                Some(l) => l[idx] as usize,
                None => idx,
            };
            budget.tick()?;
            assign[j] = a;
            if !e.iter().skip(1).all(|&i| p.edge(assign[i], a)) {
                continue;
            }
            if !p.nondegenerate(j, assign) {
                continue;
            }
            if let Some(f) = self.filter {
                if f.hi == j && !(f.accept)(distance(p.mu.point(assign[f.lo]), p.mu.point(a))) {
                    continue;
                }
            }
            self.rec(j + 1, assign, prod * p.mu.weight(a) * self.zpow[j], acc, budget)?;
        }
        Ok(())
    }
}

pub(crate) fn brute_sum(p: &Problem, filter: Option<&PairFilter>, budget: u64) -> Result<(f64, u64)> {
    let grid = p.grid()?;
    let lists = p.neighbor_lists(&grid);
    let walker = Brute {
        p,
        lists: &lists,
        filter,
        zpow: p.earlier.iter().map(|e| p.inv_z.powi(e.len() as i32)).collect(),
    };
    let counter = AtomicU64::new(0);
    let parts: Vec<Result<Accumulator>> = (0..p.atoms())
        .into_par_iter()
        .map(|a| {
            let mut b = Budget {
                counter: &counter,
                limit: budget,
                local: 0,
            };
            let mut assign = vec![0usize; p.n_vertices];
            assign[0] = a;
            let mut acc = Accumulator::new();
            b.tick()?;
            walker.rec(1, &mut assign, p.mu.weight(a), &mut acc, &mut b)?;
            b.flush()?;
            Ok(acc)
        })
        .collect();
    let mut total = Accumulator::new();
    for part in parts {
        total.merge(&part?);
    }
    Ok((total.value(), counter.load(Ordering::Relaxed)))
}

/// Evaluates by summing over assignments of a small vertex set (the spine)
/// whose complement is independent, so every other vertex contributes an
/// independent inner sum. Each spine vertex may have at most one earlier
/// neighbor outside the spine; its non-degeneracy condition is folded into
/// that vertex's inner sum.
pub fn lambda_factorized(g: &ConfigGraph, mu: &DiscreteMeasure, k: &KernelSpec, c: f64) -> Result<ConfigurationEstimate> {
    let p = Problem::new(g, mu, k, c)?;
    let plan = Plan::new(&p).ok_or_else(|| {
        Error::UnsupportedGraph(format!(
            "no vertex set of size at most {MAX_SPINE} with independent complement and foldable constraints"
        ))
    })?;
    let (value, tuples) = plan.evaluate(&p)?;
    Ok(ConfigurationEstimate::exact(value, Method::Factorized, tuples))
}

/// Factorized when the graph admits a spine, brute force otherwise.
pub fn lambda_exact(g: &ConfigGraph, mu: &DiscreteMeasure, k: &KernelSpec, c: f64) -> Result<ConfigurationEstimate> {
    match lambda_factorized(g, mu, k, c) {
        Err(Error::UnsupportedGraph(_)) => lambda_bruteforce(g, mu, k, c),
        other => other,
    }
}

/// Spine chosen by the factorized evaluator, as vertex indices of `g`.
pub fn factorization_spine(g: &ConfigGraph) -> Option<Vec<usize>> {
    let n = g.vertex_count();
    let ordered = g.in_evaluation_order();
    let adjacency: Vec<Vec<usize>> = (0..n).map(|v| ordered.neighbors(v)).collect();
    let earlier: Vec<Vec<usize>> = adjacency
        .iter()
        .enumerate()
        .map(|(j, nb)| nb.iter().copied().filter(|&i| i < j).collect())
        .collect();
    let spine = find_spine(&adjacency, &earlier)?;
    Some(spine.into_iter().map(|pos| g.ordering()[pos]).collect())
}

fn find_spine(adjacency: &[Vec<usize>], earlier: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adjacency.len();
    for size in 1..=MAX_SPINE.min(n) {
        let mut combo: Vec<usize> = (0..size).collect();
        loop {
            if spine_valid(&combo, adjacency, earlier) {
                return Some(combo);
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    None
}

/// Advances to the next `combo.len()`-subset of `0..n` in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let size = combo.len();
    for i in (0..size).rev() {
        if combo[i] < n - size + i {
            combo[i] += 1;
            for k in i + 1..size {
                combo[k] = combo[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn spine_valid(spine: &[usize], adjacency: &[Vec<usize>], earlier: &[Vec<usize>]) -> bool {
    let n = adjacency.len();
    let mut in_s = vec![false; n];
    for &s in spine {
        in_s[s] = true;
    }
    let independent = (0..n).filter(|&v| !in_s[v]).all(|v| adjacency[v].iter().all(|&u| in_s[u]));
    independent && spine.iter().all(|&j| earlier[j].iter().filter(|&&i| !in_s[i]).count() <= 1)
}

struct Group {
    v: usize,
    nbrs: Vec<usize>,
    /// Vertices whose non-degeneracy condition involves `v`.
    checks: Vec<usize>,
    zpow: f64,
}

struct Level {
    vertex: usize,
    /// Earlier spine vertices adjacent to this one.
    adjacent: Vec<usize>,
    /// Earlier spine vertices sharing a non-spine neighbor with this one.
    near: Vec<usize>,
    /// Non-degeneracy of this vertex depends on spine vertices only.
    own_check: bool,
    zpow: f64,
    /// Inner sums that become available once this level is assigned.
    groups: Vec<usize>,
}

/// Inner sums at the last level that share their candidate source.
struct Bundle {
    key: Vec<usize>,
    /// `(group index, dense row)`.
    groups: Vec<(usize, usize)>,
}

struct Plan {
    levels: Vec<Level>,
    groups: Vec<Group>,
    /// Last-level groups accumulated densely over the last spine vertex.
    bundles: Vec<Bundle>,
    dense: Vec<usize>,
    /// Last-level groups summed directly per last-vertex candidate.
    direct_last: Vec<usize>,
    reach: f64,
}

impl Plan {
    fn new(p: &Problem) -> Option<Self> {
        let spine = find_spine(&p.adjacency, &p.earlier)?;
        let n = p.n_vertices;
        let mut level_of = vec![usize::MAX; n];
        for (l, &s) in spine.iter().enumerate() {
            level_of[s] = l;
        }
        let in_s = |v: usize| level_of[v] != usize::MAX;

        let mut groups = Vec::new();
        for v in (0..n).filter(|&v| !in_s(v)) {
            let mut checks = Vec::new();
            if !p.earlier[v].is_empty() {
                checks.push(v);
            }
            for &j in &spine {
                if p.earlier[j].contains(&v) {
                    checks.push(j);
                }
            }
            groups.push(Group {
                v,
                nbrs: p.adjacency[v].clone(),
                checks,
                zpow: p.inv_z.powi(p.adjacency[v].len() as i32),
            });
        }

        let mut levels: Vec<Level> = spine
            .iter()
            .map(|&s| {
                let adjacent: Vec<usize> = p.earlier[s].iter().copied().filter(|&u| in_s(u)).collect();
                let near = spine
                    .iter()
                    .copied()
                    .filter(|&u| u < s && !adjacent.contains(&u))
                    .filter(|&u| groups.iter().any(|g| g.nbrs.contains(&u) && g.nbrs.contains(&s)))
                    .collect();
                Level {
                    vertex: s,
                    own_check: !p.earlier[s].is_empty() && p.earlier[s].iter().all(|&u| in_s(u)),
                    zpow: p.inv_z.powi(adjacent.len() as i32),
                    adjacent,
                    near,
                    groups: Vec::new(),
                }
            })
            .collect();

        for (gi, g) in groups.iter().enumerate() {
            let mut deps: Vec<usize> = g.nbrs.clone();
            for &j in &g.checks {
                deps.push(j);
                deps.extend(p.earlier[j].iter().copied());
            }
            let ready = deps
                .iter()
                .filter(|&&u| u != g.v && in_s(u))
                .map(|&u| level_of[u])
                .max()
                .unwrap_or(0);
            levels[ready].groups.push(gi);
        }

        let last = spine.len() - 1;
        let last_vertex = spine[last];
        let mut bundles: Vec<Bundle> = Vec::new();
        let mut dense = Vec::new();
        let mut direct_last = Vec::new();
        for &gi in &levels[last].groups {
            let g = &groups[gi];
            let key: Vec<usize> = g.nbrs.iter().copied().filter(|&u| u != last_vertex).collect();
            if g.nbrs.contains(&last_vertex) && !key.is_empty() {
                let row = dense.len();
                dense.push(gi);
                match bundles.iter_mut().find(|b| b.key == key) {
                    Some(b) => b.groups.push((gi, row)),
                    None => bundles.push(Bundle {
                        key,
                        groups: vec![(gi, row)],
                    }),
                }
            } else {
                direct_last.push(gi);
            }
        }

        Some(Self {
            levels,
            groups,
            bundles,
            dense,
            direct_last,
            reach: 2.0 * (p.kernel.t + p.kernel.epsilon) * (1.0 + 1e-9),
        })
    }

    fn evaluate(&self, p: &Problem) -> Result<(f64, u64)> {
        let grid = p.grid()?;
        let lists = p.neighbor_lists(&grid);
        let ctx = Ctx {
            p,
            plan: self,
            lists: &lists,
            grid: &grid,
        };
        let n_atoms = p.atoms();
        let parts: Vec<(Accumulator, u64)> = (0..n_atoms)
            .into_par_iter()
            .map_init(
                || Scratch::new(p.n_vertices, n_atoms, self),
                |scratch, a| {
                    let mut acc = Accumulator::new();
                    let mut tuples = 0;
                    ctx.level(0, Some(a), 1.0, scratch, &mut acc, &mut tuples);
                    (acc, tuples)
                },
            )
            .collect();
        let mut total = Accumulator::new();
        let mut tuples = 0;
        for (acc, t) in parts {
            total.merge(&acc);
            tuples += t;
        }
        Ok((total.value(), tuples))
    }
}

struct Scratch {
    assign: Vec<usize>,
    /// One dense accumulator row per entry of `Plan::dense`.
    dense: Vec<Vec<Accumulator>>,
    touched: Vec<Vec<usize>>,
    marked: Vec<Vec<bool>>,
}

impl Scratch {
    fn new(n_vertices: usize, n_atoms: usize, plan: &Plan) -> Self {
        Self {
            assign: vec![0; n_vertices],
            dense: plan.dense.iter().map(|_| vec![Accumulator::new(); n_atoms]).collect(),
            touched: plan.bundles.iter().map(|_| Vec::new()).collect(),
            marked: plan.bundles.iter().map(|_| vec![false; n_atoms]).collect(),
        }
    }
}

struct Ctx<'c, 'a> {
    p: &'c Problem<'a>,
    plan: &'c Plan,
    lists: &'c [Vec<u32>],
    grid: &'c SpatialGrid,
}

impl Ctx<'_, '_> {
    /// Candidates for spine level `l` given the earlier assignments.
    fn candidates(&self, l: usize, assign: &[usize]) -> Vec<usize> {
        let lev = &self.plan.levels[l];
        let p = self.p;
        let base: Vec<usize> = if let Some(&u) = lev.adjacent.first() {
            self.lists[assign[u]].iter().map(|&a| a as usize).collect()
        } else if let Some(&u) = lev.near.first() {
            self.grid.ball(p.mu.points(), p.mu.point(assign[u]), self.plan.reach)
        } else {
            (0..p.atoms()).collect()
        };
        base.into_iter()
            .filter(|&a| {
                lev.adjacent.iter().skip(1).all(|&u| p.edge(assign[u], a))
                    && lev.near.iter().all(|&u| distance(p.mu.point(assign[u]), p.mu.point(a)) <= self.plan.reach)
            })
            .collect()
    }

    /// Spine-only conditions of level `l` once its vertex is assigned.
    fn level_ok(&self, l: usize, assign: &[usize]) -> bool {
        let lev = &self.plan.levels[l];
        !lev.own_check || self.p.nondegenerate(lev.vertex, assign)
    }

    fn group_checks(&self, g: &Group, assign: &[usize]) -> bool {
        g.checks.iter().all(|&j| self.p.nondegenerate(j, assign))
    }

    /// Inner sum of group `gi` with all of its dependencies assigned.
    fn direct(&self, gi: usize, assign: &mut [usize]) -> f64 {
        let g = &self.plan.groups[gi];
        let p = self.p;
        let mut acc = Accumulator::new();
        let mut visit = |y: usize, assign: &mut [usize]| {
            if g.nbrs.iter().skip(1).all(|&u| p.edge(assign[u], y)) {
                assign[g.v] = y;
                if self.group_checks(g, assign) {
                    acc.add(p.mu.weight(y));
                }
            }
        };
        match g.nbrs.first() {
            Some(&u) => {
                for &y in &self.lists[assign[u]] {
                    visit(y as usize, assign);
                }
            }
            None => {
                for y in 0..p.atoms() {
                    visit(y, assign);
                }
            }
        }
        acc.value() * g.zpow
    }

    fn level(&self, l: usize, only: Option<usize>, prod: f64, s: &mut Scratch, acc: &mut Accumulator, tuples: &mut u64) {
        if l + 1 == self.plan.levels.len() {
            self.last(l, only, prod, s, acc, tuples);
            return;
        }
        let lev = &self.plan.levels[l];
        let cands = match only {
            Some(a) => vec![a],
            None => self.candidates(l, &s.assign),
        };
        for a in cands {
            s.assign[lev.vertex] = a;
            if !self.level_ok(l, &s.assign) {
                continue;
            }
            let mut q = prod * self.p.mu.weight(a) * lev.zpow;
            for &gi in &lev.groups {
                q *= self.direct(gi, &mut s.assign);
                if q == 0.0 {
                    break;
                }
            }
            if q != 0.0 {
                self.level(l + 1, None, q, s, acc, tuples);
            }
        }
    }

    fn last(&self, l: usize, only: Option<usize>, prod: f64, s: &mut Scratch, acc: &mut Accumulator, tuples: &mut u64) {
        let plan = self.plan;
        let p = self.p;
        let lev = &plan.levels[l];
        let last_vertex = lev.vertex;

        for (bi, b) in plan.bundles.iter().enumerate() {
            let source: Vec<usize> = self.lists[s.assign[b.key[0]]].iter().map(|&y| y as usize).collect();
            for y in source {
                if !b.key.iter().skip(1).all(|&u| p.edge(s.assign[u], y)) {
                    continue;
                }
                let wy = p.mu.weight(y);
                for &x in &self.lists[y] {
                    let x = x as usize;
                    if !s.marked[bi][x] {
                        s.marked[bi][x] = true;
                        s.touched[bi].push(x);
                    }
                    s.assign[last_vertex] = x;
                    for &(gi, row) in &b.groups {
                        let g = &plan.groups[gi];
                        s.assign[g.v] = y;
                        if self.group_checks(g, &s.assign) {
                            s.dense[row][x].add(wy * g.zpow);
                        }
                    }
                }
            }
        }

        let cands: Vec<usize> = if plan.bundles.is_empty() {
            match only {
                Some(a) => vec![a],
                None => self.candidates(l, &s.assign),
            }
        } else {
            let mut t = s.touched[0].clone();
            t.sort_unstable();
            t.into_iter()
                .filter(|&x| {
                    lev.adjacent.iter().all(|&u| p.edge(s.assign[u], x))
                        && lev
                            .near
                            .iter()
                            .all(|&u| distance(p.mu.point(s.assign[u]), p.mu.point(x)) <= plan.reach)
                })
                .collect()
        };

        for x in cands {
            s.assign[last_vertex] = x;
            if !self.level_ok(l, &s.assign) {
                continue;
            }
            *tuples += 1;
            let mut q = prod * p.mu.weight(x) * lev.zpow;
            for row in &s.dense {
                q *= row[x].value();
            }
            for &gi in &plan.direct_last {
                if q == 0.0 {
                    break;
                }
                q *= self.direct(gi, &mut s.assign);
            }
            if q != 0.0 {
                acc.add(q);
            }
        }

        for (bi, b) in plan.bundles.iter().enumerate() {
            for &x in &s.touched[bi] {
                s.marked[bi][x] = false;
                for &(_, row) in &b.groups {
                    s.dense[row][x] = Accumulator::new();
                }
            }
            s.touched[bi].clear();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_by_name, named_graph, shattering_graph};

    fn spine_labels(g: &ConfigGraph) -> Vec<String> {
        factorization_spine(g)
            .unwrap()
            .into_iter()
            .map(|v| g.label(v).to_string())
            .collect()
    }

    #[test]
    fn spines_of_named_graphs() {
        assert_eq!(spine_labels(&named_graph("four_cycle").unwrap()), ["1", "2"]);
        assert_eq!(spine_labels(&named_graph("G").unwrap()), ["x1", "x2", "x3"]);
        assert_eq!(spine_labels(&named_graph("H").unwrap()), ["x1", "x2"]);
        assert_eq!(spine_labels(&named_graph("B").unwrap()), ["1", "2", "2'"]);
        assert_eq!(spine_labels(&shattering_graph(2).unwrap()), ["x1", "x2"]);
        assert_eq!(spine_labels(&shattering_graph(3).unwrap()), ["x1", "x2", "x3"]);
        assert_eq!(spine_labels(&graph_by_name("chain_1").unwrap()), ["0"]);
    }
}
