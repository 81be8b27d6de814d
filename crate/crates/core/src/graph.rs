//! Finite graphs indexing configuration integrals.
//!
//! A [`ConfigGraph`] carries, besides vertices and edges, an *evaluation
//! ordering*. For a vertex `j` the earlier-neighbor set
//! `V_j = { i : i ~ j, i precedes j }` decides which points the
//! non-degeneracy constraint of `j` is measured against, so the ordering is
//! part of the graph's identity.
//!
//! Named graphs fix their ordering as: vertex 0 first, then the shattered
//! `x` vertices, then the `y` centers. Under that ordering every vertex after
//! the first has a non-empty `V_j` for the four-cycle, `G`, `H` and the book
//! graph `B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SHATTER_K: usize = 6;
pub const ISOMORPHISM_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigGraph {
    #[serde(rename = "vertices")]
    labels: Vec<String>,
    edges: Vec<[usize; 2]>,
    ordering: Vec<usize>,
}

impl ConfigGraph {
    /// Builds a graph; edges are normalized to `[lo, hi]` and sorted.
    pub fn new(labels: Vec<String>, edges: Vec<[usize; 2]>, ordering: Vec<usize>) -> Result<Self> {
        let n = labels.len();
        let mut norm = Vec::with_capacity(edges.len());
        for [a, b] in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a},{b}) references a missing vertex")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            norm.push([a.min(b), a.max(b)]);
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("duplicate edge".into()));
        }
        let mut seen = vec![false; n];
        if ordering.len() != n {
            return Err(Error::InvalidGraph("ordering is not a permutation".into()));
        }
        for &v in &ordering {
            if v >= n || seen[v] {
                return Err(Error::InvalidGraph("ordering is not a permutation".into()));
            }
            seen[v] = true;
        }
        Ok(Self {
            labels,
            edges: norm,
            ordering,
        })
    }

    /// Graph with the identity evaluation ordering.
    pub fn with_identity_order(labels: Vec<String>, edges: Vec<[usize; 2]>) -> Result<Self> {
        let ordering = (0..labels.len()).collect();
        Self::new(labels, edges, ordering)
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn ordering(&self) -> &[usize] {
        &self.ordering
    }

    pub fn vertex_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&[a.min(b), a.max(b)]).is_ok()
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&[a, b]| {
                if a == v {
                    Some(b)
                } else if b == v {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e[0] == v || e[1] == v).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count()];
        for &[a, b] in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Position of every vertex in the evaluation ordering.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.vertex_count()];
        for (p, &v) in self.ordering.iter().enumerate() {
            pos[v] = p;
        }
        pos
    }

    /// `V_j`: neighbors of `v` that precede it in the evaluation ordering,
    /// listed in evaluation order.
    pub fn earlier_neighbors(&self, v: usize) -> Vec<usize> {
        let pos = self.positions();
        let mut out: Vec<usize> = self.neighbors(v).into_iter().filter(|&u| pos[u] < pos[v]).collect();
        out.sort_by_key(|&u| pos[u]);
        out
    }

    /// True when every vertex after the first in evaluation order has an
    /// earlier neighbor.
    pub fn earlier_sets_nonempty(&self) -> bool {
        self.ordering.iter().skip(1).all(|&v| !self.earlier_neighbors(v).is_empty())
    }

    /// Same graph with a different evaluation ordering.
    pub fn reordered(&self, ordering: Vec<usize>) -> Result<Self> {
        Self::new(self.labels.clone(), self.edges.clone(), ordering)
    }

    /// Relabels vertex indices so that evaluation position equals index.
    pub fn in_evaluation_order(&self) -> Self {
        let pos = self.positions();
        let labels = self.ordering.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self.edges.iter().map(|&[a, b]| [pos[a], pos[b]]).collect();
        Self::with_identity_order(labels, edges).expect("relabeling preserves validity")
    }

    /// Applies a vertex permutation: old vertex `v` becomes `perm[v]`.
    /// The evaluation ordering follows the vertices.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.vertex_count();
        if perm.len() != n {
            return Err(Error::InvalidGraph("permutation length mismatch".into()));
        }
        let mut labels = vec![String::new(); n];
        for v in 0..n {
            labels[perm[v]] = self.labels[v].clone();
        }
        let edges = self.edges.iter().map(|&[a, b]| [perm[a], perm[b]]).collect();
        let ordering = self.ordering.iter().map(|&v| perm[v]).collect();
        Self::new(labels, edges, ordering)
    }

    /// Subgraph induced on `keep` (vertex indices, any order). Vertices are
    /// renumbered in increasing original index; labels and relative
    /// evaluation order are inherited.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut keep: Vec<usize> = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut map = vec![usize::MAX; self.vertex_count()];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let labels = keep.iter().map(|&v| self.labels[v].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|&&[a, b]| map[a] != usize::MAX && map[b] != usize::MAX)
            .map(|&[a, b]| [map[a], map[b]])
            .collect();
        let ordering = self
            .ordering
            .iter()
            .filter(|&&v| map[v] != usize::MAX)
            .map(|&v| map[v])
            .collect();
        Self::new(labels, edges, ordering).expect("induced subgraph is valid")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ConfigGraph = serde_json::from_str(text)?;
        Self::new(raw.labels, raw.edges, raw.ordering)
    }
}

fn subset_label(mask: usize, k: usize) -> String {
    if mask == 0 {
        return "y∅".to_string();
    }
    let digits: String = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
    format!("y{digits}")
}

/// The bipartite shattering graph on `{x_1..x_k} ∪ P({1..k})` with
/// `x_i ~ y_I` iff `i ∈ I`. Vertices: `x_1..x_k`, then the subsets in
/// bitmask order (`y∅, y1, y2, y12, ...`).
pub fn shattering_graph(k: usize) -> Result<ConfigGraph> {
    if k == 0 || k > MAX_SHATTER_K {
        return Err(crate::error::out_of_range("k", format!("must lie in 1..={MAX_SHATTER_K}, got {k}")));
    }
    let mut labels: Vec<String> = (1..=k).map(|i| format!("x{i}")).collect();
    let mut edges = Vec::new();
    for mask in 0..(1usize << k) {
        let y = labels.len();
        labels.push(subset_label(mask, k));
        for i in 0..k {
            if mask >> i & 1 == 1 {
                edges.push([i, y]);
            }
        }
    }
    ConfigGraph::with_identity_order(labels, edges)
}

fn strs(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// Graphs by name: `four_cycle`, `G`, `H`, `B`, `chain_m`.
pub fn named_graph(name: &str) -> Result<ConfigGraph> {
    let g = match name {
        // 0 ~ 1 ~ 3 ~ 2 ~ 0
        "four_cycle" => ConfigGraph::with_identity_order(
            strs(&["0", "1", "2", "3"]),
            vec![[0, 1], [0, 2], [1, 3], [2, 3]],
        )?,
        "G" => ConfigGraph::with_identity_order(
            strs(&["y123", "x1", "x2", "x3", "y12", "y13", "y23"]),
            vec![[0, 1], [0, 2], [0, 3], [1, 4], [2, 4], [1, 5], [3, 5], [2, 6], [3, 6]],
        )?,
        "H" => ConfigGraph::with_identity_order(
            strs(&["y123", "x1", "x2", "y12", "y13"]),
            vec![[0, 1], [0, 2], [1, 3], [2, 3], [1, 4]],
        )?,
        // book graph: pages 0-1-3-2 and 0-1-3'-2' sharing the spine 0-1
        "B" => ConfigGraph::with_identity_order(
            strs(&["0", "1", "2", "2'", "3", "3'"]),
            vec![[0, 1], [0, 2], [0, 3], [4, 1], [4, 2], [5, 1], [5, 3]],
        )?,
        _ => {
            if let Some(m) = name.strip_prefix("chain_") {
                let m: usize = m.parse().map_err(|_| Error::UnknownGraph(name.to_string()))?;
                if m == 0 {
                    return Err(Error::UnknownGraph(name.to_string()));
                }
                let labels = (0..=m).map(|i| i.to_string()).collect();
                let edges = (0..m).map(|i| [i, i + 1]).collect();
                ConfigGraph::with_identity_order(labels, edges)?
            } else {
                return Err(Error::UnknownGraph(name.to_string()));
            }
        }
    };
    Ok(g)
}

/// Resolves a named graph or `shatter_k` (the shattering graph for `k`).
pub fn graph_by_name(name: &str) -> Result<ConfigGraph> {
    if let Some(k) = name.strip_prefix("shatter_") {
        let k: usize = k.parse().map_err(|_| Error::UnknownGraph(name.to_string()))?;
        return shattering_graph(k);
    }
    named_graph(name)
}

/// `G` and `H` laid out as two copies of `H` glued along three common
/// vertices: positions 0..3 are the common part `(y123, x1, y23)`, 3..5 the
/// first copy `(x2, y12)` and 5..7 the mirrored copy `(x3, y13)`. `H` is the
/// first five positions. Non-degeneracy of each copy then only involves the
/// common vertices and that copy.
pub fn glued_pair() -> (ConfigGraph, ConfigGraph) {
    let g = ConfigGraph::with_identity_order(
        strs(&["y123", "x1", "y23", "x2", "y12", "x3", "y13"]),
        vec![[0, 1], [0, 3], [2, 3], [3, 4], [1, 4], [0, 5], [2, 5], [5, 6], [1, 6]],
    )
    .expect("static graph");
    let h = g.induced(&[0, 1, 2, 3, 4]);
    (g, h)
}

#[derive(Clone, Debug)]
pub struct Deforested {
    pub graph: ConfigGraph,
    /// Original indices of the kept vertices, in the new index order.
    pub kept: Vec<usize>,
    /// Removed vertices of degree 0 (original indices).
    pub isolated: Vec<usize>,
    /// Removed vertices of degree 1 (original indices).
    pub leaves: Vec<usize>,
}

/// Removes every vertex of degree 0 or 1 in a single pass. With `to_fixpoint`
/// the pass repeats until no such vertex remains; vertices that only become
/// leaves in later rounds are reported by their degree at removal time.
pub fn deforest(g: &ConfigGraph, to_fixpoint: bool) -> Deforested {
    let mut current = g.clone();
    let mut kept: Vec<usize> = (0..g.vertex_count()).collect();
    let mut isolated = Vec::new();
    let mut leaves = Vec::new();
    loop {
        let deg = current.degrees();
        let mut keep_now = Vec::new();
        let mut removed_any = false;
        for (v, &d) in deg.iter().enumerate() {
            match d {
                0 => {
                    isolated.push(kept[v]);
                    removed_any = true;
                }
                1 => {
                    leaves.push(kept[v]);
                    removed_any = true;
                }
                _ => keep_now.push(v),
            }
        }
        kept = keep_now.iter().map(|&v| kept[v]).collect();
        current = current.induced(&keep_now);
        if !to_fixpoint || !removed_any {
            break;
        }
    }
    isolated.sort_unstable();
    leaves.sort_unstable();
    Deforested {
        graph: current,
        kept,
        isolated,
        leaves,
    }
}

/// Edge-preserving bijection search with degree pruning.
pub fn graph_isomorphic(a: &ConfigGraph, b: &ConfigGraph) -> Result<bool> {
    for g in [a, b] {
        if g.vertex_count() > ISOMORPHISM_LIMIT {
            return Err(Error::GraphTooLarge {
                vertices: g.vertex_count(),
                limit: ISOMORPHISM_LIMIT,
            });
        }
    }
    if a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count() {
        return Ok(false);
    }
    let (da, db) = (a.degrees(), b.degrees());
    let mut sa = da.clone();
    let mut sb = db.clone();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb {
        return Ok(false);
    }
    let n = a.vertex_count();
    let adj = |g: &ConfigGraph| {
        let mut m = vec![vec![false; n]; n];
        for &[x, y] in g.edges() {
            m[x][y] = true;
            m[y][x] = true;
        }
        m
    };
    let (adj_a, adj_b) = (adj(a), adj(b));
    // map high-degree vertices first
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(da[v]));

    fn extend(
        depth: usize,
        order: &[usize],
        map: &mut [usize],
        used: &mut [bool],
        da: &[usize],
        db: &[usize],
        adj_a: &[Vec<bool>],
        adj_b: &[Vec<bool>],
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let v = order[depth];
        for w in 0..used.len() {
            if used[w] || db[w] != da[v] {
                continue;
            }
            let consistent = order[..depth].iter().all(|&u| adj_a[v][u] == adj_b[w][map[u]]);
            if !consistent {
                continue;
            }
            map[v] = w;
            used[w] = true;
            if extend(depth + 1, order, map, used, da, db, adj_a, adj_b) {
                return true;
            }
            used[w] = false;
        }
        false
    }

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(extend(0, &order, &mut map, &mut used, &da, &db, &adj_a, &adj_b))
}
