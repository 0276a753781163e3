//! Directed graphs in compressed in/out adjacency form and the transition
//! operator `P` of the transposed graph.
//!
//! Column `v` of `P` spreads unit mass uniformly over the in-neighbors
//! `I(v)`. A vertex without in-neighbors has an all-zero column: mass that
//! reaches it is absorbed, and a random walk that reaches it stops.

use std::collections::{HashMap, VecDeque};
use std::io::BufRead;

use rand::Rng;

use crate::error::{Error, Result};

/// Decay factor, truncation depth and seed shared by every algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Config {
    pub decay: f64,
    pub depth: usize,
    pub seed: u64,
}

impl Config {
    pub fn new(decay: f64, depth: usize, seed: u64) -> Result<Self> {
        let cfg = Config { decay, depth, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "decay factor must lie in (0, 1), got {}",
                self.decay
            )));
        }
        if self.depth == 0 {
            return Err(Error::InvalidParameter("depth T must be at least 1".into()));
        }
        Ok(())
    }

    /// Upper bound `c^T / (1 - c)` on the error of truncating the series at `T` terms.
    pub fn truncation_bound(&self) -> f64 {
        self.decay.powi(self.depth as i32) / (1.0 - self.decay)
    }
}

impl Default for Config {
    fn default() -> Self {
        Config { decay: 0.6, depth: 11, seed: 0 }
    }
}

/// Counts of input items dropped while building a simple graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub edges_read: usize,
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Immutable simple directed graph with dense vertex ids `0..n`.
#[derive(Debug, Clone)]
pub struct Graph {
    in_offsets: Vec<usize>,
    in_adj: Vec<usize>,
    out_offsets: Vec<usize>,
    out_adj: Vec<usize>,
    labels: Vec<u64>,
    by_label: HashMap<u64, usize>,
}

fn compress(n: usize, pairs: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    // pairs must be sorted by (key, value)
    let mut offsets = vec![0usize; n + 1];
    for &(k, _) in pairs {
        offsets[k + 1] += 1;
    }
    for v in 0..n {
        offsets[v + 1] += offsets[v];
    }
    let adj = pairs.iter().map(|&(_, x)| x).collect();
    (offsets, adj)
}

impl Graph {
    /// Builds a graph over `0..n` from directed edges `u -> v`.
    /// Self-loops and repeated edges are dropped and counted.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<(Graph, IngestReport)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let labels = (0..n as u64).collect();
        Self::build(n, edges, labels)
    }

    /// Builds a graph from edges between arbitrary labels. Vertices are
    /// numbered densely in order of first appearance.
    pub fn from_labeled_edges<I>(edges: I) -> Result<(Graph, IngestReport)>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut labels: Vec<u64> = Vec::new();
        let mut ids: HashMap<u64, usize> = HashMap::new();
        let mut intern = |label: u64| {
            *ids.entry(label).or_insert_with(|| {
                labels.push(label);
                labels.len() - 1
            })
        };
        let dense: Vec<(usize, usize)> = edges.into_iter().map(|(u, v)| (intern(u), intern(v))).collect();
        let n = labels.len();
        Self::build(n, dense, labels)
    }

    fn build<I>(n: usize, edges: I, labels: Vec<u64>) -> Result<(Graph, IngestReport)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut report = IngestReport::default();
        let mut forward = Vec::new();
        for (u, v) in edges {
            report.edges_read += 1;
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                report.self_loops += 1;
            } else {
                forward.push((u, v));
            }
        }
        forward.sort_unstable();
        let before = forward.len();
        forward.dedup();
        report.duplicates = before - forward.len();

        let (out_offsets, out_adj) = compress(n, &forward);
        let mut backward: Vec<(usize, usize)> = forward.iter().map(|&(u, v)| (v, u)).collect();
        backward.sort_unstable();
        let (in_offsets, in_adj) = compress(n, &backward);
        let by_label = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Ok((
            Graph { in_offsets, in_adj, out_offsets, out_adj, labels, by_label },
            report,
        ))
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn num_edges(&self) -> usize {
        self.out_adj.len()
    }

    /// Sorted in-neighbors `I(v)`.
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    /// Sorted out-neighbors of `u`.
    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out_adj[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_offsets[v + 1] - self.in_offsets[v]
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out_offsets[u + 1] - self.out_offsets[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Original id of vertex `v` as it appeared in the input.
    pub fn label(&self, v: usize) -> u64 {
        self.labels[v]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Dense id of an original vertex id.
    pub fn vertex_of(&self, label: u64) -> Option<usize> {
        self.by_label.get(&label).copied()
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange { vertex: v, n: self.n() })
        }
    }

    /// Applies `P^T` to a dense vector: `(P^T y)_j` is the mean of `y` over `I(j)`.
    pub fn transpose_apply(&self, y: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|j| {
                let nbrs = self.in_neighbors(j);
                if nbrs.is_empty() {
                    0.0
                } else {
                    nbrs.iter().map(|&i| y[i]).sum::<f64>() / nbrs.len() as f64
                }
            })
            .collect()
    }
}

/// Parses a whitespace-separated edge list; line `u v` is the edge `u -> v`.
///
/// Vertices are numbered densely in order of first appearance and the
/// original ids are kept as labels. Lines starting with `#` and blank lines
/// are skipped; CRLF line endings are accepted.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<(Graph, IngestReport)> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u64> {
            let tok = tok.ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected two vertex ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("invalid vertex id {tok:?}"),
            })
        };
        let u = parse(fields.next())?;
        let v = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(Error::Parse { line: idx + 1, message: "trailing fields".into() });
        }
        edges.push((u, v));
    }
    Graph::from_labeled_edges(edges)
}

/// Sparse probability vector over vertices, entries sorted by vertex.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Distribution {
    entries: Vec<(usize, f64)>,
    total_mass: f64,
}

impl Distribution {
    pub fn unit(v: usize) -> Self {
        Distribution { entries: vec![(v, 1.0)], total_mass: 1.0 }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a distribution from arbitrary entries; repeated vertices are
    /// merged and zero entries dropped.
    pub fn from_entries(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (v, m) in entries {
            match merged.last_mut() {
                Some((last, acc)) if *last == v => *acc += m,
                _ => merged.push((v, m)),
            }
        }
        merged.retain(|&(_, m)| m != 0.0);
        let total_mass = merged.iter().map(|&(_, m)| m).sum();
        Distribution { entries: merged, total_mass }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn support(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, v: usize) -> f64 {
        self.entries
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// `sum_w weights[w] * self[w] * other[w]`, accumulated in ascending `w`
    /// so the result is symmetric in `self` and `other`.
    pub fn weighted_dot(&self, other: &Distribution, weights: &[f64]) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(va, ma)), Some(&&(vb, mb))) = (a.peek(), b.peek()) {
            match va.cmp(&vb) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += weights[va] * (ma * mb);
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    /// `sum_w weights[w] * self[w]^2`.
    pub fn weighted_square(&self, weights: &[f64]) -> f64 {
        self.entries.iter().map(|&(w, m)| weights[w] * (m * m)).sum()
    }

    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(v, m) in &self.entries {
            out[v] = m;
        }
        out
    }
}

/// Reusable scratch space for repeated applications of `P`.
///
/// Mass is accumulated into a dense buffer; the touched list is sorted when
/// the support is small and replaced by a linear scan once it exceeds `n/4`.
#[derive(Debug, Clone)]
pub struct Propagator {
    acc: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<usize>,
}

impl Propagator {
    pub fn new(n: usize) -> Self {
        Propagator { acc: vec![0.0; n], seen: vec![false; n], touched: Vec::new() }
    }

    pub fn step(&mut self, g: &Graph, d: &Distribution) -> Distribution {
        let n = g.n();
        for &(v, m) in d.entries() {
            let nbrs = g.in_neighbors(v);
            if nbrs.is_empty() {
                continue;
            }
            let share = m / nbrs.len() as f64;
            for &u in nbrs {
                if !self.seen[u] {
                    self.seen[u] = true;
                    self.touched.push(u);
                }
                self.acc[u] += share;
            }
        }
        let mut entries = Vec::with_capacity(self.touched.len());
        if self.touched.len() > n / 4 {
            for u in 0..n {
                if self.seen[u] {
                    entries.push((u, self.acc[u]));
                    self.acc[u] = 0.0;
                    self.seen[u] = false;
                }
            }
        } else {
            self.touched.sort_unstable();
            for &u in &self.touched {
                entries.push((u, self.acc[u]));
                self.acc[u] = 0.0;
                self.seen[u] = false;
            }
        }
        self.touched.clear();
        let total_mass = entries.iter().map(|&(_, m)| m).sum();
        Distribution { entries, total_mass }
    }
}

/// Returns `P d`: mass at `v` is split evenly over `I(v)`; mass at a vertex
/// without in-neighbors is absorbed.
pub fn step(g: &Graph, d: &Distribution) -> Distribution {
    Propagator::new(g.n()).step(g, d)
}

/// One step of a walk along in-links; `None` when `v` has no in-neighbors.
pub fn sample_step<R: Rng + ?Sized>(g: &Graph, v: usize, rng: &mut R) -> Option<usize> {
    let nbrs = g.in_neighbors(v);
    if nbrs.is_empty() {
        None
    } else {
        Some(nbrs[rng.random_range(0..nbrs.len())])
    }
}

/// Breadth-first shells around `source` over the undirected edge set:
/// `shells[d]` holds the vertices at distance `d`, sorted, for `d <= max_d`.
pub fn bfs_shells(g: &Graph, source: usize, max_d: usize) -> Vec<Vec<usize>> {
    let mut dist = vec![usize::MAX; g.n()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    let mut shells = vec![vec![source]];
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        if du == max_d {
            continue;
        }
        for &w in g.out_neighbors(u).iter().chain(g.in_neighbors(u)) {
            if dist[w] == usize::MAX {
                dist[w] = du + 1;
                if shells.len() <= du + 1 {
                    shells.push(Vec::new());
                }
                shells[du + 1].push(w);
                queue.push_back(w);
            }
        }
    }
    for shell in &mut shells {
        shell.sort_unstable();
    }
    shells
}

/// Undirected shortest-path distances from `source`, truncated at `max_d`.
pub fn bfs_distances(g: &Graph, source: usize, max_d: usize) -> HashMap<usize, usize> {
    bfs_shells(g, source, max_d)
        .into_iter()
        .enumerate()
        .flat_map(|(d, shell)| shell.into_iter().map(move |v| (v, d)))
        .collect()
}
