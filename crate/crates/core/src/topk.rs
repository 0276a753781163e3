//! Top-k similarity search with admissible upper bounds.
//!
//! Two bounds prune the scan over vertices around a query `u`:
//!
//! * the L1 bound: with `alpha(u, d, t) = max_{d(u, w) = d} D_ww (P^t e_u)_w`,
//!   every `v` at undirected distance `d` from `u` satisfies
//!   `s^(T)(u, v) <= beta(u, d) = sum_t c^t max_{|d' - d| <= t} alpha(u, d', t)`;
//! * the L2 bound: with `gamma(u, t) = |sqrt(D) P^t e_u|`, Cauchy-Schwarz gives
//!   `s^(T)(u, v) <= sum_t c^t gamma(u, t) gamma(v, t)`.
//!
//! `gamma` is precomputed for every vertex in a [`BoundsIndex`]; `beta` is
//! computed per query. An optional [`CandidateIndex`] restricts the scan to
//! vertices whose walks concentrate on a common vertex.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::diag::InnerMode;
use crate::error::{Error, Result};
use crate::graph::{bfs_shells, sample_step, Config, Distribution, Graph, Propagator};
use crate::linear::single_pair;
use crate::mc::{batch_pair_score, WalkBatch};
use crate::rng::{pair_index, stream, DOMAIN_CANDIDATES, DOMAIN_GAMMA, DOMAIN_QUERY};

const MAGIC: &[u8; 8] = b"SRGAMMA\0";
const VERSION: u32 = 1;

fn check_diag(g: &Graph, diag: &[f64]) -> Result<()> {
    if diag.len() == g.n() {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected: g.n(), found: diag.len() })
    }
}

/// `gamma(u, t)` for `t = 0..T`, exactly or from `samples` walks.
pub fn build_gamma<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    u: usize,
    mode: InnerMode,
    samples: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut row = Vec::with_capacity(cfg.depth);
    match mode {
        InnerMode::Exact => {
            let mut prop = Propagator::new(g.n());
            let mut x = Distribution::unit(u);
            for t in 0..cfg.depth {
                row.push(x.weighted_square(diag).sqrt());
                if t + 1 < cfg.depth {
                    x = prop.step(g, &x);
                }
            }
        }
        InnerMode::MonteCarlo => {
            let samples = samples.max(1);
            let batch = WalkBatch::simulate(g, u, samples, cfg.depth, rng);
            let inv = 1.0 / samples as f64;
            for t in 0..cfg.depth {
                let mu: f64 = batch
                    .histogram(t)
                    .iter()
                    .map(|&(w, count)| {
                        let p = count as f64 * inv;
                        diag[w] * p * p
                    })
                    .sum();
                row.push(mu.sqrt());
            }
        }
    }
    row
}

/// `sum_t c^t gamma_u[t] gamma_v[t]`.
pub fn l2_bound(gamma_u: &[f64], gamma_v: &[f64], decay: f64) -> f64 {
    let mut ct = 1.0;
    let mut total = 0.0;
    for (a, b) in gamma_u.iter().zip(gamma_v) {
        total += ct * a * b;
        ct *= decay;
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub mode: InnerMode,
    /// Walks per vertex for Monte-Carlo `gamma`.
    pub gamma_samples: usize,
    /// Pilot walks per vertex for the candidate index.
    pub p_walks: usize,
    /// Probe walks per pilot.
    pub q_walks: usize,
    pub build_candidates: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            mode: InnerMode::MonteCarlo,
            gamma_samples: 100,
            p_walks: 10,
            q_walks: 5,
            build_candidates: true,
        }
    }
}

/// Precomputed `gamma` table plus an optional candidate index.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsIndex {
    n: usize,
    depth: usize,
    decay: f64,
    seed: u64,
    params: IndexConfig,
    gamma: Vec<f64>,
    pub candidates: Option<CandidateIndex>,
}

impl BoundsIndex {
    /// Builds the table in parallel; vertex `u` draws from its own stream.
    pub fn build(g: &Graph, cfg: &Config, diag: &[f64], params: &IndexConfig) -> Result<Self> {
        cfg.validate()?;
        check_diag(g, diag)?;
        let rows: Vec<Vec<f64>> = (0..g.n())
            .into_par_iter()
            .map(|u| {
                let mut rng = stream(cfg.seed, DOMAIN_GAMMA, u as u64);
                build_gamma(g, cfg, diag, u, params.mode, params.gamma_samples, &mut rng)
            })
            .collect();
        let candidates = if params.build_candidates {
            Some(build_candidate_index(g, cfg, params.p_walks, params.q_walks))
        } else {
            None
        };
        Ok(BoundsIndex {
            n: g.n(),
            depth: cfg.depth,
            decay: cfg.decay,
            seed: cfg.seed,
            params: *params,
            gamma: rows.concat(),
            candidates,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn params(&self) -> &IndexConfig {
        &self.params
    }

    pub fn gamma(&self, u: usize) -> &[f64] {
        &self.gamma[u * self.depth..(u + 1) * self.depth]
    }

    pub fn l2(&self, u: usize, v: usize) -> f64 {
        l2_bound(self.gamma(u), self.gamma(v), self.decay)
    }

    /// Binary layout, little endian: magic, version (u32), n, T (u64),
    /// decay (f64), gamma samples, P, Q (u64), mode (u8), seed (u64),
    /// then the `n x T` table row by row. The candidate index is stored separately.
    pub fn write_gamma<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        for v in [self.n as u64, self.depth as u64] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&self.decay.to_le_bytes())?;
        for v in [self.params.gamma_samples, self.params.p_walks, self.params.q_walks] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        out.write_all(&[match self.params.mode {
            InnerMode::Exact => 0,
            InnerMode::MonteCarlo => 1,
        }])?;
        out.write_all(&self.seed.to_le_bytes())?;
        for v in &self.gamma {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_gamma<R: Read>(mut input: R) -> Result<Self> {
        fn u64_from<R: Read>(r: &mut R) -> Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        }
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a bounds index file".into()));
        }
        let mut version = [0u8; 4];
        input.read_exact(&mut version)?;
        let version = u32::from_le_bytes(version);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported bounds index version {version}")));
        }
        let n = u64_from(&mut input)? as usize;
        let depth = u64_from(&mut input)? as usize;
        let decay = f64::from_bits(u64_from(&mut input)?);
        let gamma_samples = u64_from(&mut input)? as usize;
        let p_walks = u64_from(&mut input)? as usize;
        let q_walks = u64_from(&mut input)? as usize;
        let mut mode = [0u8; 1];
        input.read_exact(&mut mode)?;
        let mode = match mode[0] {
            0 => InnerMode::Exact,
            1 => InnerMode::MonteCarlo,
            other => return Err(Error::Format(format!("unknown gamma mode {other}"))),
        };
        let seed = u64_from(&mut input)?;
        let mut gamma = Vec::with_capacity(n * depth);
        for _ in 0..n * depth {
            gamma.push(f64::from_bits(u64_from(&mut input)?));
        }
        Ok(BoundsIndex {
            n,
            depth,
            decay,
            seed,
            params: IndexConfig { mode, gamma_samples, p_walks, q_walks, build_candidates: false },
            gamma,
            candidates: None,
        })
    }

    /// Fails unless the table was built for a graph of `g`'s size and for `cfg`'s depth.
    pub fn check_compatible(&self, g: &Graph, cfg: &Config) -> Result<()> {
        if self.n != g.n() {
            return Err(Error::LengthMismatch { expected: g.n(), found: self.n });
        }
        if self.depth != cfg.depth {
            return Err(Error::InvalidParameter(format!(
                "index was built with T={} but the query uses T={}",
                self.depth, cfg.depth
            )));
        }
        Ok(())
    }
}

/// Anchor vertices per source plus the inverted map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CandidateIndex {
    anchors: Vec<Vec<usize>>,
    holders: BTreeMap<usize, Vec<usize>>,
}

impl CandidateIndex {
    pub fn from_anchors(anchors: Vec<Vec<usize>>) -> Self {
        let mut holders: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (u, list) in anchors.iter().enumerate() {
            for &a in list {
                holders.entry(a).or_default().push(u);
            }
        }
        CandidateIndex { anchors, holders }
    }

    pub fn anchors(&self, u: usize) -> &[usize] {
        &self.anchors[u]
    }

    /// Vertices other than `u` sharing an anchor with `u`, ascending.
    pub fn candidates(&self, u: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.anchors[u]
            .iter()
            .filter_map(|a| self.holders.get(a))
            .flatten()
            .copied()
            .filter(|&v| v != u)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// One line `u: a1 a2 ...` per vertex, internal ids.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for (u, list) in self.anchors.iter().enumerate() {
            write!(out, "{u}:")?;
            for a in list {
                write!(out, " {a}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut anchors = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: idx + 1, message };
            let (head, rest) =
                line.split_once(':').ok_or_else(|| parse_err("missing ':'".into()))?;
            let u: usize = head.trim().parse().map_err(|_| parse_err(format!("bad vertex {head:?}")))?;
            if u != anchors.len() {
                return Err(parse_err(format!("expected vertex {}, found {u}", anchors.len())));
            }
            let list = rest
                .split_whitespace()
                .map(|tok| tok.parse::<usize>().map_err(|_| parse_err(format!("bad anchor {tok:?}"))))
                .collect::<Result<Vec<_>>>()?;
            anchors.push(list);
        }
        Ok(Self::from_anchors(anchors))
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

fn walk_path<R: Rng + ?Sized>(g: &Graph, start: usize, depth: usize, rng: &mut R) -> Vec<usize> {
    let mut path = Vec::with_capacity(depth);
    let mut v = start;
    path.push(v);
    while path.len() < depth {
        match sample_step(g, v, rng) {
            Some(w) => {
                v = w;
                path.push(w);
            }
            None => break,
        }
    }
    path
}

/// Anchors for one vertex: for each of `p_walks` pilot walks, the pilot's
/// position at step `t >= 1` becomes an anchor when at least two of
/// `q_walks` probe walks sit on the same vertex at step `t`.
pub fn vertex_anchors<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    u: usize,
    p_walks: usize,
    q_walks: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut anchors = Vec::new();
    for _ in 0..p_walks {
        let pilot = walk_path(g, u, cfg.depth, rng);
        let probes: Vec<Vec<usize>> = (0..q_walks).map(|_| walk_path(g, u, cfg.depth, rng)).collect();
        for (t, &w) in pilot.iter().enumerate().skip(1) {
            let hits = probes.iter().filter(|p| p.get(t) == Some(&w)).count();
            if hits >= 2 {
                anchors.push(w);
            }
        }
    }
    anchors.sort_unstable();
    anchors.dedup();
    anchors
}

pub fn build_candidate_index(g: &Graph, cfg: &Config, p_walks: usize, q_walks: usize) -> CandidateIndex {
    let anchors = (0..g.n())
        .into_par_iter()
        .map(|u| {
            let mut rng = stream(cfg.seed, DOMAIN_CANDIDATES, u as u64);
            vertex_anchors(g, cfg, u, p_walks, q_walks, &mut rng)
        })
        .collect();
    CandidateIndex::from_anchors(anchors)
}

/// L1 tables for one query vertex: `alpha[d][t]` and `beta[d]` for `d = 0..=d_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBeta {
    pub source: usize,
    pub alpha: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

impl AlphaBeta {
    pub fn beta(&self, d: usize) -> f64 {
        self.beta.get(d).copied().unwrap_or(0.0)
    }

    /// Recomputes `beta` from `alpha`.
    pub fn recompute_beta(&self, decay: f64) -> Vec<f64> {
        beta_from_alpha(&self.alpha, decay, self.beta.len())
    }
}

fn beta_from_alpha(alpha: &[Vec<f64>], decay: f64, len: usize) -> Vec<f64> {
    let depth = alpha.first().map_or(0, Vec::len);
    (0..len)
        .map(|d| {
            let mut ct = 1.0;
            let mut total = 0.0;
            for t in 0..depth {
                let lo = d.saturating_sub(t);
                let hi = (d + t).min(alpha.len().saturating_sub(1));
                let best = (lo..=hi).map(|dd| alpha[dd][t]).fold(0.0, f64::max);
                total += ct * best;
                ct *= decay;
            }
            total
        })
        .collect()
}

/// `alpha` and `beta` for `u` up to distance `d_max`, exactly or from `samples` walks.
#[allow(clippy::too_many_arguments)]
pub fn build_alpha_beta<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    u: usize,
    d_max: usize,
    mode: InnerMode,
    samples: usize,
    rng: &mut R,
) -> AlphaBeta {
    let reach = d_max.max(cfg.depth);
    let mut dist = vec![usize::MAX; g.n()];
    for (d, shell) in bfs_shells(g, u, reach).into_iter().enumerate() {
        for v in shell {
            dist[v] = d;
        }
    }
    let mut alpha = vec![vec![0.0f64; cfg.depth]; reach + 1];
    let mut record = |t: usize, w: usize, mass: f64| {
        let d = dist[w];
        if d <= reach {
            let cell = &mut alpha[d][t];
            *cell = cell.max(diag[w] * mass);
        }
    };
    match mode {
        InnerMode::Exact => {
            let mut prop = Propagator::new(g.n());
            let mut x = Distribution::unit(u);
            for t in 0..cfg.depth {
                for &(w, p) in x.entries() {
                    record(t, w, p);
                }
                if t + 1 < cfg.depth {
                    x = prop.step(g, &x);
                }
            }
        }
        InnerMode::MonteCarlo => {
            let samples = samples.max(1);
            let batch = WalkBatch::simulate(g, u, samples, cfg.depth, rng);
            for t in 0..cfg.depth {
                for &(w, count) in batch.histogram(t) {
                    record(t, w, count as f64 / samples as f64);
                }
            }
        }
    }
    let beta = beta_from_alpha(&alpha, cfg.decay, d_max + 1);
    AlphaBeta { source: u, alpha, beta }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scoring {
    /// Deterministic linearized single-pair scores.
    Exact,
    /// Monte-Carlo scores from `r_lo` walks, rescored with `r_hi` walks
    /// when the cheap estimate exceeds half the current cut.
    MonteCarlo { r_lo: usize, r_hi: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopkOptions {
    pub k: usize,
    pub theta_floor: f64,
    /// Largest shell scanned; `None` means `T`.
    pub d_max: Option<usize>,
    pub scoring: Scoring,
    pub bound_mode: InnerMode,
    pub bound_samples: usize,
    pub use_l1: bool,
    pub use_l2: bool,
    /// Prune with `s(u, v) <= c^ceil(d / 2)` for undirected distance `d`.
    pub use_distance: bool,
    /// Scan only the candidate index when the bounds index carries one.
    pub use_candidates: bool,
}

impl Default for TopkOptions {
    fn default() -> Self {
        TopkOptions {
            k: 20,
            theta_floor: 0.01,
            d_max: None,
            scoring: Scoring::MonteCarlo { r_lo: 10, r_hi: 100 },
            bound_mode: InnerMode::MonteCarlo,
            bound_samples: 100,
            use_l1: true,
            use_l2: true,
            use_distance: false,
            use_candidates: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TopkStats {
    pub shells_skipped: usize,
    pub l2_pruned: usize,
    pub scored: usize,
    pub rescored: usize,
}

/// Bounded ranking: descending score, ties by ascending vertex.
struct Ranking {
    k: usize,
    items: Vec<(usize, f64)>,
}

impl Ranking {
    fn full(&self) -> bool {
        self.items.len() == self.k
    }

    fn kth(&self) -> Option<f64> {
        if self.full() {
            self.items.last().map(|x| x.1)
        } else {
            None
        }
    }

    fn offer(&mut self, v: usize, s: f64) {
        let better = |a: &(usize, f64)| a.1 > s || (a.1 == s && a.0 < v);
        let pos = self.items.partition_point(better);
        if pos < self.k {
            self.items.insert(pos, (v, s));
            self.items.truncate(self.k);
        }
    }
}

/// Returns up to `k` vertices most similar to `u`, best first, together with statistics.
pub fn topk_query(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    index: &BoundsIndex,
    u: usize,
    opts: &TopkOptions,
) -> Result<(Vec<(usize, f64)>, TopkStats)> {
    g.check_vertex(u)?;
    check_diag(g, diag)?;
    index.check_compatible(g, cfg)?;
    if opts.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if opts.theta_floor < 0.0 {
        return Err(Error::InvalidParameter("theta floor must be non-negative".into()));
    }
    let d_max = opts.d_max.unwrap_or(cfg.depth);
    let mut rng = stream(cfg.seed, DOMAIN_QUERY, pair_index(u, u));
    let ab = if opts.use_l1 {
        Some(build_alpha_beta(g, cfg, diag, u, d_max, opts.bound_mode, opts.bound_samples, &mut rng))
    } else {
        None
    };
    let suffix_beta: Vec<f64> = ab.as_ref().map_or_else(Vec::new, |ab| {
        let mut s = ab.beta.clone();
        for d in (0..s.len().saturating_sub(1)).rev() {
            s[d] = s[d].max(s[d + 1]);
        }
        s
    });

    let mut shells = bfs_shells(g, u, d_max);
    if opts.use_candidates {
        if let Some(cands) = &index.candidates {
            let keep = cands.candidates(u);
            for shell in shells.iter_mut() {
                shell.retain(|v| keep.binary_search(v).is_ok());
            }
        }
    }

    let (u_lo, u_hi) = match opts.scoring {
        Scoring::MonteCarlo { r_lo, r_hi } => (
            Some(WalkBatch::simulate(g, u, r_lo.max(1), cfg.depth, &mut rng)),
            Some(WalkBatch::simulate(g, u, r_hi.max(1), cfg.depth, &mut rng)),
        ),
        Scoring::Exact => (None, None),
    };

    let mut ranking = Ranking { k: opts.k, items: Vec::with_capacity(opts.k + 1) };
    let mut stats = TopkStats::default();
    let cut = |ranking: &Ranking| ranking.kth().unwrap_or(0.0).max(opts.theta_floor);
    let below = |bound: f64, ranking: &Ranking| {
        ranking.kth().is_some_and(|kth| bound <= kth) || (opts.theta_floor > 0.0 && bound <= opts.theta_floor)
            || bound <= 0.0
    };

    for (d, shell) in shells.iter().enumerate().skip(1) {
        if let Some(ab) = &ab {
            if below(suffix_beta[d], &ranking) {
                stats.shells_skipped += shells.len() - d;
                break;
            }
            if below(ab.beta(d), &ranking) {
                stats.shells_skipped += 1;
                continue;
            }
        }
        if opts.use_distance && below(cfg.decay.powi(d.div_ceil(2) as i32), &ranking) {
            stats.shells_skipped += 1;
            continue;
        }
        for &v in shell {
            if opts.use_l2 && below(index.l2(u, v), &ranking) {
                stats.l2_pruned += 1;
                continue;
            }
            stats.scored += 1;
            let score = match (opts.scoring, &u_lo, &u_hi) {
                (Scoring::MonteCarlo { r_lo, r_hi }, Some(a_lo), Some(a_hi)) => {
                    let mut vr = stream(cfg.seed, DOMAIN_QUERY, pair_index(u, v));
                    let b_lo = WalkBatch::simulate(g, v, r_lo.max(1), cfg.depth, &mut vr);
                    let cheap = batch_pair_score(cfg.decay, diag, a_lo, &b_lo);
                    if cheap > 0.5 * cut(&ranking) {
                        stats.rescored += 1;
                        let b_hi = WalkBatch::simulate(g, v, r_hi.max(1), cfg.depth, &mut vr);
                        batch_pair_score(cfg.decay, diag, a_hi, &b_hi)
                    } else {
                        cheap
                    }
                }
                _ => single_pair(g, cfg, diag, u, v)?,
            };
            if score > 0.0 && score >= opts.theta_floor {
                ranking.offer(v, score);
            }
        }
    }
    Ok((ranking.items, stats))
}
