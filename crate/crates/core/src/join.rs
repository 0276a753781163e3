//! Threshold similarity join: find every pair `i < j` with `s(i, j) >= theta`.
//!
//! The filter solves `S = c P^T S P + D` with a Gauss-Southwell iteration
//! that keeps an approximate solution `S~` and a residual `R~` satisfying
//! `D - (S~ - c P^T S~ P) = R~`. Each step moves one residual entry into
//! `S~` and spreads `c * r` to the pairs one reverse step away. Once every
//! residual is below `eps = (1 - c)(1 - gamma) theta`, each entry satisfies
//! `0 <= S - S~ <= (1 - gamma) theta`, so
//!
//! ```text
//! J_L = { S~ >= theta }  is contained in  J(theta)  is contained in  J_H = { S~ >= gamma theta }
//! ```
//!
//! Pairs in `J_H \ J_L` are decided by [`verify_pair`].
//!
//! Stochastic thresholding bounds memory: a push that would create a new
//! residual entry of value `a` is kept with probability `min(1, beta a)`
//! and dropped otherwise. Mass accumulated into one entry before it is
//! allocated is lost with probability at most `exp(-beta delta)` for any
//! `delta`, so `S~` stays a lower bound of `S`.

use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Config, Graph};
use crate::mc::verify_pair;
use crate::rng::{pair_index, stream, SimRng, DOMAIN_FILTER, DOMAIN_VERIFY};

pub const DEFAULT_MEMORY_CAP: usize = 200_000_000;
pub const DEFAULT_BETA_SKIP: f64 = 100.0;

/// Order in which pending residuals are processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Worklist {
    #[default]
    Fifo,
    /// Largest residual first.
    MaxResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterStats {
    pub pushes: usize,
    /// Residual entries held when the filter stopped.
    pub residual_entries: usize,
    pub peak_residual_entries: usize,
    pub solution_entries: usize,
    /// Allocations skipped by stochastic thresholding.
    pub skipped_allocations: usize,
    pub dropped_mass: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    value: f64,
    queued: bool,
}

#[derive(Debug, PartialEq)]
struct Pending {
    value: f64,
    key: (usize, usize),
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.value.total_cmp(&other.value).then_with(|| other.key.cmp(&self.key))
    }
}

enum Queue {
    Fifo(VecDeque<(usize, usize)>),
    Max(BinaryHeap<Pending>),
}

/// Sparse residual and solution over unordered pairs `i <= j`.
pub struct ResidualStore {
    residual: HashMap<(usize, usize), Slot>,
    solution: HashMap<(usize, usize), f64>,
    queue: Queue,
    epsilon: f64,
    beta_skip: Option<f64>,
    pub total_pushed: f64,
    pub skipped_allocations: usize,
    pub dropped_mass: f64,
    peak: usize,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl ResidualStore {
    pub fn new(epsilon: f64, beta_skip: Option<f64>, worklist: Worklist) -> Self {
        ResidualStore {
            residual: HashMap::new(),
            solution: HashMap::new(),
            queue: match worklist {
                Worklist::Fifo => Queue::Fifo(VecDeque::new()),
                Worklist::MaxResidual => Queue::Max(BinaryHeap::new()),
            },
            epsilon,
            beta_skip,
            total_pushed: 0.0,
            skipped_allocations: 0,
            dropped_mass: 0.0,
            peak: 0,
        }
    }

    pub fn residual(&self, i: usize, j: usize) -> f64 {
        self.residual.get(&key(i, j)).map_or(0.0, |s| s.value)
    }

    pub fn solution(&self, i: usize, j: usize) -> f64 {
        self.solution.get(&key(i, j)).copied().unwrap_or(0.0)
    }

    pub fn is_allocated(&self, i: usize, j: usize) -> bool {
        self.residual.contains_key(&key(i, j))
    }

    pub fn residual_entries(&self) -> usize {
        self.residual.len()
    }

    /// Solution entries `(i, j, value)` with `i <= j`, sorted by pair.
    pub fn solution_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self.solution.iter().map(|(&(i, j), &v)| (i, j, v)).collect();
        out.sort_unstable_by_key(|e| (e.0, e.1));
        out
    }

    /// Residual entries `(i, j, value)` with `i <= j`, sorted by pair.
    pub fn residual_entries_sorted(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self.residual.iter().map(|(&(i, j), s)| (i, j, s.value)).collect();
        out.sort_unstable_by_key(|e| (e.0, e.1));
        out
    }

    fn enqueue(&mut self, k: (usize, usize), value: f64) {
        match &mut self.queue {
            Queue::Fifo(q) => q.push_back(k),
            Queue::Max(h) => h.push(Pending { value, key: k }),
        }
    }

    /// Adds `a` to the residual at `{i, j}`, subject to stochastic
    /// thresholding when the entry is not yet allocated. Returns whether
    /// the mass landed.
    pub fn add<R: Rng + ?Sized>(&mut self, i: usize, j: usize, a: f64, rng: &mut R) -> bool {
        let k = key(i, j);
        let eps = self.epsilon;
        if let Some(slot) = self.residual.get_mut(&k) {
            slot.value += a;
            let value = slot.value;
            match self.queue {
                Queue::Fifo(_) if slot.queued => {}
                _ if value >= eps => {
                    slot.queued = true;
                    self.enqueue(k, value);
                }
                _ => {}
            }
            return true;
        }
        if let Some(beta) = self.beta_skip {
            let keep = (beta * a).min(1.0);
            if keep < 1.0 && rng.random::<f64>() >= keep {
                self.skipped_allocations += 1;
                self.dropped_mass += a;
                return false;
            }
        }
        let queued = a >= eps;
        self.residual.insert(k, Slot { value: a, queued });
        self.peak = self.peak.max(self.residual.len());
        if queued {
            self.enqueue(k, a);
        }
        true
    }

    /// Next pair with residual at least `eps`, taking its residual out.
    fn pop(&mut self) -> Option<((usize, usize), f64)> {
        loop {
            let k = match &mut self.queue {
                Queue::Fifo(q) => q.pop_front()?,
                Queue::Max(h) => h.pop()?.key,
            };
            let Some(slot) = self.residual.get_mut(&k) else { continue };
            slot.queued = false;
            if slot.value >= self.epsilon {
                let r = slot.value;
                slot.value = 0.0;
                *self.solution.entry(k).or_insert(0.0) += r;
                return Some((k, r));
            }
        }
    }

    fn stats(&self, pushes: usize) -> FilterStats {
        FilterStats {
            pushes,
            residual_entries: self.residual.len(),
            peak_residual_entries: self.peak,
            solution_entries: self.solution.len(),
            skipped_allocations: self.skipped_allocations,
            dropped_mass: self.dropped_mass,
            epsilon: self.epsilon,
        }
    }
}

/// Single-entry form of stochastic thresholding used by [`ResidualStore::add`].
pub fn stochastic_threshold<R: Rng + ?Sized>(
    store: &mut ResidualStore,
    i: usize,
    j: usize,
    a: f64,
    rng: &mut R,
) -> bool {
    store.add(i, j, a, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub theta: f64,
    pub gamma_acc: f64,
    /// `None` disables stochastic thresholding.
    pub beta_skip: Option<f64>,
    pub memory_cap: usize,
    pub worklist: Worklist,
}

impl FilterConfig {
    pub fn new(theta: f64, gamma_acc: f64) -> Self {
        FilterConfig {
            theta,
            gamma_acc,
            beta_skip: Some(DEFAULT_BETA_SKIP),
            memory_cap: DEFAULT_MEMORY_CAP,
            worklist: Worklist::Fifo,
        }
    }

    pub fn epsilon(&self, decay: f64) -> f64 {
        (1.0 - decay) * (1.0 - self.gamma_acc) * self.theta
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be positive, got {}", self.theta)));
        }
        if !(0.0..1.0).contains(&self.gamma_acc) {
            return Err(Error::InvalidParameter(format!("gamma must lie in [0, 1), got {}", self.gamma_acc)));
        }
        if let Some(beta) = self.beta_skip {
            if beta.is_nan() || beta <= 0.0 {
                return Err(Error::InvalidParameter(format!("beta_skip must be positive, got {beta}")));
            }
        }
        Ok(())
    }
}

/// Runs the Gauss-Southwell filter and returns the store holding `S~`.
pub fn gauss_southwell_filter(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    fc: &FilterConfig,
) -> Result<(ResidualStore, FilterStats)> {
    cfg.validate()?;
    fc.validate()?;
    if diag.len() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), found: diag.len() });
    }
    let c = cfg.decay;
    let mut rng: SimRng = stream(cfg.seed, DOMAIN_FILTER, 0);
    let mut store = ResidualStore::new(fc.epsilon(c), fc.beta_skip, fc.worklist);
    for (k, &d) in diag.iter().enumerate() {
        if d != 0.0 {
            // the initial residual is exact, never thresholded
            store.residual.insert((k, k), Slot { value: d, queued: d >= store.epsilon });
            if d >= store.epsilon {
                store.enqueue((k, k), d);
            }
        }
    }
    store.peak = store.residual.len();
    let mut pushes = 0;
    while let Some(((i, j), r)) = store.pop() {
        pushes += 1;
        store.total_pushed += r;
        let cr = c * r;
        if i == j {
            let out = g.out_neighbors(i);
            for (x, &a) in out.iter().enumerate() {
                let wa = cr / g.in_degree(a) as f64;
                for &b in &out[x..] {
                    store.add(a, b, wa / g.in_degree(b) as f64, &mut rng);
                }
            }
        } else {
            for &a in g.out_neighbors(i) {
                let wa = cr / g.in_degree(a) as f64;
                for &b in g.out_neighbors(j) {
                    let w = wa / g.in_degree(b) as f64;
                    store.add(a, b, if a == b { 2.0 * w } else { w }, &mut rng);
                }
            }
        }
        if store.residual.len() > fc.memory_cap {
            return Err(Error::MemoryCap { cap: fc.memory_cap, stats: Box::new(store.stats(pushes)) });
        }
    }
    let stats = store.stats(pushes);
    Ok((store, stats))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JoinConfig {
    pub filter: FilterConfig,
    pub p: f64,
    pub max_samples: usize,
}

impl JoinConfig {
    pub fn new(theta: f64, gamma_acc: f64) -> Self {
        JoinConfig { filter: FilterConfig::new(theta, gamma_acc), p: 0.01, max_samples: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JoinStats {
    pub filter: FilterStats,
    pub candidates: usize,
    pub accepted: usize,
    pub undecided: usize,
    pub samples: usize,
}

impl fmt::Display for JoinStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.filter;
        write!(
            f,
            "{{\"pushes\": {}, \"residual_entries\": {}, \"peak_residual_entries\": {}, \
             \"solution_entries\": {}, \"skipped_allocations\": {}, \"dropped_mass\": {:.6}, \
             \"epsilon\": {:.6}, \"verify_candidates\": {}, \"verified\": {}, \"undecided\": {}, \
             \"samples\": {}}}",
            s.pushes,
            s.residual_entries,
            s.peak_residual_entries,
            s.solution_entries,
            s.skipped_allocations,
            s.dropped_mass,
            s.epsilon,
            self.candidates,
            self.accepted,
            self.undecided,
            self.samples
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PairSource {
    Filter,
    Verified,
}

impl fmt::Display for PairSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairSource::Filter => "filter",
            PairSource::Verified => "verified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct JoinResult {
    /// Pairs with `S~ >= theta`.
    pub j_low: Vec<(usize, usize)>,
    /// Pairs with `S~ >= gamma theta` and `S~ > 0`.
    pub j_high: Vec<(usize, usize)>,
    /// Pairs of `J_H \ J_L` accepted by verification.
    pub verified: Vec<(usize, usize)>,
    pub stats: JoinStats,
}

impl JoinResult {
    /// Output pairs sorted, each tagged with where it came from.
    pub fn pairs(&self) -> Vec<(usize, usize, PairSource)> {
        let mut out: Vec<_> = self
            .j_low
            .iter()
            .map(|&(i, j)| (i, j, PairSource::Filter))
            .chain(self.verified.iter().map(|&(i, j)| (i, j, PairSource::Verified)))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Filter, then verify the undecided band in parallel. Each verified pair
/// draws from its own stream, so results do not depend on the thread count.
pub fn join(g: &Graph, cfg: &Config, diag: &[f64], jc: &JoinConfig) -> Result<JoinResult> {
    if !(jc.p > 0.0 && jc.p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {}", jc.p)));
    }
    let theta = jc.filter.theta;
    let (store, filter_stats) = gauss_southwell_filter(g, cfg, diag, &jc.filter)?;
    let low_cut = jc.filter.gamma_acc * theta;
    let mut j_low = Vec::new();
    let mut j_high = Vec::new();
    let mut band = Vec::new();
    for (i, j, s) in store.solution_entries() {
        if i == j || s <= 0.0 || s < low_cut {
            continue;
        }
        j_high.push((i, j));
        if s >= theta {
            j_low.push((i, j));
        } else {
            band.push((i, j));
        }
    }
    let outcomes: Vec<_> = band
        .par_iter()
        .map(|&(i, j)| {
            let mut rng = stream(cfg.seed, DOMAIN_VERIFY, pair_index(i, j));
            verify_pair(g, cfg, i, j, theta, jc.p, jc.max_samples, &mut rng).map(|v| ((i, j), v))
        })
        .collect::<Result<_>>()?;
    let mut stats = JoinStats { filter: filter_stats, candidates: band.len(), ..JoinStats::default() };
    let mut verified = Vec::new();
    for (pair, v) in outcomes {
        stats.samples += v.samples_used;
        if !v.is_decided() {
            stats.undecided += 1;
        }
        if v.is_similar() {
            verified.push(pair);
        }
    }
    stats.accepted = verified.len();
    Ok(JoinResult { j_low, j_high, verified, stats })
}
