//! Monte-Carlo estimators driven by random walks along in-links.
//!
//! Two estimators live here:
//!
//! * the linearized single-pair estimator, which replaces `P^t e_i` and
//!   `P^t e_j` by empirical walk histograms and sums
//!   `c^t * sum_w D_ww * count_i(w, t) * count_j(w, t) / R^2`;
//! * the first-meeting-time sampler: two walks from `i` and `j` move in
//!   lockstep and the sample is `c^tau` for the first step `tau` at which
//!   they occupy the same vertex (0 if they never meet within `T` steps or
//!   one of them is absorbed). Its expectation is the SimRank score up to a
//!   truncation bias of at most `c^(T+1) / (1 - c)`.
//!
//! [`verify_pair`] decides `s(i, j) >= theta` with the meeting-time sampler,
//! adding samples until the Hoeffding-style stopping rule
//! `R * delta^2 >= log(1/p) / 2 * (c / (1 - c))^2` holds, where `delta` is
//! the distance of the running mean `(1/R) sum c^tau` from `theta`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{sample_step, Config, Graph};

/// Per-step histograms of `R` walks started at one vertex.
///
/// Step 0 is `{source: R}`; absorbed walks are dropped, so later steps may
/// count fewer than `R` walks.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkBatch {
    source: usize,
    walks: usize,
    steps: Vec<Vec<(usize, u32)>>,
}

fn histogram(positions: &mut [usize]) -> Vec<(usize, u32)> {
    positions.sort_unstable();
    let mut out: Vec<(usize, u32)> = Vec::new();
    for &p in positions.iter() {
        match out.last_mut() {
            Some((v, count)) if *v == p => *count += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

impl WalkBatch {
    /// Runs `walks` walks from `source` and records histograms for steps `0..depth`.
    pub fn simulate<R: Rng + ?Sized>(
        g: &Graph,
        source: usize,
        walks: usize,
        depth: usize,
        rng: &mut R,
    ) -> Self {
        let mut positions = vec![source; walks];
        let mut steps = Vec::with_capacity(depth);
        for t in 0..depth {
            steps.push(histogram(&mut positions));
            if t + 1 == depth || positions.is_empty() {
                break;
            }
            positions = positions.into_iter().filter_map(|v| sample_step(g, v, rng)).collect();
        }
        steps.resize(depth, Vec::new());
        WalkBatch { source, walks, steps }
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn walks(&self) -> usize {
        self.walks
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// Sorted `(vertex, count)` pairs at step `t`.
    pub fn histogram(&self, t: usize) -> &[(usize, u32)] {
        &self.steps[t]
    }
}

/// Linearized score estimate from two walk batches of equal depth.
pub fn batch_pair_score(decay: f64, diag: &[f64], a: &WalkBatch, b: &WalkBatch) -> f64 {
    let norm = 1.0 / (a.walks as f64 * b.walks as f64);
    let mut sigma = 0.0;
    let mut ct = 1.0;
    for t in 0..a.depth().min(b.depth()) {
        let (ha, hb) = (a.histogram(t), b.histogram(t));
        let (mut x, mut y) = (0, 0);
        let mut term = 0.0;
        while x < ha.len() && y < hb.len() {
            match ha[x].0.cmp(&hb[y].0) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    term += diag[ha[x].0] * (ha[x].1 as f64 * hb[y].1 as f64);
                    x += 1;
                    y += 1;
                }
            }
        }
        sigma += ct * term * norm;
        ct *= decay;
    }
    sigma
}

/// Monte-Carlo estimate of the truncated linearized score `s^(T)(i, j)`
/// from `walks` independent walks per endpoint.
pub fn mc_single_pair<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    i: usize,
    j: usize,
    walks: usize,
    rng: &mut R,
) -> Result<f64> {
    g.check_vertex(i)?;
    g.check_vertex(j)?;
    if diag.len() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), found: diag.len() });
    }
    if walks == 0 {
        return Err(Error::InvalidParameter("walk count R must be at least 1".into()));
    }
    if i == j {
        return Ok(1.0);
    }
    let a = WalkBatch::simulate(g, i, walks, cfg.depth, rng);
    let b = WalkBatch::simulate(g, j, walks, cfg.depth, rng);
    Ok(batch_pair_score(cfg.decay, diag, &a, &b))
}

/// One draw of `c^tau` for coupled walks from `i` and `j`, with `tau`
/// capped at `T` steps.
pub fn meeting_time_sample<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    i: usize,
    j: usize,
    rng: &mut R,
) -> f64 {
    if i == j {
        return 1.0;
    }
    let (mut a, mut b) = (i, j);
    let mut ct = 1.0;
    for _ in 0..cfg.depth {
        ct *= cfg.decay;
        match (sample_step(g, a, rng), sample_step(g, b, rng)) {
            (Some(x), Some(y)) if x == y => return ct,
            (Some(x), Some(y)) => {
                a = x;
                b = y;
            }
            _ => return 0.0,
        }
    }
    0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Similar,
    Dissimilar,
    /// The sample budget ran out; `leaning` is the side of `theta` the
    /// running mean ended on.
    Undecided { leaning: Side },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Similar,
    Dissimilar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub decision: Decision,
    pub samples_used: usize,
    /// Running mean of `c^tau` when sampling stopped.
    pub estimate: f64,
}

impl Verification {
    /// Side of the threshold, whether or not the stopping rule fired.
    pub fn side(&self) -> Side {
        match self.decision {
            Decision::Similar => Side::Similar,
            Decision::Dissimilar => Side::Dissimilar,
            Decision::Undecided { leaning } => leaning,
        }
    }

    pub fn is_similar(&self) -> bool {
        self.side() == Side::Similar
    }

    pub fn is_decided(&self) -> bool {
        !matches!(self.decision, Decision::Undecided { .. })
    }
}

/// Right-hand side `log(1/p) / 2 * (c / (1 - c))^2` of the stopping rule.
pub fn stopping_constant(decay: f64, p: f64) -> f64 {
    let ratio = decay / (1.0 - decay);
    (1.0 / p).ln() / 2.0 * ratio * ratio
}

/// Adaptive threshold test of `s(i, j) >= theta`.
#[allow(clippy::too_many_arguments)]
pub fn verify_pair<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    i: usize,
    j: usize,
    theta: f64,
    p: f64,
    max_samples: usize,
    rng: &mut R,
) -> Result<Verification> {
    g.check_vertex(i)?;
    g.check_vertex(j)?;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, 1), got {theta}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    if max_samples == 0 {
        return Err(Error::InvalidParameter("R_max must be at least 1".into()));
    }
    let bound = stopping_constant(cfg.decay, p);
    let mut sum = 0.0;
    let mut mean = 0.0;
    for r in 1..=max_samples {
        sum += meeting_time_sample(g, cfg, i, j, rng);
        mean = sum / r as f64;
        let delta = mean - theta;
        if r as f64 * delta * delta >= bound {
            let decision = if mean >= theta { Decision::Similar } else { Decision::Dissimilar };
            return Ok(Verification { decision, samples_used: r, estimate: mean });
        }
    }
    let leaning = if mean >= theta { Side::Similar } else { Side::Dissimilar };
    Ok(Verification {
        decision: Decision::Undecided { leaning },
        samples_used: max_samples,
        estimate: mean,
    })
}
