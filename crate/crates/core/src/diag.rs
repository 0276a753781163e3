//! Estimation of the diagonal correction `D` in `S = c P^T S P + D`.
//!
//! `D` is the unique diagonal matrix whose linearized SimRank has a unit
//! diagonal, `S^L(D)_kk = 1` for every `k`. Because `S^L` is linear, this is
//! an `n x n` linear system in the entries of `D`, solved here with
//! Gauss-Seidel sweeps: for each `k` in ascending order,
//!
//! ```text
//! D_kk <- D_kk + (1 - S^L(D)_kk) / S^L(E_kk)_kk
//! ```
//!
//! Both quantities are truncated Neumann sums over the walk distribution
//! `x_t = P^t e_k`:
//!
//! ```text
//! S^L(E_kk)_kk ~ sum_t c^t x_t[k]^2        S^L(D)_kk ~ sum_t c^t sum_i D_ii x_t[i]^2
//! ```
//!
//! In exact mode `x_t` is propagated exactly; in Monte-Carlo mode it is the
//! empirical histogram of `R` walks.
//!
//! Convergence of the sweeps is guaranteed when the system is diagonally
//! dominant, which holds when `max_i sum_{t>=1} c^t p_i(t) < 1` with
//! `p_i(t)` the probability that two walks from `i` meet at step `t`. On
//! graphs violating this the iteration still converges in practice;
//! [`residual_norm`] measures the outcome.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Config, Distribution, Graph, Propagator};
use crate::mc::WalkBatch;
use crate::rng::{stream, DOMAIN_DIAGONAL};

pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// How a diagonal was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagMode {
    Exact,
    MonteCarlo,
    /// Derived from the dense oracle.
    Oracle,
}

impl fmt::Display for DiagMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagMode::Exact => "exact",
            DiagMode::MonteCarlo => "mc",
            DiagMode::Oracle => "oracle",
        })
    }
}

impl FromStr for DiagMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(DiagMode::Exact),
            "mc" => Ok(DiagMode::MonteCarlo),
            "oracle" => Ok(DiagMode::Oracle),
            other => Err(Error::InvalidParameter(format!("unknown diagonal mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagParams {
    pub decay: f64,
    pub depth: usize,
    pub sweeps: usize,
    pub samples: usize,
    pub mode: DiagMode,
    pub seed: u64,
}

/// Diagonal entries of `D` plus the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalCorrection {
    values: Vec<f64>,
    params: DiagParams,
    /// Updates pushed back into the admissible window.
    pub clamped: usize,
    /// Updates skipped because the estimated `S^L(E_kk)_kk` was not positive.
    pub skipped: usize,
}

impl DiagonalCorrection {
    pub fn new(values: Vec<f64>, params: DiagParams) -> Self {
        DiagonalCorrection { values, params, clamped: 0, skipped: 0 }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> &DiagParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_graph(&self, g: &Graph) -> Result<()> {
        if self.values.len() == g.n() {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: g.n(), found: self.values.len() })
        }
    }

    /// Writes the `simrank-diag v1` text format.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let p = &self.params;
        writeln!(
            out,
            "simrank-diag v1 n={} c={} T={} L={} R={} mode={} seed={}",
            self.values.len(),
            p.decay,
            p.depth,
            p.sweeps,
            p.samples,
            p.mode,
            p.seed
        )?;
        for v in &self.values {
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty diagonal file".into()))??;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("simrank-diag") || fields.next() != Some("v1") {
            return Err(Error::Format(format!("bad diagonal header {header:?}")));
        }
        let mut n = None;
        let mut params = DiagParams {
            decay: 0.0,
            depth: 0,
            sweeps: 0,
            samples: 0,
            mode: DiagMode::Exact,
            seed: 0,
        };
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header field {field:?}")))?;
            let bad = || Error::Format(format!("bad value in header field {field:?}"));
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
                "c" => params.decay = value.parse().map_err(|_| bad())?,
                "T" => params.depth = value.parse().map_err(|_| bad())?,
                "L" => params.sweeps = value.parse().map_err(|_| bad())?,
                "R" => params.samples = value.parse().map_err(|_| bad())?,
                "mode" => params.mode = value.parse()?,
                "seed" => params.seed = value.parse().map_err(|_| bad())?,
                _ => return Err(Error::Format(format!("unknown header field {key:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::Format("header lacks n=".into()))?;
        let mut values = Vec::with_capacity(n);
        for (idx, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::Parse {
                line: idx + 2,
                message: format!("invalid value {line:?}"),
            })?;
            values.push(v);
        }
        if values.len() != n {
            return Err(Error::Format(format!("header says n={n} but file has {} values", values.len())));
        }
        Ok(DiagonalCorrection::new(values, params))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerMode {
    Exact,
    MonteCarlo,
}

/// Starting point of the sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialGuess {
    /// `1 - c * sum_i P_ik^2`, the first two terms of the closed form.
    Quadratic,
    Identity,
    OneMinusDecay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub sweeps: usize,
    pub samples: usize,
    pub mode: InnerMode,
    pub initial: InitialGuess,
    /// Half-width of the clamp window `[1 - c - slack, 1 + slack]`;
    /// `None` picks 0.05 for Monte-Carlo and 1e-9 for exact mode.
    pub slack: Option<f64>,
    pub support_cap: usize,
}

impl EstimationConfig {
    pub fn exact(sweeps: usize) -> Self {
        EstimationConfig {
            sweeps,
            samples: 0,
            mode: InnerMode::Exact,
            initial: InitialGuess::Quadratic,
            slack: None,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }

    pub fn monte_carlo(sweeps: usize, samples: usize) -> Self {
        EstimationConfig { samples, mode: InnerMode::MonteCarlo, ..Self::exact(sweeps) }
    }

    fn slack(&self) -> f64 {
        self.slack.unwrap_or(match self.mode {
            InnerMode::Exact => 1e-9,
            InnerMode::MonteCarlo => 0.05,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidParameter("sweep count L must be at least 1".into()));
        }
        if self.mode == InnerMode::MonteCarlo && self.samples == 0 {
            return Err(Error::InvalidParameter("sample count R must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self::monte_carlo(3, 100)
    }
}

/// `diag(D) = 1 - c * (sum_i P_ik^2)_k`, computed in `O(m)`.
pub fn initial_guess(g: &Graph, cfg: &Config) -> Vec<f64> {
    (0..g.n())
        .map(|k| {
            let deg = g.in_degree(k);
            if deg == 0 {
                1.0
            } else {
                // deg entries equal to 1/deg
                1.0 - cfg.decay / deg as f64
            }
        })
        .collect()
}

fn starting_values(g: &Graph, cfg: &Config, guess: InitialGuess) -> Vec<f64> {
    match guess {
        InitialGuess::Quadratic => initial_guess(g, cfg),
        InitialGuess::Identity => vec![1.0; g.n()],
        InitialGuess::OneMinusDecay => vec![1.0 - cfg.decay; g.n()],
    }
}

fn exact_inner(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    k: usize,
    prop: &mut Propagator,
    cap: usize,
) -> Result<(f64, f64)> {
    let mut x = Distribution::unit(k);
    let (mut a, mut b, mut ct) = (0.0, 0.0, 1.0);
    for t in 0..cfg.depth {
        let xk = x.get(k);
        a += ct * xk * xk;
        b += ct * x.weighted_square(diag);
        if t + 1 == cfg.depth {
            break;
        }
        x = prop.step(g, &x);
        if x.support() > cap {
            return Err(Error::SupportCap { support: x.support(), cap });
        }
        if x.is_empty() {
            break;
        }
        ct *= cfg.decay;
    }
    Ok((a, b))
}

fn mc_inner<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    k: usize,
    samples: usize,
    rng: &mut R,
) -> (f64, f64) {
    let batch = WalkBatch::simulate(g, k, samples, cfg.depth, rng);
    let inv = 1.0 / samples as f64;
    let (mut a, mut b, mut ct) = (0.0, 0.0, 1.0);
    for t in 0..cfg.depth {
        for &(i, count) in batch.histogram(t) {
            let p = count as f64 * inv;
            if i == k {
                a += ct * p * p;
            }
            b += ct * p * p * diag[i];
        }
        ct *= cfg.decay;
    }
    (a, b)
}

/// Returns `(a, b)` with `a ~ S^L(E_kk)_kk` and `b ~ S^L(D)_kk`, truncated at `T` terms.
pub fn inner_estimates<R: Rng + ?Sized>(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    k: usize,
    est: &EstimationConfig,
    rng: &mut R,
) -> Result<(f64, f64)> {
    g.check_vertex(k)?;
    if diag.len() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), found: diag.len() });
    }
    match est.mode {
        InnerMode::Exact => exact_inner(g, cfg, diag, k, &mut Propagator::new(g.n()), est.support_cap),
        InnerMode::MonteCarlo => Ok(mc_inner(g, cfg, diag, k, est.samples.max(1), rng)),
    }
}

/// Gauss-Seidel estimation of `D`, starting from `est.initial` and running
/// `est.sweeps` sweeps over `k = 0..n`. Monte-Carlo sweeps draw fresh walks
/// from the stream keyed by `(seed, sweep * n + k)`.
pub fn estimate_diagonal(g: &Graph, cfg: &Config, est: &EstimationConfig) -> Result<DiagonalCorrection> {
    estimate_diagonal_traced(g, cfg, est, |_, _| {})
}

/// Like [`estimate_diagonal`], calling `after_sweep(sweep, values)` once per sweep.
pub fn estimate_diagonal_traced<F>(
    g: &Graph,
    cfg: &Config,
    est: &EstimationConfig,
    mut after_sweep: F,
) -> Result<DiagonalCorrection>
where
    F: FnMut(usize, &[f64]),
{
    cfg.validate()?;
    est.validate()?;
    let n = g.n();
    let (lo, hi) = (1.0 - cfg.decay - est.slack(), 1.0 + est.slack());
    let mut values = starting_values(g, cfg, est.initial);
    let mut prop = Propagator::new(n);
    let (mut clamped, mut skipped) = (0, 0);
    for sweep in 0..est.sweeps {
        for k in 0..n {
            let (a, b) = match est.mode {
                InnerMode::Exact => exact_inner(g, cfg, &values, k, &mut prop, est.support_cap)?,
                InnerMode::MonteCarlo => {
                    let mut rng = stream(cfg.seed, DOMAIN_DIAGONAL, (sweep * n + k) as u64);
                    mc_inner(g, cfg, &values, k, est.samples, &mut rng)
                }
            };
            if a <= 0.0 {
                skipped += 1;
                continue;
            }
            let updated = values[k] + (1.0 - b) / a;
            let bounded = updated.clamp(lo, hi);
            if bounded != updated {
                clamped += 1;
            }
            values[k] = bounded;
        }
        after_sweep(sweep, &values);
    }
    let params = DiagParams {
        decay: cfg.decay,
        depth: cfg.depth,
        sweeps: est.sweeps,
        samples: if est.mode == InnerMode::MonteCarlo { est.samples } else { 0 },
        mode: match est.mode {
            InnerMode::Exact => DiagMode::Exact,
            InnerMode::MonteCarlo => DiagMode::MonteCarlo,
        },
        seed: cfg.seed,
    };
    Ok(DiagonalCorrection { values, params, clamped, skipped })
}

/// `max_k |S^L(D)_kk - 1|` with exact propagation truncated at `T` terms.
pub fn residual_norm(g: &Graph, cfg: &Config, diag: &[f64]) -> Result<f64> {
    if diag.len() != g.n() {
        return Err(Error::LengthMismatch { expected: g.n(), found: diag.len() });
    }
    let mut prop = Propagator::new(g.n());
    let mut worst: f64 = 0.0;
    for k in 0..g.n() {
        let (_, b) = exact_inner(g, cfg, diag, k, &mut prop, DEFAULT_SUPPORT_CAP)?;
        worst = worst.max((b - 1.0).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cycle, random_graph, star};
    use crate::oracle::exact_diagonal;
    use crate::rng::seeded;

    fn cfg(c: f64, t: usize) -> Config {
        Config::new(c, t, 0).unwrap()
    }

    #[test]
    fn initial_guess_values() {
        let g = star();
        let d = initial_guess(&g, &cfg(0.8, 11));
        assert!((d[0] - (1.0 - 0.8 * 3.0 * (1.0f64 / 3.0).powi(2))).abs() < 1e-15);
        assert!((d[0] - 0.733_333_333_333_333_3).abs() < 1e-12);
        for &v in &d[1..] {
            assert!((v - 0.2).abs() < 1e-15);
        }
        let (iso, _) = Graph::from_edges(2, [(0, 1)]).unwrap();
        assert_eq!(initial_guess(&iso, &cfg(0.6, 5))[0], 1.0);
    }

    #[test]
    fn inner_estimates_first_term_and_star_by_hand() {
        let g = star();
        let c = cfg(0.8, 1);
        let d = [0.3, 0.2, 0.25, 0.2];
        let mut rng = seeded(0);
        let est = EstimationConfig::exact(1);
        assert_eq!(inner_estimates(&g, &c, &d, 2, &est, &mut rng).unwrap(), (1.0, 0.25));
        // T = 2: the walk from 1 sits on 0 at step 1
        let c = cfg(0.8, 2);
        let (a, b) = inner_estimates(&g, &c, &d, 1, &est, &mut rng).unwrap();
        assert_eq!(a, 1.0);
        assert!((b - (0.2 + 0.8 * 0.3)).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_inner_matches_exact() {
        for seed in 0..3 {
            let g = random_graph(18, 2.0, seed);
            let c = cfg(0.6, 11);
            let d = initial_guess(&g, &c);
            let exact = EstimationConfig::exact(1);
            let mc = EstimationConfig::monte_carlo(1, 10_000);
            for k in 0..g.n() {
                let mut rng = seeded(seed * 100 + k as u64);
                let (a0, b0) = inner_estimates(&g, &c, &d, k, &exact, &mut rng).unwrap();
                let (a1, b1) = inner_estimates(&g, &c, &d, k, &mc, &mut rng).unwrap();
                assert!((a0 - a1).abs() < 0.02 && (b0 - b1).abs() < 0.02, "k={k}");
            }
        }
    }

    #[test]
    fn star_converges_to_closed_form() {
        let g = star();
        let d = estimate_diagonal(&g, &cfg(0.8, 100), &EstimationConfig::exact(5)).unwrap();
        let want = [23.0 / 75.0, 0.2, 0.2, 0.2];
        for (got, want) in d.values().iter().zip(want) {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn cycle_converges_to_truncated_one_minus_c() {
        // on a directed cycle S = I, so the truncated condition gives
        // D_kk * (1 - c^T) / (1 - c) = 1
        let c = cfg(0.6, 11);
        let g = cycle(5);
        let exact = exact_diagonal(&g, &c).unwrap();
        assert!(exact.values().iter().all(|v| (v - 0.4).abs() < 1e-12));
        let d = estimate_diagonal(&g, &c, &EstimationConfig::exact(10)).unwrap();
        let want = 0.4 / (1.0 - 0.6f64.powi(11));
        for &v in d.values() {
            assert!((v - want).abs() < 1e-12, "{v} vs {want}");
            assert!((v - 0.4).abs() < c.truncation_bound());
        }
    }

    #[test]
    fn single_vertex_stays_one() {
        let (g, _) = Graph::from_edges(1, []).unwrap();
        for est in [EstimationConfig::exact(4), EstimationConfig::monte_carlo(4, 10)] {
            let d = estimate_diagonal(&g, &cfg(0.6, 11), &est).unwrap();
            assert_eq!(d.values(), &[1.0]);
        }
    }

    #[test]
    fn residual_norm_cases() {
        let g = random_graph(20, 2.0, 4);
        let c = cfg(0.6, 11);
        assert_eq!(residual_norm(&g, &c, &[0.0; 20]).unwrap(), 1.0);
        let exact = exact_diagonal(&g, &c).unwrap();
        let r = residual_norm(&g, &c, exact.values()).unwrap();
        assert!(r < c.truncation_bound() + 1e-10, "{r}");
    }

    #[test]
    fn residual_mostly_decreases_across_sweeps() {
        let mut steps = 0;
        let mut decreases = 0;
        for seed in 0..6 {
            let g = random_graph(30, 1.5 + 0.5 * seed as f64, 40 + seed);
            let c = cfg(0.6, 11);
            let mut residuals = Vec::new();
            estimate_diagonal_traced(&g, &c, &EstimationConfig::exact(10), |_, d| {
                residuals.push(residual_norm(&g, &c, d).unwrap());
            })
            .unwrap();
            for w in residuals.windows(2) {
                steps += 1;
                if w[1] <= w[0] + 1e-15 {
                    decreases += 1;
                }
            }
            assert!(residuals[9] < residuals[0] || residuals[0] < 1e-14);
        }
        assert!(decreases as f64 >= 0.9 * steps as f64, "{decreases}/{steps}");
    }

    #[test]
    fn monte_carlo_close_to_exact() {
        for seed in 0..3 {
            let g = random_graph(60 + 20 * seed as usize, 3.0, 70 + seed);
            let c = Config::new(0.6, 11, seed).unwrap();
            let exact = estimate_diagonal(&g, &c, &EstimationConfig::exact(6)).unwrap();
            let mc = estimate_diagonal(&g, &c, &EstimationConfig::monte_carlo(3, 100)).unwrap();
            let gap = exact.values().iter().zip(mc.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap < 0.05, "seed {seed}: {gap}");
        }
    }

    #[test]
    fn values_stay_in_window() {
        let g = random_graph(40, 2.0, 5);
        let c = cfg(0.6, 11);
        let d = estimate_diagonal(&g, &c, &EstimationConfig::monte_carlo(3, 20)).unwrap();
        for &v in d.values() {
            assert!((1.0 - 0.6 - 0.05..=1.05).contains(&v));
        }
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let g = random_graph(30, 2.0, 6);
        let c = Config::new(0.6, 11, 9).unwrap();
        let est = EstimationConfig::monte_carlo(2, 50);
        assert_eq!(estimate_diagonal(&g, &c, &est).unwrap(), estimate_diagonal(&g, &c, &est).unwrap());
    }

    #[test]
    fn file_round_trip() {
        let g = star();
        let d = estimate_diagonal(&g, &cfg(0.8, 40), &EstimationConfig::exact(5)).unwrap();
        let mut buf = Vec::new();
        d.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("simrank-diag v1 n=4 c=0.8 T=40 L=5 R=0 mode=exact seed=0\n"));
        let back = DiagonalCorrection::read_from(buf.as_slice()).unwrap();
        assert_eq!(back.values(), d.values());
        assert_eq!(back.params(), d.params());
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(DiagonalCorrection::read_from("nope\n1.0\n".as_bytes()).is_err());
        assert!(DiagonalCorrection::read_from("simrank-diag v1 n=2 c=0.6 T=3 L=1 R=0 mode=exact seed=0\n1.0\n".as_bytes()).is_err());
        assert!(DiagonalCorrection::read_from("simrank-diag v1 n=1 c=0.6 T=3 L=1 R=0 mode=weird seed=0\n1.0\n".as_bytes()).is_err());
    }
}
