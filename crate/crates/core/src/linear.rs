//! Deterministic queries on the linearized recurrence with a fixed `D`.
//!
//! ```text
//! s^(T)(i, j) = sum_{t < T} c^t (P^t e_i)^T D (P^t e_j)
//! ```
//!
//! The truncation error is at most `c^T / (1 - c)` when `D` is the exact
//! diagonal correction.

use std::io::Write;

use rayon::prelude::*;

use crate::diag::DEFAULT_SUPPORT_CAP;
use crate::error::{Error, Result};
use crate::graph::{Config, Distribution, Graph, Propagator};

fn check_diag(g: &Graph, diag: &[f64]) -> Result<()> {
    if diag.len() == g.n() {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected: g.n(), found: diag.len() })
    }
}

fn advance(g: &Graph, prop: &mut Propagator, x: &Distribution, cap: usize) -> Result<Distribution> {
    let next = prop.step(g, x);
    if next.support() > cap {
        return Err(Error::SupportCap { support: next.support(), cap });
    }
    Ok(next)
}

/// `s^(T)(i, j)` by propagating both unit vectors side by side.
pub fn single_pair(g: &Graph, cfg: &Config, diag: &[f64], i: usize, j: usize) -> Result<f64> {
    single_pair_capped(g, cfg, diag, i, j, DEFAULT_SUPPORT_CAP)
}

/// [`single_pair`] failing with [`Error::SupportCap`] once an intermediate
/// vector has more than `cap` nonzeros.
pub fn single_pair_capped(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    i: usize,
    j: usize,
    cap: usize,
) -> Result<f64> {
    g.check_vertex(i)?;
    g.check_vertex(j)?;
    check_diag(g, diag)?;
    if i == j {
        return Ok(1.0);
    }
    let mut prop = Propagator::new(g.n());
    let mut x = Distribution::unit(i);
    let mut y = Distribution::unit(j);
    let mut score = 0.0;
    let mut ct = 1.0;
    for t in 0..cfg.depth {
        score += ct * x.weighted_dot(&y, diag);
        if t + 1 == cfg.depth {
            break;
        }
        x = advance(g, &mut prop, &x, cap)?;
        y = advance(g, &mut prop, &y, cap)?;
        if x.is_empty() || y.is_empty() {
            break;
        }
        ct *= cfg.decay;
    }
    Ok(score)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceMode {
    /// Recomputes `(P^T)^t D P^t e_i` for each `t`: `O(T^2 m)` time, `O(n)` memory.
    LowMemory,
    /// Stores `D P^t e_i` for every `t` and folds them with Horner's rule:
    /// `O(T m)` time, `O(T n)` memory.
    #[default]
    Fast,
}

fn dense_pt(g: &Graph, y: &[f64]) -> Vec<f64> {
    g.transpose_apply(y)
}

/// Row `i` of `S^(T)`, entry `i` forced to 1.
pub fn single_source(g: &Graph, cfg: &Config, diag: &[f64], i: usize, mode: SourceMode) -> Result<Vec<f64>> {
    g.check_vertex(i)?;
    check_diag(g, diag)?;
    let n = g.n();
    let mut prop = Propagator::new(n);
    let weighted = |x: &Distribution| {
        let mut u = vec![0.0; n];
        for &(w, p) in x.entries() {
            u[w] = diag[w] * p;
        }
        u
    };
    let mut row = match mode {
        SourceMode::Fast => {
            let mut layers = Vec::with_capacity(cfg.depth);
            let mut x = Distribution::unit(i);
            for t in 0..cfg.depth {
                layers.push(weighted(&x));
                if t + 1 < cfg.depth {
                    x = prop.step(g, &x);
                }
            }
            let mut acc = layers.pop().unwrap_or_else(|| vec![0.0; n]);
            while let Some(u) = layers.pop() {
                let mut next = dense_pt(g, &acc);
                for (a, b) in next.iter_mut().zip(&u) {
                    *a = b + cfg.decay * *a;
                }
                acc = next;
            }
            acc
        }
        SourceMode::LowMemory => {
            let mut out = vec![0.0; n];
            let mut x = Distribution::unit(i);
            let mut ct = 1.0;
            for t in 0..cfg.depth {
                let mut y = weighted(&x);
                for _ in 0..t {
                    y = dense_pt(g, &y);
                }
                for (o, v) in out.iter_mut().zip(&y) {
                    *o += ct * v;
                }
                if t + 1 < cfg.depth {
                    x = prop.step(g, &x);
                    ct *= cfg.decay;
                }
            }
            out
        }
    };
    if cfg.depth > 0 {
        row[i] = 1.0;
    }
    Ok(row)
}

/// Consumer of all-pairs output rows, delivered in ascending order of `i`.
pub trait RowSink {
    /// `entries` holds `(j, score)` with `j > i`, ascending in `j`.
    fn row(&mut self, i: usize, entries: &[(usize, f64)]) -> Result<()>;
}

/// Collects `(i, j, score)` triples in memory.
#[derive(Debug, Default, Clone)]
pub struct CollectSink {
    pub triples: Vec<(usize, usize, f64)>,
}

impl RowSink for CollectSink {
    fn row(&mut self, i: usize, entries: &[(usize, f64)]) -> Result<()> {
        self.triples.extend(entries.iter().map(|&(j, s)| (i, j, s)));
        Ok(())
    }
}

/// Writes `i<TAB>j<TAB>score` lines with original labels and six decimals.
pub struct TsvSink<'a, W: Write> {
    out: W,
    labels: &'a [u64],
}

impl<'a, W: Write> TsvSink<'a, W> {
    pub fn new(out: W, labels: &'a [u64]) -> Self {
        TsvSink { out, labels }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> RowSink for TsvSink<'_, W> {
    fn row(&mut self, i: usize, entries: &[(usize, f64)]) -> Result<()> {
        for &(j, s) in entries {
            writeln!(self.out, "{}\t{}\t{:.6}", self.labels[i], self.labels[j], s)?;
        }
        Ok(())
    }
}

/// Streams every pair `i < j` with `s^(T)(i, j) >= threshold` into `sink`.
/// Rows are computed in parallel in blocks and emitted in order, so output
/// does not depend on the thread count.
pub fn all_pairs<S: RowSink>(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    threshold: f64,
    mode: SourceMode,
    sink: &mut S,
) -> Result<()> {
    check_diag(g, diag)?;
    let n = g.n();
    let block = (rayon::current_num_threads() * 4).max(1);
    let mut start = 0;
    while start < n {
        let end = (start + block).min(n);
        let rows: Vec<Result<Vec<(usize, f64)>>> = (start..end)
            .into_par_iter()
            .map(|i| {
                let row = single_source(g, cfg, diag, i, mode)?;
                Ok(row
                    .into_iter()
                    .enumerate()
                    .skip(i + 1)
                    .filter(|&(_, s)| s >= threshold)
                    .collect())
            })
            .collect();
        for (offset, row) in rows.into_iter().enumerate() {
            sink.row(start + offset, &row?)?;
        }
        start = end;
    }
    Ok(())
}
