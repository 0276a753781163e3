//! End-to-end runs that produce the files and text printed by the `simrank`
//! command-line tool. Vertices are named by their original labels on both
//! input and output; scores print with six decimals.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::diag::{estimate_diagonal, residual_norm, DiagonalCorrection, EstimationConfig, InnerMode};
use crate::error::{Error, Result};
use crate::graph::{Config, Graph};
use crate::join::{JoinConfig, JoinResult};
use crate::linear::{all_pairs, single_pair, single_source, SourceMode, TsvSink};
use crate::mc::{batch_pair_score, WalkBatch};
use crate::oracle::{mean_error, DenseMatrix, ExactOracle};
use crate::rng::{pair_index, stream, DOMAIN_QUERY};
use crate::topk::{topk_query, BoundsIndex, IndexConfig, TopkOptions, TopkStats};

/// Residuals are reported for Monte-Carlo runs only up to this many vertices.
const RESIDUAL_REPORT_LIMIT: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    Exact,
    MonteCarlo { walks: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatrixFormat {
    /// `i<TAB>j<TAB>score` for `i < j` above a threshold.
    #[default]
    Pairs,
    /// `n` lines of `n` tab-separated scores.
    Dense,
}

/// Dense id of a vertex label.
pub fn vertex(g: &Graph, label: u64) -> Result<usize> {
    g.vertex_of(label)
        .ok_or_else(|| Error::InvalidParameter(format!("vertex {label} does not occur in the graph")))
}

/// Estimates `D`, writes the diagonal file to `out` and a one-line summary to `summary`.
pub fn estimate_diag(
    g: &Graph,
    cfg: &Config,
    est: &EstimationConfig,
    out: &mut dyn Write,
    summary: &mut dyn Write,
) -> Result<DiagonalCorrection> {
    let d = estimate_diagonal(g, cfg, est)?;
    d.write_to(&mut *out)?;
    write!(
        summary,
        "n={} mode={} L={} R={} clamped={} skipped={}",
        g.n(),
        d.params().mode,
        d.params().sweeps,
        d.params().samples,
        d.clamped,
        d.skipped
    )?;
    if est.mode == InnerMode::Exact || g.n() <= RESIDUAL_REPORT_LIMIT {
        write!(summary, " residual={:.3e}", residual_norm(g, cfg, d.values())?)?;
    }
    writeln!(summary)?;
    Ok(d)
}

pub fn pair_score(g: &Graph, cfg: &Config, diag: &[f64], i: usize, j: usize, est: Estimator) -> Result<f64> {
    match est {
        Estimator::Exact => single_pair(g, cfg, diag, i, j),
        Estimator::MonteCarlo { walks } => {
            if i == j {
                return Ok(1.0);
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            let mut rng = stream(cfg.seed, DOMAIN_QUERY, pair_index(a, b));
            crate::mc::mc_single_pair(g, cfg, diag, a, b, walks, &mut rng)
        }
    }
}

pub fn source_scores(g: &Graph, cfg: &Config, diag: &[f64], u: usize, est: Estimator) -> Result<Vec<f64>> {
    match est {
        Estimator::Exact => single_source(g, cfg, diag, u, SourceMode::Fast),
        Estimator::MonteCarlo { walks } => {
            g.check_vertex(u)?;
            if walks == 0 {
                return Err(Error::InvalidParameter("walk count R must be at least 1".into()));
            }
            let mut rng = stream(cfg.seed, DOMAIN_QUERY, pair_index(u, u));
            let base = WalkBatch::simulate(g, u, walks, cfg.depth, &mut rng);
            Ok((0..g.n())
                .into_par_iter()
                .map(|v| {
                    if v == u {
                        return 1.0;
                    }
                    let mut rng = stream(cfg.seed, DOMAIN_QUERY, pair_index(u, v));
                    let other = WalkBatch::simulate(g, v, walks, cfg.depth, &mut rng);
                    batch_pair_score(cfg.decay, diag, &base, &other)
                })
                .collect())
        }
    }
}

/// One `label<TAB>score` line per vertex, in vertex order.
pub fn write_source(g: &Graph, scores: &[f64], out: &mut dyn Write) -> Result<()> {
    for (v, s) in scores.iter().enumerate() {
        writeln!(out, "{}\t{:.6}", g.label(v), s)?;
    }
    Ok(())
}

pub fn write_matrix(g: &Graph, s: &DenseMatrix, threshold: f64, format: MatrixFormat, out: &mut dyn Write) -> Result<()> {
    let n = g.n();
    match format {
        MatrixFormat::Pairs => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = s.get(i, j);
                    if v >= threshold {
                        writeln!(out, "{}\t{}\t{:.6}", g.label(i), g.label(j), v)?;
                    }
                }
            }
        }
        MatrixFormat::Dense => {
            for i in 0..n {
                let row: Vec<String> = s.row(i).iter().map(|v| format!("{v:.6}")).collect();
                writeln!(out, "{}", row.join("\t"))?;
            }
        }
    }
    Ok(())
}

/// Linearized all-pairs scores in the requested format.
pub fn allpairs(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    threshold: f64,
    format: MatrixFormat,
    out: &mut dyn Write,
) -> Result<()> {
    match format {
        MatrixFormat::Pairs => {
            let mut sink = TsvSink::new(out, g.labels());
            all_pairs(g, cfg, diag, threshold, SourceMode::Fast, &mut sink)
        }
        MatrixFormat::Dense => {
            let rows: Vec<Vec<f64>> = (0..g.n())
                .into_par_iter()
                .map(|i| single_source(g, cfg, diag, i, SourceMode::Fast))
                .collect::<Result<_>>()?;
            for row in rows {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
                writeln!(out, "{}", cells.join("\t"))?;
            }
            Ok(())
        }
    }
}

/// Builds the bounds index, writing the `gamma` table and, when built, the candidate lists.
pub fn build_index(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    params: &IndexConfig,
    gamma_out: &mut dyn Write,
    candidates_out: Option<&mut dyn Write>,
) -> Result<BoundsIndex> {
    let index = BoundsIndex::build(g, cfg, diag, params)?;
    index.write_gamma(&mut *gamma_out)?;
    if let (Some(out), Some(c)) = (candidates_out, &index.candidates) {
        c.write_text(out)?;
    }
    Ok(index)
}

/// Runs one top-k query and prints `label<TAB>score` lines, best first.
pub fn topk(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    index: &BoundsIndex,
    u: usize,
    opts: &TopkOptions,
    out: &mut dyn Write,
) -> Result<TopkStats> {
    let (ranked, stats) = topk_query(g, cfg, diag, index, u, opts)?;
    for (v, s) in ranked {
        writeln!(out, "{}\t{:.6}", g.label(v), s)?;
    }
    Ok(stats)
}

/// Runs the join; pairs go to `out`, the statistics line to `stats_out`.
pub fn join(
    g: &Graph,
    cfg: &Config,
    diag: &[f64],
    jc: &JoinConfig,
    out: &mut dyn Write,
    stats_out: &mut dyn Write,
) -> Result<JoinResult> {
    let result = crate::join::join(g, cfg, diag, jc)?;
    for (i, j, source) in result.pairs() {
        let (a, b) = (g.label(i), g.label(j));
        writeln!(out, "{}\t{}\t{}", a.min(b), a.max(b), source)?;
    }
    writeln!(stats_out, "{}", result.stats)?;
    Ok(result)
}

/// Naive iterated SimRank (`T` iterations) in the requested format.
pub fn oracle(
    g: &Graph,
    cfg: &Config,
    oracle: &ExactOracle,
    threshold: f64,
    format: MatrixFormat,
    out: &mut dyn Write,
) -> Result<()> {
    let s = oracle.naive_simrank(g, cfg)?;
    write_matrix(g, &s, threshold, format, out)
}

/// Reads a pairs TSV into a symmetric matrix with unit diagonal; absent pairs are zero.
pub fn read_pairs<R: BufRead>(g: &Graph, input: R) -> Result<DenseMatrix> {
    let mut s = DenseMatrix::identity(g.n());
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: idx + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
        }
        let label = |f: &str| -> Result<usize> {
            let l: u64 = f.trim().parse().map_err(|_| err(format!("bad vertex {f:?}")))?;
            g.vertex_of(l).ok_or_else(|| err(format!("vertex {l} does not occur in the graph")))
        };
        let (i, j) = (label(fields[0])?, label(fields[1])?);
        let v: f64 = fields[2].trim().parse().map_err(|_| err(format!("bad score {:?}", fields[2])))?;
        s.set(i, j, v);
        s.set(j, i, v);
    }
    Ok(s)
}

/// Mean error of `scores` against the converged oracle.
pub fn accuracy(g: &Graph, cfg: &Config, oracle: &ExactOracle, scores: &DenseMatrix) -> Result<f64> {
    let truth = oracle.converged_simrank(g, cfg)?;
    Ok(mean_error(&truth, scores))
}

/// Linearized all-pairs scores as a dense matrix.
pub fn linear_matrix(g: &Graph, cfg: &Config, diag: &[f64]) -> Result<DenseMatrix> {
    let n = g.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| single_source(g, cfg, diag, i, SourceMode::Fast))
        .collect::<Result<_>>()?;
    let mut s = DenseMatrix::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            s.set(i, j, v);
        }
    }
    Ok(s)
}
