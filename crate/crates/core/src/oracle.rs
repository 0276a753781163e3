//! Dense ground-truth SimRank for small graphs.
//!
//! Iterates `S <- (c P^T S P) with unit diagonal` from the identity. Each
//! iteration costs `O(n m)` via `M = S P` followed by `P^T M`. Everything
//! here is quadratic in memory and exists to check the scalable algorithms.

use crate::diag::{DiagMode, DiagParams, DiagonalCorrection};
use crate::error::{Error, Result};
use crate::graph::{Config, Graph};

pub const DEFAULT_ORACLE_CAP: usize = 5_000;

/// Row-major `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        DenseMatrix { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// `P^T S P` for a dense symmetric `S`.
pub fn transition_sandwich(g: &Graph, s: &DenseMatrix) -> DenseMatrix {
    let n = g.n();
    // m[a][j] = mean over b in I(j) of s[a][b]
    let mut m = DenseMatrix::zeros(n);
    for a in 0..n {
        let row = s.row(a);
        for j in 0..n {
            let nbrs = g.in_neighbors(j);
            if !nbrs.is_empty() {
                let v = nbrs.iter().map(|&b| row[b]).sum::<f64>() / nbrs.len() as f64;
                m.set(a, j, v);
            }
        }
    }
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        let nbrs = g.in_neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        let scale = 1.0 / nbrs.len() as f64;
        let dst = &mut out.data[i * n..(i + 1) * n];
        for &a in nbrs {
            for (d, &x) in dst.iter_mut().zip(m.row(a)) {
                *d += x;
            }
        }
        for d in dst.iter_mut() {
            *d *= scale;
        }
    }
    // the two passes sum in different orders for (i,j) and (j,i)
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

fn iterate(g: &Graph, c: f64, s: &DenseMatrix) -> DenseMatrix {
    let mut next = transition_sandwich(g, s);
    for v in next.data.iter_mut() {
        *v *= c;
    }
    for i in 0..g.n() {
        next.set(i, i, 1.0);
    }
    next
}

/// Brute-force SimRank with a vertex cap.
#[derive(Debug, Clone, Copy)]
pub struct ExactOracle {
    pub cap: usize,
    /// Successive-iterate max difference that counts as converged.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ExactOracle {
    fn default() -> Self {
        ExactOracle { cap: DEFAULT_ORACLE_CAP, tolerance: 1e-12, max_iterations: 200 }
    }
}

impl ExactOracle {
    fn check(&self, g: &Graph) -> Result<()> {
        if g.n() > self.cap {
            Err(Error::OracleCap { n: g.n(), cap: self.cap })
        } else {
            Ok(())
        }
    }

    /// Exactly `cfg.depth` iterations of the SimRank recursion.
    pub fn naive_simrank(&self, g: &Graph, cfg: &Config) -> Result<DenseMatrix> {
        cfg.validate()?;
        self.check(g)?;
        let mut s = DenseMatrix::identity(g.n());
        for _ in 0..cfg.depth {
            s = iterate(g, cfg.decay, &s);
        }
        Ok(s)
    }

    /// Iterates until successive iterates differ by less than `tolerance`
    /// or `max_iterations` is reached.
    pub fn converged_simrank(&self, g: &Graph, cfg: &Config) -> Result<DenseMatrix> {
        cfg.validate()?;
        self.check(g)?;
        let mut s = DenseMatrix::identity(g.n());
        for _ in 0..self.max_iterations {
            let next = iterate(g, cfg.decay, &s);
            let delta = next.max_abs_diff(&s);
            s = next;
            if delta < self.tolerance {
                break;
            }
        }
        Ok(s)
    }

    /// `D = S - c P^T S P` from the converged matrix.
    pub fn exact_diagonal(&self, g: &Graph, cfg: &Config) -> Result<DiagonalCorrection> {
        let s = self.converged_simrank(g, cfg)?;
        Ok(diagonal_from_scores(g, cfg, &s))
    }

    /// Unordered pairs `i < j` with converged score at least `theta`.
    pub fn brute_force_join(&self, g: &Graph, cfg: &Config, theta: f64) -> Result<Vec<(usize, usize)>> {
        let s = self.converged_simrank(g, cfg)?;
        Ok(pairs_above(&s, theta))
    }

    /// The `k` best vertices for `source`, ties broken by ascending id.
    pub fn brute_force_topk(
        &self,
        g: &Graph,
        cfg: &Config,
        source: usize,
        k: usize,
    ) -> Result<Vec<(usize, f64)>> {
        g.check_vertex(source)?;
        let s = self.converged_simrank(g, cfg)?;
        Ok(rank_row(&s, source, k))
    }
}

/// Exact diagonal correction implied by a SimRank matrix.
pub fn diagonal_from_scores(g: &Graph, cfg: &Config, s: &DenseMatrix) -> DiagonalCorrection {
    let values = (0..g.n())
        .map(|k| {
            let nbrs = g.in_neighbors(k);
            if nbrs.is_empty() {
                return 1.0;
            }
            let mut acc = 0.0;
            for &a in nbrs {
                for &b in nbrs {
                    acc += s.get(a, b);
                }
            }
            let deg = nbrs.len() as f64;
            s.get(k, k) - cfg.decay * acc / (deg * deg)
        })
        .collect();
    let params = DiagParams {
        decay: cfg.decay,
        depth: cfg.depth,
        sweeps: 0,
        samples: 0,
        mode: DiagMode::Oracle,
        seed: cfg.seed,
    };
    DiagonalCorrection::new(values, params)
}

pub fn pairs_above(s: &DenseMatrix, theta: f64) -> Vec<(usize, usize)> {
    let n = s.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if s.get(i, j) >= theta {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn rank_row(s: &DenseMatrix, source: usize, k: usize) -> Vec<(usize, f64)> {
    let mut row: Vec<(usize, f64)> =
        s.row(source).iter().copied().enumerate().filter(|&(v, _)| v != source).collect();
    row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    row.truncate(k);
    row
}

/// Mean absolute error `(1/n^2) sum_ij |a_ij - b_ij|`.
pub fn mean_error(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let n = a.n() as f64;
    a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum::<f64>() / (n * n)
}

pub fn naive_simrank(g: &Graph, cfg: &Config) -> Result<DenseMatrix> {
    ExactOracle::default().naive_simrank(g, cfg)
}

pub fn converged_simrank(g: &Graph, cfg: &Config) -> Result<DenseMatrix> {
    ExactOracle::default().converged_simrank(g, cfg)
}

pub fn exact_diagonal(g: &Graph, cfg: &Config) -> Result<DiagonalCorrection> {
    ExactOracle::default().exact_diagonal(g, cfg)
}

pub fn brute_force_join(g: &Graph, cfg: &Config, theta: f64) -> Result<Vec<(usize, usize)>> {
    ExactOracle::default().brute_force_join(g, cfg, theta)
}

pub fn brute_force_topk(g: &Graph, cfg: &Config, source: usize, k: usize) -> Result<Vec<(usize, f64)>> {
    ExactOracle::default().brute_force_topk(g, cfg, source, k)
}
