//! Python bindings. Vertices are addressed by their integer labels.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use simrank_core::diag::{DiagonalCorrection, EstimationConfig};
use simrank_core::join::JoinConfig;
use simrank_core::linear::CollectSink;
use simrank_core::oracle::ExactOracle;
use simrank_core::pipeline::{self, Estimator};
use simrank_core::topk::{BoundsIndex, IndexConfig, Scoring, TopkOptions};
use simrank_core::{Config, Error, InnerMode, SourceMode};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn mode(name: &str) -> PyResult<InnerMode> {
    match name {
        "exact" => Ok(InnerMode::Exact),
        "mc" => Ok(InnerMode::MonteCarlo),
        _ => Err(PyValueError::new_err(format!("mode must be 'exact' or 'mc', got {name:?}"))),
    }
}

fn config(c: f64, t: usize, seed: u64) -> PyResult<Config> {
    Config::new(c, t, seed).map_err(to_py)
}

/// Simple directed graph; self-loops and duplicate edges are dropped.
#[pyclass(frozen, module = "simrank")]
struct Graph {
    inner: simrank_core::Graph,
}

impl Graph {
    fn vertex(&self, label: u64) -> PyResult<usize> {
        pipeline::vertex(&self.inner, label).map_err(to_py)
    }
}

#[pymethods]
impl Graph {
    /// Builds a graph from `(u, v)` label pairs, each an edge `u -> v`.
    #[new]
    fn new(edges: Vec<(u64, u64)>) -> PyResult<Self> {
        let (inner, _) = simrank_core::Graph::from_labeled_edges(edges).map_err(to_py)?;
        Ok(Graph { inner })
    }

    /// Reads a whitespace-separated edge list.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let (inner, _) = simrank_core::load_edge_list(BufReader::new(file)).map_err(to_py)?;
        Ok(Graph { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn labels(&self) -> Vec<u64> {
        self.inner.labels().to_vec()
    }

    fn in_neighbors(&self, label: u64) -> PyResult<Vec<u64>> {
        let v = self.vertex(label)?;
        Ok(self.inner.in_neighbors(v).iter().map(|&u| self.inner.label(u)).collect())
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.num_edges())
    }
}

/// Diagonal correction `D` together with the parameters it was estimated with.
#[pyclass(frozen, module = "simrank")]
struct Diagonal {
    inner: DiagonalCorrection,
}

impl Diagonal {
    fn config(&self) -> PyResult<Config> {
        let p = self.inner.params();
        config(p.decay, p.depth, p.seed)
    }

    fn checked(&self, g: &Graph) -> PyResult<Config> {
        self.inner.check_graph(&g.inner).map_err(to_py)?;
        self.config()
    }
}

#[pymethods]
impl Diagonal {
    /// Values in vertex order, i.e. in the order of `Graph.labels`.
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.params().decay
    }

    #[getter(T)]
    fn depth(&self) -> usize {
        self.inner.params().depth
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.params().seed
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.params().mode.to_string()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let mut out = BufWriter::new(file);
        self.inner.write_to(&mut out).map_err(to_py)?;
        out.flush().map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        let inner = DiagonalCorrection::read_from(BufReader::new(file)).map_err(to_py)?;
        Ok(Diagonal { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let p = self.inner.params();
        format!("Diagonal(n={}, c={}, T={}, mode={})", self.inner.len(), p.decay, p.depth, p.mode)
    }
}

/// Estimates `D` with `L` Gauss-Seidel sweeps; `mode` is "exact" or "mc".
#[pyfunction]
#[pyo3(signature = (graph, c=0.6, T=11, L=3, R=100, mode="mc", seed=0))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn estimate_diagonal(
    py: Python<'_>,
    graph: &Graph,
    c: f64,
    T: usize,
    L: usize,
    R: usize,
    mode: &str,
    seed: u64,
) -> PyResult<Diagonal> {
    let cfg = config(c, T, seed)?;
    let est = match self::mode(mode)? {
        InnerMode::Exact => EstimationConfig::exact(L),
        InnerMode::MonteCarlo => EstimationConfig::monte_carlo(L, R),
    };
    let inner = py.detach(|| simrank_core::estimate_diagonal(&graph.inner, &cfg, &est)).map_err(to_py)?;
    Ok(Diagonal { inner })
}

/// `s(i, j)`; `estimator` "exact" uses the truncated series, "mc" uses `R` walks per side.
#[pyfunction]
#[pyo3(signature = (graph, diag, i, j, estimator="exact", R=100))]
#[allow(non_snake_case)]
fn single_pair(
    py: Python<'_>,
    graph: &Graph,
    diag: &Diagonal,
    i: u64,
    j: u64,
    estimator: &str,
    R: usize,
) -> PyResult<f64> {
    let cfg = diag.checked(graph)?;
    let (i, j) = (graph.vertex(i)?, graph.vertex(j)?);
    let est = match mode(estimator)? {
        InnerMode::Exact => Estimator::Exact,
        InnerMode::MonteCarlo => Estimator::MonteCarlo { walks: R },
    };
    py.detach(|| pipeline::pair_score(&graph.inner, &cfg, diag.inner.values(), i, j, est)).map_err(to_py)
}

/// `(label, score)` for every vertex, in vertex order.
#[pyfunction]
fn single_source(py: Python<'_>, graph: &Graph, diag: &Diagonal, i: u64) -> PyResult<Vec<(u64, f64)>> {
    let cfg = diag.checked(graph)?;
    let u = graph.vertex(i)?;
    let g = &graph.inner;
    let row = py
        .detach(|| simrank_core::single_source(g, &cfg, diag.inner.values(), u, SourceMode::Fast))
        .map_err(to_py)?;
    Ok(row.into_iter().enumerate().map(|(v, s)| (g.label(v), s)).collect())
}

/// `(i, j, score)` for every pair `i < j` (vertex order) scoring at least `threshold`.
#[pyfunction]
#[pyo3(signature = (graph, diag, threshold=1e-4))]
fn all_pairs(py: Python<'_>, graph: &Graph, diag: &Diagonal, threshold: f64) -> PyResult<Vec<(u64, u64, f64)>> {
    let cfg = diag.checked(graph)?;
    let g = &graph.inner;
    let mut sink = CollectSink::default();
    py.detach(|| simrank_core::all_pairs(g, &cfg, diag.inner.values(), threshold, SourceMode::Fast, &mut sink))
        .map_err(to_py)?;
    Ok(sink.triples.into_iter().map(|(i, j, s)| (g.label(i), g.label(j), s)).collect())
}

/// The `k` most similar vertices to `source`, best first.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (graph, diag, source, k=20, theta_floor=0.01, scoring="mc", bounds="mc"))]
fn topk(
    py: Python<'_>,
    graph: &Graph,
    diag: &Diagonal,
    source: u64,
    k: usize,
    theta_floor: f64,
    scoring: &str,
    bounds: &str,
) -> PyResult<Vec<(u64, f64)>> {
    let cfg = diag.checked(graph)?;
    let u = graph.vertex(source)?;
    let bound_mode = mode(bounds)?;
    let opts = TopkOptions {
        k,
        theta_floor,
        scoring: match mode(scoring)? {
            InnerMode::Exact => Scoring::Exact,
            InnerMode::MonteCarlo => Scoring::MonteCarlo { r_lo: 10, r_hi: 100 },
        },
        bound_mode,
        ..TopkOptions::default()
    };
    let params = IndexConfig { mode: bound_mode, build_candidates: false, ..IndexConfig::default() };
    let g = &graph.inner;
    let ranked = py
        .detach(|| {
            let index = BoundsIndex::build(g, &cfg, diag.inner.values(), &params)?;
            simrank_core::topk_query(g, &cfg, diag.inner.values(), &index, u, &opts)
        })
        .map_err(to_py)?
        .0;
    Ok(ranked.into_iter().map(|(v, s)| (g.label(v), s)).collect())
}

/// Pairs with similarity at least `theta` as `(i, j, source)`, `source` being
/// "filter" or "verified".
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (graph, diag, theta=0.2, gamma=0.0, p=0.01, rmax=1000, beta_skip=100.0))]
fn join(
    py: Python<'_>,
    graph: &Graph,
    diag: &Diagonal,
    theta: f64,
    gamma: f64,
    p: f64,
    rmax: usize,
    beta_skip: f64,
) -> PyResult<Vec<(u64, u64, String)>> {
    let cfg = diag.checked(graph)?;
    let mut jc = JoinConfig::new(theta, gamma);
    jc.p = p;
    jc.max_samples = rmax;
    jc.filter.beta_skip = (beta_skip > 0.0).then_some(beta_skip);
    let g = &graph.inner;
    let result = py.detach(|| simrank_core::join(g, &cfg, diag.inner.values(), &jc)).map_err(to_py)?;
    Ok(result
        .pairs()
        .into_iter()
        .map(|(i, j, src)| (g.label(i), g.label(j), src.to_string()))
        .collect())
}

/// Dense SimRank matrix from `T` naive iterations, rows in vertex order.
#[pyfunction]
#[pyo3(signature = (graph, c=0.6, T=11))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn naive_simrank(py: Python<'_>, graph: &Graph, c: f64, T: usize) -> PyResult<Vec<Vec<f64>>> {
    let cfg = config(c, T, 0)?;
    let s = py.detach(|| ExactOracle::default().naive_simrank(&graph.inner, &cfg)).map_err(to_py)?;
    Ok((0..s.n()).map(|i| s.row(i).to_vec()).collect())
}

/// Exact diagonal correction derived from the converged oracle.
#[pyfunction]
#[pyo3(signature = (graph, c=0.6, T=11))]
#[allow(non_snake_case, clippy::too_many_arguments)]
fn exact_diagonal(py: Python<'_>, graph: &Graph, c: f64, T: usize) -> PyResult<Diagonal> {
    let cfg = config(c, T, 0)?;
    let inner = py.detach(|| ExactOracle::default().exact_diagonal(&graph.inner, &cfg)).map_err(to_py)?;
    Ok(Diagonal { inner })
}

#[pymodule]
fn simrank(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_class::<Diagonal>()?;
    m.add_function(wrap_pyfunction!(estimate_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(single_pair, m)?)?;
    m.add_function(wrap_pyfunction!(single_source, m)?)?;
    m.add_function(wrap_pyfunction!(all_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(topk, m)?)?;
    m.add_function(wrap_pyfunction!(join, m)?)?;
    m.add_function(wrap_pyfunction!(naive_simrank, m)?)?;
    m.add_function(wrap_pyfunction!(exact_diagonal, m)?)?;
    Ok(())
}
