//! `simrank`: command-line front end for the linearized SimRank library.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use simrank_core::diag::{DiagonalCorrection, EstimationConfig};
use simrank_core::join::{FilterConfig, JoinConfig, Worklist};
use simrank_core::oracle::ExactOracle;
use simrank_core::pipeline::{self, Estimator, MatrixFormat};
use simrank_core::topk::{BoundsIndex, CandidateIndex, IndexConfig, Scoring, TopkOptions};
use simrank_core::{load_edge_list, Config, Graph, InnerMode};

const DEFAULT_DECAY: f64 = 0.6;
const DEFAULT_DEPTH: usize = 11;

#[derive(Parser, Debug)]
#[command(name = "simrank", version, about = "SimRank similarity via the linearized recurrence S = cP^T S P + D")]
struct Cli {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true, env = "SIMRANK_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the diagonal correction D and write it to a file.
    EstimateDiag(EstimateArgs),
    /// Score a pair, a source vertex or all pairs.
    Query(QueryArgs),
    /// Precompute the L2 bound table and, optionally, the candidate lists.
    BuildIndex(BuildIndexArgs),
    /// Top-k most similar vertices to a source.
    Topk(TopkArgs),
    /// All pairs with similarity at least theta.
    Join(JoinArgs),
    /// Naive iterated SimRank for small graphs.
    Oracle(OracleArgs),
    /// Mean error of a pairs file against the converged oracle.
    Accuracy(AccuracyArgs),
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Decay factor c [default: 0.6, or the value stored in --diag].
    #[arg(long = "c")]
    decay: Option<f64>,
    /// Truncation depth T [default: 11, or the value stored in --diag].
    #[arg(long = "T")]
    depth: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct DiagArgs {
    /// Diagonal file from `estimate-diag`. When omitted D is estimated
    /// on the fly with L=3, R=100.
    #[arg(long)]
    diag: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

impl From<Mode> for InnerMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => InnerMode::Exact,
            Mode::Mc => InnerMode::MonteCarlo,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Pairs,
    Dense,
}

impl From<Format> for MatrixFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Pairs => MatrixFormat::Pairs,
            Format::Dense => MatrixFormat::Dense,
        }
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Gauss-Seidel sweeps.
    #[arg(long = "L", default_value_t = 3)]
    sweeps: usize,
    /// Walk pairs per diagonal entry in Monte-Carlo mode.
    #[arg(long = "R", default_value_t = 100)]
    samples: usize,
    #[arg(long, value_enum, default_value = "mc")]
    mode: Mode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    diag: DiagArgs,
    #[arg(long, value_enum, default_value = "exact")]
    estimator: Mode,
    /// Walks per vertex for the Monte-Carlo estimator.
    #[arg(long = "R", default_value_t = 100)]
    walks: usize,
    #[command(subcommand)]
    what: QueryKind,
}

#[derive(Subcommand, Debug)]
enum QueryKind {
    /// One score.
    Pair { i: u64, j: u64 },
    /// `label<TAB>score` for every vertex.
    Source { i: u64 },
    /// Every pair scoring at least --threshold.
    Allpairs {
        #[arg(long, default_value_t = 1e-4)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "pairs")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// How the gamma table is computed.
    #[arg(long = "index-mode", value_enum, default_value = "mc")]
    mode: Mode,
    /// Walks per step for Monte-Carlo gamma.
    #[arg(long = "gamma-samples", default_value_t = 100)]
    gamma_samples: usize,
    /// Pilot walks per vertex for the candidate index.
    #[arg(long = "P", default_value_t = 10)]
    p_walks: usize,
    /// Probe walks per pilot position for the candidate index.
    #[arg(long = "Q", default_value_t = 5)]
    q_walks: usize,
}

impl IndexArgs {
    fn config(&self, build_candidates: bool) -> IndexConfig {
        IndexConfig {
            mode: self.mode.into(),
            gamma_samples: self.gamma_samples,
            p_walks: self.p_walks,
            q_walks: self.q_walks,
            build_candidates,
        }
    }
}

#[derive(Args, Debug)]
struct BuildIndexArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    diag: DiagArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// Binary gamma table.
    #[arg(long)]
    out: PathBuf,
    /// Also build the candidate index and write it here.
    #[arg(long)]
    candidates: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TopkArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    diag: DiagArgs,
    #[arg(long)]
    source: u64,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long = "theta-floor", default_value_t = 0.01)]
    theta_floor: f64,
    /// Gamma table from `build-index`; built in memory when omitted.
    #[arg(long)]
    index: Option<PathBuf>,
    /// Candidate lists from `build-index --candidates`; restricts the scan.
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[command(flatten)]
    index_params: IndexArgs,
    /// Largest BFS shell scanned [default: T].
    #[arg(long = "d-max")]
    d_max: Option<usize>,
    #[arg(long, value_enum, default_value = "mc")]
    scoring: Mode,
    /// Walks for the first Monte-Carlo score of a candidate.
    #[arg(long = "r-lo", default_value_t = 10)]
    r_lo: usize,
    /// Walks for rescoring promising candidates.
    #[arg(long = "r-hi", default_value_t = 100)]
    r_hi: usize,
    /// How the per-query L1 bounds are computed.
    #[arg(long = "bound-mode", value_enum, default_value = "mc")]
    bound_mode: Mode,
    #[arg(long = "bound-samples", default_value_t = 100)]
    bound_samples: usize,
    #[arg(long = "no-l1")]
    no_l1: bool,
    #[arg(long = "no-l2")]
    no_l2: bool,
    /// Prune with the distance bound c^ceil(d/2).
    #[arg(long = "distance-bound")]
    distance_bound: bool,
}

#[derive(Args, Debug)]
struct JoinArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    diag: DiagArgs,
    #[arg(long, default_value_t = 0.2)]
    theta: f64,
    /// Pairs with filter score at least gamma*theta are verified.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Stochastic thresholding strength; 0 turns it off.
    #[arg(long = "beta-skip", default_value_t = 100.0)]
    beta_skip: f64,
    /// Per-pair verification failure probability.
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    /// Sample cap per verified pair.
    #[arg(long, default_value_t = 1000)]
    rmax: usize,
    /// Residual entries allowed before the filter gives up.
    #[arg(long = "memory-cap", default_value_t = simrank_core::join::DEFAULT_MEMORY_CAP)]
    memory_cap: usize,
    /// Push the largest residual first instead of FIFO order.
    #[arg(long = "max-residual")]
    max_residual: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "pairs")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AccuracyArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Pairs file (`label<TAB>label<TAB>score`) to evaluate.
    #[arg(long)]
    scores: PathBuf,
}

fn load_graph(path: &Path) -> Result<Graph> {
    let file = File::open(path).with_context(|| format!("cannot open graph {}", path.display()))?;
    let (g, _) = load_edge_list(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    Ok(g)
}

fn read_diag(path: &Path) -> Result<DiagonalCorrection> {
    let file = File::open(path).with_context(|| format!("cannot open diagonal file {}", path.display()))?;
    DiagonalCorrection::read_from(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

struct Loaded {
    graph: Graph,
    cfg: Config,
    diag: Option<DiagonalCorrection>,
}

/// Loads the graph and the optional D file; `c` and `T` fall back to the
/// D file header, then to the defaults.
fn load(args: &GraphArgs, diag: Option<&Path>) -> Result<Loaded> {
    let graph = load_graph(&args.graph)?;
    let diag = diag.map(read_diag).transpose()?;
    let decay = args.decay.or(diag.as_ref().map(|d| d.params().decay)).unwrap_or(DEFAULT_DECAY);
    let depth = args.depth.or(diag.as_ref().map(|d| d.params().depth)).unwrap_or(DEFAULT_DEPTH);
    let cfg = Config::new(decay, depth, args.seed)?;
    if let Some(d) = &diag {
        d.check_graph(&graph)?;
    }
    Ok(Loaded { graph, cfg, diag })
}

impl Loaded {
    fn diagonal(&mut self) -> Result<Vec<f64>> {
        match self.diag.take() {
            Some(d) => Ok(d.values().to_vec()),
            None => Ok(simrank_core::estimate_diagonal(&self.graph, &self.cfg, &EstimationConfig::default())?
                .values()
                .to_vec()),
        }
    }
}

fn cmd_estimate_diag(a: &EstimateArgs) -> Result<()> {
    let l = load(&a.graph, None)?;
    let est = match a.mode {
        Mode::Exact => EstimationConfig::exact(a.sweeps),
        Mode::Mc => EstimationConfig::monte_carlo(a.sweeps, a.samples),
    };
    let mut out = output(Some(&a.out))?;
    let mut stdout = io::stdout().lock();
    pipeline::estimate_diag(&l.graph, &l.cfg, &est, &mut out, &mut stdout)?;
    out.flush()?;
    Ok(())
}

fn cmd_query(a: &QueryArgs) -> Result<()> {
    let mut l = load(&a.graph, a.diag.diag.as_deref())?;
    let diag = l.diagonal()?;
    let (g, cfg) = (&l.graph, &l.cfg);
    let est = match a.estimator {
        Mode::Exact => Estimator::Exact,
        Mode::Mc => Estimator::MonteCarlo { walks: a.walks },
    };
    match &a.what {
        QueryKind::Pair { i, j } => {
            let (i, j) = (pipeline::vertex(g, *i)?, pipeline::vertex(g, *j)?);
            println!("{:.6}", pipeline::pair_score(g, cfg, &diag, i, j, est)?);
        }
        QueryKind::Source { i } => {
            let scores = pipeline::source_scores(g, cfg, &diag, pipeline::vertex(g, *i)?, est)?;
            let mut out = output(None)?;
            pipeline::write_source(g, &scores, &mut out)?;
            out.flush()?;
        }
        QueryKind::Allpairs { threshold, format, out } => {
            if matches!(est, Estimator::MonteCarlo { .. }) {
                bail!("allpairs supports only --estimator exact");
            }
            let mut out = output(out.as_deref())?;
            pipeline::allpairs(g, cfg, &diag, *threshold, (*format).into(), &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_build_index(a: &BuildIndexArgs) -> Result<()> {
    let mut l = load(&a.graph, a.diag.diag.as_deref())?;
    let diag = l.diagonal()?;
    let params = a.index.config(a.candidates.is_some());
    let mut gamma = output(Some(&a.out))?;
    let mut cands = a.candidates.as_deref().map(|p| output(Some(p))).transpose()?;
    pipeline::build_index(
        &l.graph,
        &l.cfg,
        &diag,
        &params,
        &mut gamma,
        cands.as_mut().map(|w| w as &mut dyn Write),
    )?;
    gamma.flush()?;
    if let Some(mut w) = cands {
        w.flush()?;
    }
    Ok(())
}

fn cmd_topk(a: &TopkArgs) -> Result<()> {
    let mut l = load(&a.graph, a.diag.diag.as_deref())?;
    let diag = l.diagonal()?;
    let (g, cfg) = (&l.graph, &l.cfg);
    let mut index = match &a.index {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("cannot open index {}", p.display()))?;
            let index = BoundsIndex::read_gamma(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))?;
            index.check_compatible(g, cfg)?;
            index
        }
        None => BoundsIndex::build(g, cfg, &diag, &a.index_params.config(false))?,
    };
    if let Some(p) = &a.candidates {
        let file = File::open(p).with_context(|| format!("cannot open candidates {}", p.display()))?;
        let c = CandidateIndex::read_text(BufReader::new(file)).with_context(|| format!("reading {}", p.display()))?;
        if c.len() != g.n() {
            bail!("candidate file covers {} vertices but the graph has {}", c.len(), g.n());
        }
        index.candidates = Some(c);
    }
    let opts = TopkOptions {
        k: a.k,
        theta_floor: a.theta_floor,
        d_max: a.d_max,
        scoring: match a.scoring {
            Mode::Exact => Scoring::Exact,
            Mode::Mc => Scoring::MonteCarlo { r_lo: a.r_lo, r_hi: a.r_hi },
        },
        bound_mode: a.bound_mode.into(),
        bound_samples: a.bound_samples,
        use_l1: !a.no_l1,
        use_l2: !a.no_l2,
        use_distance: a.distance_bound,
        use_candidates: a.candidates.is_some(),
    };
    let u = pipeline::vertex(g, a.source)?;
    let mut out = output(None)?;
    let stats = pipeline::topk(g, cfg, &diag, &index, u, &opts, &mut out)?;
    out.flush()?;
    eprintln!(
        "scored={} rescored={} l2_pruned={} shells_skipped={}",
        stats.scored, stats.rescored, stats.l2_pruned, stats.shells_skipped
    );
    Ok(())
}

fn cmd_join(a: &JoinArgs) -> Result<()> {
    let mut l = load(&a.graph, a.diag.diag.as_deref())?;
    let diag = l.diagonal()?;
    let jc = JoinConfig {
        filter: FilterConfig {
            theta: a.theta,
            gamma_acc: a.gamma,
            beta_skip: (a.beta_skip > 0.0).then_some(a.beta_skip),
            memory_cap: a.memory_cap,
            worklist: if a.max_residual { Worklist::MaxResidual } else { Worklist::Fifo },
        },
        p: a.p,
        max_samples: a.rmax,
    };
    let mut out = output(a.out.as_deref())?;
    let mut stats = io::stderr().lock();
    pipeline::join(&l.graph, &l.cfg, &diag, &jc, &mut out, &mut stats)?;
    out.flush()?;
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Result<()> {
    let l = load(&a.graph, None)?;
    let mut out = output(a.out.as_deref())?;
    pipeline::oracle(&l.graph, &l.cfg, &ExactOracle::default(), a.threshold, a.format.into(), &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_accuracy(a: &AccuracyArgs) -> Result<()> {
    let l = load(&a.graph, None)?;
    let file = File::open(&a.scores).with_context(|| format!("cannot open {}", a.scores.display()))?;
    let scores =
        pipeline::read_pairs(&l.graph, BufReader::new(file)).with_context(|| format!("reading {}", a.scores.display()))?;
    let me = pipeline::accuracy(&l.graph, &l.cfg, &ExactOracle::default(), &scores)?;
    println!("{me:.9}");
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::EstimateDiag(a) => cmd_estimate_diag(a),
        Command::Query(a) => cmd_query(a),
        Command::BuildIndex(a) => cmd_build_index(a),
        Command::Topk(a) => cmd_topk(a),
        Command::Join(a) => cmd_join(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Accuracy(a) => cmd_accuracy(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(&cli);
    eprintln!("elapsed {:.3}s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
