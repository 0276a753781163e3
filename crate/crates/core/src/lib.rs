//! SimRank computation through the linearized recurrence `S = c P^T S P + D`.
//!
//! * [`graph`]: CSR graphs, edge-list ingestion, walk primitives.
//! * [`oracle`]: dense reference implementations for small graphs.
//! * [`diag`]: estimation of the diagonal correction `D`.
//! * [`linear`]: deterministic single-pair, single-source and all-pairs queries.
//! * [`mc`]: Monte-Carlo estimators and threshold verification.
//! * [`topk`]: top-k search with L1/L2 pruning bounds.
//! * [`join`]: threshold similarity join.
//! * [`pipeline`]: end-to-end runs behind the command-line tool.

pub mod diag;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod join;
pub mod linear;
pub mod mc;
pub mod oracle;
pub mod pipeline;
pub mod rng;
pub mod topk;

pub use diag::{estimate_diagonal, DiagMode, DiagonalCorrection, EstimationConfig, InnerMode};
pub use error::{Error, Result};
pub use graph::{load_edge_list, Config, Graph};
pub use join::{join, JoinConfig, JoinResult};
pub use linear::{all_pairs, single_pair, single_source, SourceMode};
pub use mc::{mc_single_pair, verify_pair, Verification};
pub use topk::{topk_query, BoundsIndex, IndexConfig, TopkOptions};
