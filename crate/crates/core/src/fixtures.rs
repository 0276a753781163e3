//! Small graphs with known SimRank structure, shared by tests, the CLI and
//! the Python bindings.

use crate::graph::{load_edge_list, Graph};

/// Star of order 4: hub 0 linked both ways to leaves 1, 2, 3.
pub const STAR_EDGES: &str = "0 1\n0 2\n0 3\n1 0\n2 0\n3 0\n";

/// Seven-vertex undirected example graph, vertices labelled 1..=7.
pub const SEVEN_VERTEX_LINKS: [(u64, u64); 11] = [
    (1, 3),
    (1, 4),
    (2, 3),
    (2, 4),
    (2, 5),
    (3, 4),
    (3, 7),
    (4, 5),
    (4, 7),
    (5, 7),
    (6, 7),
];

pub fn star() -> Graph {
    load_edge_list(STAR_EDGES.as_bytes()).expect("star fixture").0
}

/// The seven-vertex graph with every undirected link expanded to both
/// directions. Use [`Graph::vertex_of`] to map labels 1..=7 to dense ids.
pub fn seven_vertex() -> Graph {
    let mut text = String::new();
    for (u, v) in SEVEN_VERTEX_LINKS {
        text.push_str(&format!("{u} {v}\n{v} {u}\n"));
    }
    load_edge_list(text.as_bytes()).expect("seven-vertex fixture").0
}

/// Directed two-vertex path `0 -> 1`.
pub fn path2() -> Graph {
    Graph::from_edges(2, [(0, 1)]).expect("path fixture").0
}

/// Directed cycle `0 -> 1 -> ... -> n-1 -> 0`.
pub fn cycle(n: usize) -> Graph {
    Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("cycle fixture").0
}

/// Deterministic pseudo-random simple graph with `n` vertices and roughly
/// `n * avg_degree` edges, plus a few reciprocal links.
pub fn random_graph(n: usize, avg_degree: f64, seed: u64) -> Graph {
    use rand::Rng;
    let mut rng = crate::rng::seeded(seed);
    let m = (n as f64 * avg_degree).round() as usize;
    let mut edges = Vec::with_capacity(m + m / 4);
    for _ in 0..m {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        edges.push((u, v));
        if rng.random_bool(0.25) {
            edges.push((v, u));
        }
    }
    Graph::from_edges(n, edges).expect("random fixture").0
}
