//! Directed misclassification graph: construction from prediction pairs,
//! staged pruning, and force-directed layout.

mod layout;

pub use layout::{layout_forceatlas2, net_force, Layout, LayoutParams};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::atomic_write;

/// Directed weighted graph over namespaced class names (`dataset:class`).
/// Edge weight counts how many images of the source class were predicted as
/// the destination class. Nodes survive edge removal until explicitly
/// dropped as isolated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PredictionGraph {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), u64>,
}

impl PredictionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Count one `(ground truth, predicted)` occurrence per input pair.
    pub fn build(predictions: &[(String, String)]) -> Self {
        let mut g = PredictionGraph::new();
        for (gt, pred) in predictions {
            g.add_edge(gt, pred, 1);
        }
        g
    }

    pub fn add_edge(&mut self, src: &str, dst: &str, weight: u64) {
        self.nodes.insert(src.to_string());
        self.nodes.insert(dst.to_string());
        *self
            .edges
            .entry((src.to_string(), dst.to_string()))
            .or_insert(0) += weight;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn weight(&self, src: &str, dst: &str) -> Option<u64> {
        self.edges.get(&(src.to_string(), dst.to_string())).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.edges.iter().map(|((s, d), w)| (s.as_str(), d.as_str(), *w))
    }

    /// Undirected degree; self-loops count once.
    pub fn degree(&self, node: &str) -> usize {
        self.edges
            .keys()
            .filter(|(s, d)| s == node || d == node)
            .count()
    }

    /// TSV edge list `src<TAB>dst<TAB>weight`, sorted.
    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for ((src, dst), w) in &self.edges {
            out.push_str(&format!("{src}\t{dst}\t{w}\n"));
        }
        // Isolated nodes are kept as degenerate rows so they survive IO.
        for node in &self.nodes {
            if self.degree(node) == 0 {
                out.push_str(&format!("{node}\t\t0\n"));
            }
        }
        atomic_write(path, out.as_bytes())
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut g = PredictionGraph::new();
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    file: path.display().to_string(),
                    line: no + 1,
                    msg: "expected src<TAB>dst<TAB>weight".into(),
                });
            }
            if fields[1].is_empty() {
                g.nodes.insert(fields[0].to_string());
                continue;
            }
            let w: u64 = fields[2].parse().map_err(|_| Error::Parse {
                file: path.display().to_string(),
                line: no + 1,
                msg: format!("bad weight {:?}", fields[2]),
            })?;
            g.add_edge(fields[0], fields[1], w);
        }
        Ok(g)
    }
}

/// Strip the dataset namespace and scene qualifiers, then canonicalize word
/// form: lowercase, underscores to spaces, collapsed whitespace, tokens
/// sorted so different word orders merge.
pub fn normalize_class_name(name: &str) -> String {
    let without_namespace = match name.split_once(':') {
        Some((_, rest)) => rest,
        None => name,
    };
    let lower = without_namespace.trim().to_lowercase();
    let segments: Vec<&str> = lower.split('/').filter(|s| !s.is_empty()).collect();
    let head = segments
        .iter()
        .find(|s| s.chars().count() > 1)
        .or_else(|| segments.first())
        .copied()
        .unwrap_or("");
    let spaced = head.replace('_', " ");
    let mut tokens: Vec<&str> = spaced.split_whitespace().collect();
    tokens.sort_unstable();
    tokens.join(" ")
}

/// Pruning stages, applied in field order.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PruneConfig {
    pub drop_self_loops: bool,
    pub drop_intra_dataset: bool,
    pub drop_same_name: bool,
    /// Edges below this weight are dropped; 1 keeps everything.
    pub min_weight: u64,
    pub drop_isolated: bool,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            drop_self_loops: true,
            drop_intra_dataset: true,
            drop_same_name: true,
            min_weight: 3,
            drop_isolated: true,
        }
    }
}

/// Node/edge counts after one pruning stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: String,
    pub nodes: usize,
    pub edges: usize,
}

pub fn write_stage_log(log: &[StageLog], path: &Path) -> Result<()> {
    let json = serde_json::to_vec_pretty(log).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    atomic_write(path, &json)
}

fn namespace(name: &str) -> Option<&str> {
    name.split_once(':').map(|(ns, _)| ns)
}

/// Apply the staged pruning pipeline, returning the pruned graph and a
/// per-stage count log (first entry = input graph).
pub fn prune_graph(g: &PredictionGraph, cfg: &PruneConfig) -> (PredictionGraph, Vec<StageLog>) {
    let mut current = g.clone();
    let mut log = vec![StageLog {
        stage: "input".into(),
        nodes: current.node_count(),
        edges: current.edge_count(),
    }];
    let record = |stage: &str, g: &PredictionGraph, log: &mut Vec<StageLog>| {
        log.push(StageLog {
            stage: stage.into(),
            nodes: g.node_count(),
            edges: g.edge_count(),
        });
    };

    if cfg.drop_self_loops {
        current.edges.retain(|(s, d), _| s != d);
    }
    record("self_loops", &current, &mut log);

    if cfg.drop_intra_dataset {
        current.edges.retain(|(s, d), _| {
            match (namespace(s), namespace(d)) {
                (Some(a), Some(b)) => a != b,
                _ => true,
            }
        });
    }
    record("intra_dataset", &current, &mut log);

    if cfg.drop_same_name {
        current
            .edges
            .retain(|(s, d), _| normalize_class_name(s) != normalize_class_name(d));
    }
    record("same_name", &current, &mut log);

    current.edges.retain(|_, w| *w >= cfg.min_weight);
    record("min_weight", &current, &mut log);

    if cfg.drop_isolated {
        let mut connected = BTreeSet::new();
        for (s, d) in current.edges.keys() {
            connected.insert(s.clone());
            connected.insert(d.clone());
        }
        current.nodes = connected;
    }
    record("isolated", &current, &mut log);

    (current, log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(raw: &[(&str, &str)]) -> Vec<(String, String)> {
        raw.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn build_counts_occurrences() {
        let g = PredictionGraph::build(&pairs(&[("a", "b"), ("a", "b"), ("a", "a")]));
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight("a", "b"), Some(2));
        assert_eq!(g.weight("a", "a"), Some(1));
        assert_eq!(g.total_weight(), 3);
    }

    #[test]
    fn empty_input_empty_graph() {
        let g = PredictionGraph::build(&[]);
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn weights_sum_to_input_pairs() {
        let input = pairs(&[
            ("p:x", "p:y"),
            ("p:x", "q:y"),
            ("q:y", "p:x"),
            ("p:x", "p:y"),
            ("r:z", "r:z"),
            ("p:x", "q:y"),
            ("a:1", "b:2"),
            ("a:1", "b:2"),
            ("a:1", "b:3"),
            ("b:2", "a:1"),
        ]);
        let g = PredictionGraph::build(&input);
        assert_eq!(g.total_weight(), input.len() as u64);
        assert_eq!(g.weight("p:x", "q:y"), Some(2));
        assert_eq!(g.weight("a:1", "b:2"), Some(2));
    }

    #[test]
    fn normalization_merges_paper_examples() {
        assert_eq!(
            normalize_class_name("shoe_shop"),
            normalize_class_name("shoe shop")
        );
        assert_eq!(
            normalize_class_name("home_theater"),
            normalize_class_name("home theater")
        );
        assert_eq!(
            normalize_class_name("Theater Home"),
            normalize_class_name("home theater")
        );
        assert_eq!(
            normalize_class_name("sun:/f/fountain"),
            normalize_class_name("in:fountain")
        );
        assert_eq!(
            normalize_class_name("places:/f/fountain"),
            normalize_class_name("fountain")
        );
        assert_eq!(normalize_class_name("places:kennel/outdoor"), "kennel");
        assert_ne!(
            normalize_class_name("cubicle/office"),
            normalize_class_name("carrousel")
        );
    }

    #[test]
    fn prune_stages_and_survivors() {
        // One edge per prune category plus one survivor.
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "p:a", 9); // self-loop
        g.add_edge("p:b", "p:c", 9); // intra-dataset
        g.add_edge("p:shoe_shop", "q:shoe shop", 9); // same canonical name
        g.add_edge("p:d", "q:e", 1); // below min weight
        g.add_edge("p:f", "q:g", 5); // survivor
        let (pruned, log) = prune_graph(&g, &PruneConfig::default());

        assert_eq!(pruned.edge_count(), 1);
        assert_eq!(pruned.weight("p:f", "q:g"), Some(5));
        assert_eq!(pruned.node_count(), 2);

        // Counts are monotone non-increasing stage to stage.
        for w in log.windows(2) {
            assert!(w[1].nodes <= w[0].nodes);
            assert!(w[1].edges <= w[0].edges);
        }
        assert_eq!(log.first().unwrap().edges, 5);
        assert_eq!(log.last().unwrap().edges, 1);
    }

    #[test]
    fn prune_self_loop_only_graph_to_empty() {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "p:a", 10);
        let (pruned, _) = prune_graph(&g, &PruneConfig::default());
        assert_eq!(pruned.node_count(), 0);
        assert_eq!(pruned.edge_count(), 0);
    }

    #[test]
    fn prune_is_idempotent() {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "q:b", 4);
        g.add_edge("p:a", "p:a", 2);
        g.add_edge("q:b", "p:c", 1);
        g.add_edge("r:x", "s:y", 7);
        let cfg = PruneConfig::default();
        let (once, _) = prune_graph(&g, &cfg);
        let (twice, _) = prune_graph(&once, &cfg);
        assert_eq!(once, twice);
    }

    #[test]
    fn isolated_nodes_retained_until_final_stage() {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "p:a", 5);
        g.add_edge("p:b", "q:c", 5);
        let cfg = PruneConfig {
            drop_isolated: false,
            ..PruneConfig::default()
        };
        let (pruned, _) = prune_graph(&g, &cfg);
        // p:a lost its only edge but stays because isolated-drop is off.
        assert_eq!(pruned.node_count(), 3);
        assert_eq!(pruned.edge_count(), 1);
    }

    #[test]
    fn tsv_round_trip_including_isolated() {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "q:b", 3);
        g.nodes.insert("r:lonely".to_string());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.tsv");
        g.write_tsv(&path).unwrap();
        let back = PredictionGraph::read_tsv(&path).unwrap();
        assert_eq!(g, back);
    }
}
