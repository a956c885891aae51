//! ForceAtlas2 layout: degree-weighted repulsion, edge-weight-proportional
//! attraction, central gravity, and per-node adaptive speed damped by swing.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derive_rng;
use crate::store::atomic_write;

use super::PredictionGraph;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LayoutParams {
    /// Central gravity strength.
    pub gravity: f64,
    /// Repulsion scaling constant.
    pub scaling: f64,
    /// Logarithmic attraction.
    pub lin_log: bool,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            gravity: 1.0,
            scaling: 2.0,
            lin_log: false,
        }
    }
}

/// Final node positions with convergence diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub positions: BTreeMap<String, [f64; 2]>,
    pub iterations: usize,
    /// Mass-weighted total swing of the last iteration.
    pub total_swing: f64,
}

impl Layout {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(&self.positions).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        atomic_write(path, &json)
    }
}

const SPEED_TOLERANCE: f64 = 0.1;
const SPEED_KAPPA: f64 = 0.1;
const MAX_DISPLACEMENT: f64 = 10.0;
/// Global speed may grow by at most 50% per iteration.
const MAX_SPEED_GROWTH: f64 = 1.5;

/// Run `iterations` ForceAtlas2 steps from seeded random initial positions;
/// `iterations = 0` returns the initial placement. Coincident nodes are
/// separated by seeded jitter instead of erroring.
pub fn layout_forceatlas2(
    g: &PredictionGraph,
    iterations: usize,
    seed: u64,
    params: &LayoutParams,
) -> Layout {
    let nodes: Vec<String> = g.nodes().map(str::to_string).collect();
    let n = nodes.len();
    let index: BTreeMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, name)| (name.as_str(), i))
        .collect();

    // Mass = degree + 1, with degree counting incident edges undirected.
    let mut mass = vec![1.0f64; n];
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(g.edge_count());
    for (src, dst, w) in g.edges() {
        let s = index[src];
        let d = index[dst];
        mass[s] += 1.0;
        if d != s {
            mass[d] += 1.0;
        }
        edges.push((s, d, w as f64));
    }

    let mut rng = derive_rng(seed, "layout/init");
    let mut pos: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            [
                rng.random::<f64>() * 2.0 - 1.0,
                rng.random::<f64>() * 2.0 - 1.0,
            ]
        })
        .collect();

    let mut jitter_rng = derive_rng(seed, "layout/jitter");
    let mut prev_force = vec![[0.0f64; 2]; n];
    let mut prev_global_speed = f64::INFINITY;
    let mut total_swing = 0.0;

    for _ in 0..iterations {
        let mut force = vec![[0.0f64; 2]; n];

        // Pairwise repulsion k m_i m_j / d, equal and opposite.
        for i in 0..n {
            for j in (i + 1)..n {
                let mut delta = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]];
                let mut d2 = delta[0] * delta[0] + delta[1] * delta[1];
                if d2 < 1e-18 {
                    // Coincident nodes: nudge one apart deterministically.
                    pos[j][0] += jitter_rng.random::<f64>() * 1e-3 - 5e-4;
                    pos[j][1] += jitter_rng.random::<f64>() * 1e-3 - 5e-4;
                    delta = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]];
                    d2 = delta[0] * delta[0] + delta[1] * delta[1];
                    if d2 < 1e-18 {
                        continue;
                    }
                }
                // Magnitude k m_i m_j / d along the unit vector delta / d.
                let f = params.scaling * mass[i] * mass[j] / d2;
                force[i][0] += f * delta[0];
                force[i][1] += f * delta[1];
                force[j][0] -= f * delta[0];
                force[j][1] -= f * delta[1];
            }
        }

        // Attraction along edges, proportional to edge weight; linlog mode
        // compresses with ln(1 + d).
        for &(s, d, w) in &edges {
            if s == d {
                continue;
            }
            let delta = [pos[s][0] - pos[d][0], pos[s][1] - pos[d][1]];
            let dist = (delta[0] * delta[0] + delta[1] * delta[1]).sqrt();
            if dist <= 0.0 {
                continue;
            }
            let factor = if params.lin_log {
                w * (1.0 + dist).ln() / dist
            } else {
                w
            };
            force[s][0] -= factor * delta[0];
            force[s][1] -= factor * delta[1];
            force[d][0] += factor * delta[0];
            force[d][1] += factor * delta[1];
        }

        // Central gravity pulling each node toward the origin.
        if params.gravity != 0.0 {
            for i in 0..n {
                let d = (pos[i][0] * pos[i][0] + pos[i][1] * pos[i][1]).sqrt();
                if d > 0.0 {
                    let f = params.gravity * mass[i] / d;
                    force[i][0] -= f * pos[i][0];
                    force[i][1] -= f * pos[i][1];
                }
            }
        }

        // Adaptive speed: global speed from the swing/traction balance,
        // per-node damping by the node's own swing.
        let mut global_swing = 0.0;
        let mut global_traction = 0.0;
        let mut swing = vec![0.0f64; n];
        for i in 0..n {
            let dx = force[i][0] - prev_force[i][0];
            let dy = force[i][1] - prev_force[i][1];
            swing[i] = (dx * dx + dy * dy).sqrt();
            let tx = (force[i][0] + prev_force[i][0]) / 2.0;
            let ty = (force[i][1] + prev_force[i][1]) / 2.0;
            global_swing += mass[i] * swing[i];
            global_traction += mass[i] * (tx * tx + ty * ty).sqrt();
        }
        let mut global_speed = if global_swing > 0.0 {
            SPEED_TOLERANCE * global_traction / global_swing
        } else {
            SPEED_TOLERANCE
        };
        global_speed = global_speed.min(MAX_SPEED_GROWTH * prev_global_speed);
        prev_global_speed = global_speed;

        for i in 0..n {
            let f_norm = (force[i][0] * force[i][0] + force[i][1] * force[i][1]).sqrt();
            if f_norm == 0.0 {
                continue;
            }
            let mut speed = SPEED_KAPPA * global_speed / (1.0 + global_speed * swing[i].sqrt());
            speed = speed.min(MAX_DISPLACEMENT / f_norm);
            pos[i][0] += speed * force[i][0];
            pos[i][1] += speed * force[i][1];
        }

        prev_force = force;
        total_swing = global_swing;
    }

    Layout {
        positions: nodes
            .into_iter()
            .zip(pos)
            .map(|(name, p)| (name, p))
            .collect(),
        iterations,
        total_swing,
    }
}

/// One iteration's net force over all nodes, for conservation checks.
pub fn net_force(g: &PredictionGraph, positions: &BTreeMap<String, [f64; 2]>, params: &LayoutParams) -> [f64; 2] {
    let nodes: Vec<&str> = g.nodes().collect();
    let n = nodes.len();
    let pos: Vec<[f64; 2]> = nodes.iter().map(|name| positions[*name]).collect();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut mass = vec![1.0f64; n];
    for (src, dst, _) in g.edges() {
        mass[index[src]] += 1.0;
        if src != dst {
            mass[index[dst]] += 1.0;
        }
    }

    let mut force = vec![[0.0f64; 2]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let delta = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]];
            let d2 = delta[0] * delta[0] + delta[1] * delta[1];
            if d2 < 1e-18 {
                continue;
            }
            let f = params.scaling * mass[i] * mass[j] / d2;
            force[i][0] += f * delta[0];
            force[i][1] += f * delta[1];
            force[j][0] -= f * delta[0];
            force[j][1] -= f * delta[1];
        }
    }
    for (src, dst, w) in g.edges() {
        let (s, d) = (index[src], index[dst]);
        if s == d {
            continue;
        }
        let delta = [pos[s][0] - pos[d][0], pos[s][1] - pos[d][1]];
        let factor = if params.lin_log {
            let dist = (delta[0] * delta[0] + delta[1] * delta[1]).sqrt();
            if dist <= 0.0 {
                continue;
            }
            w as f64 * (1.0 + dist).ln() / dist
        } else {
            w as f64
        };
        force[s][0] -= factor * delta[0];
        force[s][1] -= factor * delta[1];
        force[d][0] += factor * delta[0];
        force[d][1] += factor * delta[1];
    }
    if params.gravity != 0.0 {
        for i in 0..n {
            let d = (pos[i][0] * pos[i][0] + pos[i][1] * pos[i][1]).sqrt();
            if d > 0.0 {
                let f = params.gravity * mass[i] / d;
                force[i][0] -= f * pos[i][0];
                force[i][1] -= f * pos[i][1];
            }
        }
    }
    let mut net = [0.0, 0.0];
    for f in force {
        net[0] += f[0];
        net[1] += f[1];
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_graph() -> PredictionGraph {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "q:b", 1);
        g
    }

    #[test]
    fn zero_iterations_returns_seeded_initial_positions() {
        let g = two_node_graph();
        let params = LayoutParams::default();
        let a = layout_forceatlas2(&g, 0, 42, &params);
        let b = layout_forceatlas2(&g, 0, 42, &params);
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.iterations, 0);

        let c = layout_forceatlas2(&g, 0, 43, &params);
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn layout_is_seed_deterministic() {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "q:b", 3);
        g.add_edge("q:b", "r:c", 1);
        g.add_edge("p:a", "r:c", 2);
        g.add_edge("s:d", "p:a", 1);
        let params = LayoutParams::default();
        let a = layout_forceatlas2(&g, 60, 7, &params);
        let b = layout_forceatlas2(&g, 60, 7, &params);
        assert_eq!(a, b);
    }

    #[test]
    fn two_nodes_settle_to_a_stable_distance() {
        let g = two_node_graph();
        let params = LayoutParams {
            gravity: 0.0,
            scaling: 2.0,
            lin_log: false,
        };
        // Iteration count measured on this fixture (settles by ~100), then
        // frozen with margin.
        let before = layout_forceatlas2(&g, 200, 3, &params);
        let after = layout_forceatlas2(&g, 201, 3, &params);
        let delta: f64 = before
            .positions
            .iter()
            .map(|(k, p)| {
                let q = after.positions[k];
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .sum();
        assert!(delta < 1e-3, "still moving by {delta}");

        // Equilibrium of w*d = k*m1*m2/d with m = 2: d = sqrt(4k).
        let p: Vec<&[f64; 2]> = before.positions.values().collect();
        let dist = ((p[0][0] - p[1][0]).powi(2) + (p[0][1] - p[1][1]).powi(2)).sqrt();
        let expected = (4.0 * params.scaling).sqrt();
        assert!(
            (dist - expected).abs() < 0.05,
            "distance {dist} vs equilibrium {expected}"
        );
    }

    #[test]
    fn forces_conserve_momentum_without_gravity() {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "q:b", 3);
        g.add_edge("q:b", "r:c", 2);
        g.add_edge("r:c", "p:a", 1);
        g.add_edge("s:d", "q:b", 4);
        let params = LayoutParams {
            gravity: 0.0,
            scaling: 2.0,
            lin_log: false,
        };
        for seed in [1, 2, 3] {
            let layout = layout_forceatlas2(&g, 5, seed, &params);
            let net = net_force(&g, &layout.positions, &params);
            assert!(net[0].abs() < 1e-9, "net x force {}", net[0]);
            assert!(net[1].abs() < 1e-9, "net y force {}", net[1]);
        }
    }

    #[test]
    fn coincident_nodes_jitter_instead_of_failing() {
        let mut g = PredictionGraph::new();
        g.add_edge("p:a", "q:b", 1);
        g.add_edge("q:b", "r:c", 1);
        for seed in 0..20 {
            let layout = layout_forceatlas2(&g, 30, seed, &LayoutParams::default());
            for p in layout.positions.values() {
                assert!(p[0].is_finite() && p[1].is_finite());
            }
        }
    }

    #[test]
    fn layout_json_is_sorted_by_node() {
        let mut g = PredictionGraph::new();
        g.add_edge("b:x", "a:y", 1);
        let layout = layout_forceatlas2(&g, 2, 1, &LayoutParams::default());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layout.json");
        layout.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let a = text.find("a:y").unwrap();
        let b = text.find("b:x").unwrap();
        assert!(a < b);
    }
}

