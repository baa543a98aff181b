//! Conflict graphs over group sinks and their ball-growing decomposition.

use std::collections::VecDeque;

use serde::Serialize;

use crate::instance::PredMap;

/// Undirected graph over the sinks of a job group. Two sinks are adjacent
/// when they share a predecessor inside the group.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConflictGraph {
    /// Job index of every vertex, in the caller's order.
    pub jobs: Vec<usize>,
    /// Sorted neighbour lists in vertex space.
    pub adj: Vec<Vec<usize>>,
}

impl ConflictGraph {
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn from_edges(jobs: Vec<usize>, edges: &[(usize, usize)]) -> ConflictGraph {
        let mut adj = vec![Vec::new(); jobs.len()];
        for &(a, b) in edges {
            if a != b {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        ConflictGraph { jobs, adj }
    }
}

/// Builds the conflict graph of `group`. Sinks keep the order they have in
/// `group`, so callers control which vertex ball-growing starts from.
pub fn conflict_graph(preds: &PredMap, group: &[usize]) -> ConflictGraph {
    let sinks: Vec<usize> = group
        .iter()
        .copied()
        .filter(|&v| !group.iter().any(|&w| preds.precedes(v, w)))
        .collect();
    let mut edges = Vec::new();
    for (a, &u) in sinks.iter().enumerate() {
        for (b, &v) in sinks.iter().enumerate().skip(a + 1) {
            if group.iter().any(|&p| preds.precedes(p, u) && preds.precedes(p, v)) {
                edges.push((a, b));
            }
        }
    }
    ConflictGraph::from_edges(sinks, &edges)
}

/// One region of the decomposition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ball {
    /// Vertex the ball was grown from.
    pub center: usize,
    pub radius: usize,
    /// Vertices within `radius` of the center, ascending.
    pub members: Vec<usize>,
}

/// Repeatedly grows a ball from the lowest remaining vertex until its next
/// layer no longer doubles it, keeps the ball and discards the ball one layer
/// wider.
pub fn ball_grow_decomposition(h: &ConflictGraph) -> Vec<Ball> {
    let n = h.len();
    let mut alive = vec![true; n];
    let mut out = Vec::new();
    let mut dist = vec![usize::MAX; n];
    while let Some(center) = (0..n).find(|&v| alive[v]) {
        // BFS layers inside the remaining graph.
        let mut layers: Vec<Vec<usize>> = vec![vec![center]];
        let mut touched = vec![center];
        dist[center] = 0;
        let mut queue = VecDeque::from([center]);
        while let Some(u) = queue.pop_front() {
            for &w in &h.adj[u] {
                if alive[w] && dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    if layers.len() <= dist[w] {
                        layers.push(Vec::new());
                    }
                    layers[dist[w]].push(w);
                    touched.push(w);
                    queue.push_back(w);
                }
            }
        }
        let mut inside = 1;
        let mut radius = 0;
        loop {
            let next = layers.get(radius + 1).map_or(0, Vec::len);
            if inside + next <= 2 * inside {
                break;
            }
            inside += next;
            radius += 1;
        }
        let mut members: Vec<usize> = layers[..=radius].concat();
        members.sort_unstable();
        for layer in layers.iter().take(radius + 2) {
            for &v in layer {
                alive[v] = false;
            }
        }
        for v in touched {
            dist[v] = usize::MAX;
        }
        out.push(Ball {
            center,
            radius,
            members,
        });
    }
    out
}
