//! Exact best-path machinery shared by the physical and virtual routers.
//!
//! Paths are compared by a composite key; the scalar weight component is
//! always accumulated in path order so that a route's key is identical no
//! matter which search produced it.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::scalar::Scalar;

/// A directed edge of a search graph. Edge ids are dense and their numeric
/// order is the tie-breaking order.
#[derive(Debug, Clone)]
pub(crate) struct SearchEdge<F> {
    pub from: usize,
    pub to: usize,
    pub weight: F,
}

/// Adjacency-indexed view of a directed graph with weighted edges.
#[derive(Debug, Clone)]
pub(crate) struct SearchGraph<F> {
    pub num_nodes: usize,
    pub edges: Vec<SearchEdge<F>>,
    /// Outgoing edge ids per node, ascending.
    pub adj: Vec<Vec<usize>>,
}

impl<F: Scalar> SearchGraph<F> {
    pub fn new(num_nodes: usize, edges: Vec<SearchEdge<F>>) -> Self {
        let mut adj = vec![Vec::new(); num_nodes];
        for (id, e) in edges.iter().enumerate() {
            adj[e.from].push(id);
        }
        Self {
            num_nodes,
            edges,
            adj,
        }
    }

    /// Recomputes the key of an edge sequence, accumulating weight in order.
    pub fn key_of(&self, seq: &[usize]) -> PathKey<F> {
        let mut weight = F::zero();
        for id in seq {
            weight = weight + self.edges[*id].weight;
        }
        PathKey {
            hops: seq.len(),
            weight,
            seq: seq.to_vec(),
        }
    }
}

/// Composite route key: hop count, accumulated weight, and the edge-id
/// sequence itself as the final lexicographic tie-break.
#[derive(Debug, Clone)]
pub(crate) struct PathKey<F> {
    pub hops: usize,
    pub weight: F,
    pub seq: Vec<usize>,
}

/// Which component of the key dominates the ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum KeyOrder {
    /// (hops, weight, seq) — physical k-shortest paths and CSPF.
    HopsFirst,
    /// (weight, hops, seq) — marginal-length routing.
    WeightFirst,
}

impl KeyOrder {
    pub fn cmp<F: Scalar>(self, a: &PathKey<F>, b: &PathKey<F>) -> Ordering {
        let by_weight = || {
            a.weight
                .partial_cmp(&b.weight)
                .expect("route weights are never NaN")
        };
        let primary = match self {
            KeyOrder::HopsFirst => a.hops.cmp(&b.hops).then_with(by_weight),
            KeyOrder::WeightFirst => by_weight().then_with(|| a.hops.cmp(&b.hops)),
        };
        primary.then_with(|| a.seq.cmp(&b.seq))
    }
}

/// Dijkstra over walks with the full composite key. Edge weights are
/// non-negative and every edge costs one hop, so optimal walks are simple
/// and the result is the exact minimum simple path under `order`.
pub(crate) fn best_path<F: Scalar>(
    graph: &SearchGraph<F>,
    src: usize,
    dst: usize,
    banned_nodes: &[bool],
    banned_edges: &BTreeSet<usize>,
    order: KeyOrder,
) -> Option<PathKey<F>> {
    debug_assert_ne!(src, dst);
    if banned_nodes[src] || banned_nodes[dst] {
        return None;
    }

    let mut best: Vec<Option<PathKey<F>>> = vec![None; graph.num_nodes];
    let mut settled = vec![false; graph.num_nodes];
    best[src] = Some(PathKey {
        hops: 0,
        weight: F::zero(),
        seq: Vec::new(),
    });

    loop {
        let mut current: Option<usize> = None;
        for v in 0..graph.num_nodes {
            if settled[v] || best[v].is_none() {
                continue;
            }
            match current {
                None => current = Some(v),
                Some(u) => {
                    if order.cmp(best[v].as_ref().unwrap(), best[u].as_ref().unwrap())
                        == Ordering::Less
                    {
                        current = Some(v);
                    }
                }
            }
        }
        let u = current?;
        if u == dst {
            return best[dst].clone();
        }
        settled[u] = true;

        for &edge_id in &graph.adj[u] {
            if banned_edges.contains(&edge_id) {
                continue;
            }
            let edge = &graph.edges[edge_id];
            if banned_nodes[edge.to] || settled[edge.to] {
                continue;
            }
            let here = best[u].as_ref().unwrap();
            let candidate = PathKey {
                hops: here.hops + 1,
                weight: here.weight + edge.weight,
                seq: {
                    let mut s = here.seq.clone();
                    s.push(edge_id);
                    s
                },
            };
            let better = match &best[edge.to] {
                None => true,
                Some(existing) => order.cmp(&candidate, existing) == Ordering::Less,
            };
            if better {
                best[edge.to] = Some(candidate);
            }
        }
    }
}

/// Yen's loop-free k-shortest-paths over the composite key. Output is sorted
/// ascending and complete: every path ordered before the last returned one is
/// included.
pub(crate) fn k_best_paths<F: Scalar>(
    graph: &SearchGraph<F>,
    src: usize,
    dst: usize,
    k: usize,
    order: KeyOrder,
) -> Vec<PathKey<F>> {
    assert!(k >= 1, "k must be at least 1");
    let no_banned_nodes = vec![false; graph.num_nodes];
    let Some(first) = best_path(graph, src, dst, &no_banned_nodes, &BTreeSet::new(), order) else {
        return Vec::new();
    };

    let mut accepted = vec![first];
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    seen.insert(accepted[0].seq.clone());
    let mut pool: Vec<PathKey<F>> = Vec::new();

    for ki in 1..k {
        let previous = accepted[ki - 1].clone();
        // Node sequence along the previous path; position i is the tail of
        // the i-edge prefix.
        let mut nodes = vec![src];
        for id in &previous.seq {
            nodes.push(graph.edges[*id].to);
        }

        for spur_idx in 0..previous.seq.len() {
            let spur_node = nodes[spur_idx];
            let root = &previous.seq[..spur_idx];

            let mut banned_edges = BTreeSet::new();
            for path in &accepted {
                if path.seq.len() > spur_idx && path.seq[..spur_idx] == *root {
                    banned_edges.insert(path.seq[spur_idx]);
                }
            }
            let mut banned_nodes = vec![false; graph.num_nodes];
            for &n in &nodes[..spur_idx] {
                banned_nodes[n] = true;
            }

            if let Some(spur) = best_path(graph, spur_node, dst, &banned_nodes, &banned_edges, order)
            {
                let mut seq = root.to_vec();
                seq.extend_from_slice(&spur.seq);
                if seen.insert(seq.clone()) {
                    pool.push(graph.key_of(&seq));
                }
            }
        }

        let Some(best_idx) = pool
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| order.cmp(a, b))
            .map(|(i, _)| i)
        else {
            break;
        };
        accepted.push(pool.swap_remove(best_idx));
    }

    debug_assert!(accepted
        .windows(2)
        .all(|w| order.cmp(&w[0], &w[1]) == Ordering::Less));
    accepted
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, f64)]) -> SearchGraph<f64> {
        SearchGraph::new(
            n,
            edges
                .iter()
                .map(|&(from, to, weight)| SearchEdge { from, to, weight })
                .collect(),
        )
    }

    #[test]
    fn triangle_orders_by_hops_then_weight() {
        // 0 -> 1 -> 2 plus direct 0 -> 2 (long)
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 100.0)]);
        let paths = k_best_paths(&g, 0, 2, 3, KeyOrder::HopsFirst);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].seq, vec![2]); // 1 hop beats 2 hops regardless of km
        assert_eq!(paths[1].seq, vec![0, 1]);
    }

    #[test]
    fn weight_first_prefers_cheap_detour() {
        let g = graph(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 100.0)]);
        let paths = k_best_paths(&g, 0, 2, 2, KeyOrder::WeightFirst);
        assert_eq!(paths[0].seq, vec![0, 1]);
        assert_eq!(paths[1].seq, vec![2]);
    }

    #[test]
    fn lexicographic_tie_break_on_equal_keys() {
        // two parallel identical edges 0 -> 1: ids 0 and 1
        let g = graph(2, &[(0, 1, 5.0), (0, 1, 5.0)]);
        let paths = k_best_paths(&g, 0, 1, 2, KeyOrder::HopsFirst);
        assert_eq!(paths[0].seq, vec![0]);
        assert_eq!(paths[1].seq, vec![1]);
    }

    #[test]
    fn disconnected_returns_empty() {
        let g = graph(3, &[(0, 1, 1.0)]);
        assert!(k_best_paths(&g, 0, 2, 4, KeyOrder::HopsFirst).is_empty());
    }

    #[test]
    fn paths_are_simple() {
        // diamond with a cycle back edge; simple paths only
        let g = graph(
            4,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (2, 1, 0.1),
                (1, 3, 1.0),
                (2, 3, 1.0),
                (0, 2, 3.0),
            ],
        );
        let paths = k_best_paths(&g, 0, 3, 10, KeyOrder::HopsFirst);
        for p in &paths {
            let mut visited = vec![0usize];
            for id in &p.seq {
                visited.push(g.edges[*id].to);
            }
            let mut dedup = visited.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(dedup.len(), visited.len(), "path revisits a node: {p:?}");
        }
    }
}
