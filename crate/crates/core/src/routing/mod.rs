//! Graph algorithms over both layers: k-shortest physical paths, first-fit
//! wavelength assignment, and capacitated shortest-path routing over the
//! virtual topology.

pub(crate) mod search;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::model::{LightpathId, LinkId, NodeId, PhysicalTopology, VirtualTopology};
use crate::scalar::Scalar;
use search::{best_path, k_best_paths, KeyOrder, SearchEdge, SearchGraph};

/// A loop-free walk over fiber links.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalRoute<F> {
    pub links: Vec<LinkId>,
    pub hop_count: usize,
    /// Sum of link lengths, accumulated in route order.
    pub length_km: F,
}

/// A contiguous chain of lightpaths in the virtual graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualRoute<F> {
    pub lightpath_ids: Vec<LightpathId>,
    pub virtual_hops: usize,
    /// Sum of per-lightpath propagation delays, seconds.
    pub delay_s: F,
}

fn physical_graph<F: Scalar>(topo: &PhysicalTopology<F>) -> SearchGraph<F> {
    SearchGraph::new(
        topo.num_nodes(),
        topo.links()
            .iter()
            .map(|l| SearchEdge {
                from: l.src.0,
                to: l.dst.0,
                weight: l.length_km,
            })
            .collect(),
    )
}

/// Up to `k` loop-free physical routes from `s` to `d`, ordered by
/// (hop count, length, lexicographic link-id sequence). The result contains
/// every route ordered before the last returned one. No path yields an empty
/// list.
pub fn k_shortest_paths<F: Scalar>(
    topo: &PhysicalTopology<F>,
    s: NodeId,
    d: NodeId,
    k: usize,
) -> Vec<PhysicalRoute<F>> {
    assert_ne!(s, d, "source and destination must differ");
    assert!(k >= 1, "k must be at least 1");
    let graph = physical_graph(topo);
    k_best_paths(&graph, s.0, d.0, k, KeyOrder::HopsFirst)
        .into_iter()
        .map(|key| PhysicalRoute {
            links: key.seq.iter().map(|id| LinkId(*id)).collect(),
            hop_count: key.hops,
            length_km: key.weight,
        })
        .collect()
}

/// Smallest wavelength index free on every fiber of `route`, or `None`.
///
/// A wavelength is eligible only if it exists on every traversed fiber
/// (continuity end to end, no conversion).
pub fn first_fit_wavelength<F: Scalar>(
    vt: &VirtualTopology<F>,
    topo: &PhysicalTopology<F>,
    route: &[LinkId],
) -> Option<usize> {
    debug_assert!(route
        .windows(2)
        .all(|w| topo.link(w[0]).dst == topo.link(w[1]).src));
    let limit = route
        .iter()
        .map(|id| topo.link(*id).num_wavelengths)
        .min()?;
    (0..limit).find(|w| route.iter().all(|link| vt.is_wavelength_free(*link, *w)))
}

/// Builds the virtual-layer search graph restricted to lightpaths with
/// residual capacity at least `rate_gbps`, with a dense edge-id remap that
/// preserves lightpath-id order. Edge weights are propagation delays unless
/// `weight_of` overrides them.
fn virtual_graph<F: Scalar>(
    vt: &VirtualTopology<F>,
    num_nodes: usize,
    mut include: impl FnMut(&crate::model::Lightpath<F>) -> Option<F>,
) -> (SearchGraph<F>, Vec<LightpathId>) {
    let mut ids = Vec::new();
    let mut edges = Vec::new();
    for lp in vt.lightpaths() {
        if let Some(weight) = include(lp) {
            ids.push(lp.id);
            edges.push(SearchEdge {
                from: lp.src.0,
                to: lp.dst.0,
                weight,
            });
        }
    }
    (SearchGraph::new(num_nodes, edges), ids)
}

/// Capacitated shortest-path search over the virtual topology: among paths
/// whose every lightpath has residual capacity >= `rate_gbps`, minimizes
/// virtual hops, then total delay, then the lexicographic lightpath-id
/// sequence. `None` when no feasible path exists.
pub fn cspf_virtual_route<F: Scalar>(
    vt: &VirtualTopology<F>,
    num_nodes: usize,
    s: NodeId,
    d: NodeId,
    rate_gbps: F,
) -> Option<VirtualRoute<F>> {
    assert!(rate_gbps > F::zero(), "rate must be positive");
    if s == d {
        return None;
    }
    let (graph, ids) = virtual_graph(vt, num_nodes, |lp| {
        (lp.residual_gbps() >= rate_gbps).then_some(lp.delay_s)
    });
    let banned = vec![false; num_nodes];
    let key = best_path(&graph, s.0, d.0, &banned, &BTreeSet::new(), KeyOrder::HopsFirst)?;
    Some(VirtualRoute {
        lightpath_ids: key.seq.iter().map(|i| ids[*i]).collect(),
        virtual_hops: key.hops,
        delay_s: key.weight,
    })
}

/// Cheapest virtual path under caller-supplied per-lightpath weights,
/// restricted to lightpaths where `weigh` returns a weight. Ordering is
/// (total weight, hops, lexicographic lightpath-id sequence).
pub fn weighted_virtual_route<F: Scalar>(
    vt: &VirtualTopology<F>,
    num_nodes: usize,
    s: NodeId,
    d: NodeId,
    weigh: impl FnMut(&crate::model::Lightpath<F>) -> Option<F>,
) -> Option<VirtualRoute<F>> {
    if s == d {
        return None;
    }
    let (graph, ids) = virtual_graph(vt, num_nodes, weigh);
    let banned = vec![false; num_nodes];
    let key = best_path(
        &graph,
        s.0,
        d.0,
        &banned,
        &BTreeSet::new(),
        KeyOrder::WeightFirst,
    )?;
    let lightpath_ids: Vec<LightpathId> = key.seq.iter().map(|i| ids[*i]).collect();
    let delay_s = lightpath_ids
        .iter()
        .fold(F::zero(), |acc, id| acc + vt.get(*id).unwrap().delay_s);
    Some(VirtualRoute {
        lightpath_ids,
        virtual_hops: key.hops,
        delay_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_topology, FlowId, LinkEntry, NodeEntry, TopologyDocument};

    pub(crate) fn grid_doc(
        coords: &[(f64, f64)],
        links: &[(usize, usize, usize)],
        tx: usize,
        rx: usize,
    ) -> TopologyDocument<f64> {
        TopologyDocument {
            nodes: coords
                .iter()
                .enumerate()
                .map(|(i, (x, y))| NodeEntry {
                    id: i,
                    name: format!("n{i}"),
                    x_km: *x,
                    y_km: *y,
                    population: 0,
                    node_type: String::new(),
                    timezone_offset_h: 0,
                })
                .collect(),
            links: links
                .iter()
                .enumerate()
                .map(|(i, (src, dst, w))| LinkEntry {
                    id: i,
                    src: *src,
                    dst: *dst,
                    num_wavelengths: *w,
                    length_km: None,
                })
                .collect(),
            max_transmitters: vec![tx; coords.len()],
            max_receivers: vec![rx; coords.len()],
            lightpath_capacity_gbps: Some(10.0),
        }
    }

    #[test]
    fn triangle_two_paths() {
        // A(0) -> B(1), B -> C(2), A -> C; query (A, C, 2)
        let doc = grid_doc(
            &[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0)],
            &[(0, 1, 2), (1, 2, 2), (0, 2, 2)],
            4,
            4,
        );
        let topo = parse_topology(&doc).unwrap();
        let paths = k_shortest_paths(&topo, NodeId(0), NodeId(2), 2);
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].links, vec![LinkId(2)]);
        assert_eq!(paths[0].hop_count, 1);
        assert_eq!(paths[1].links, vec![LinkId(0), LinkId(1)]);
        assert_eq!(paths[1].hop_count, 2);
    }

    #[test]
    fn disconnected_pair_gives_empty() {
        let doc = grid_doc(&[(0.0, 0.0), (1.0, 0.0)], &[], 4, 4);
        let topo = parse_topology(&doc).unwrap();
        assert!(k_shortest_paths(&topo, NodeId(0), NodeId(1), 3).is_empty());
    }

    #[test]
    fn first_fit_on_empty_network_is_zero() {
        let doc = grid_doc(&[(0.0, 0.0), (1.0, 0.0)], &[(0, 1, 4)], 4, 4);
        let topo = parse_topology(&doc).unwrap();
        let vt = VirtualTopology::<f64>::new(2);
        assert_eq!(first_fit_wavelength(&vt, &topo, &[LinkId(0)]), Some(0));
    }

    #[test]
    fn first_fit_skips_busy_wavelength_on_any_link() {
        // 2-link route, W=2 everywhere, wavelength 0 busy on the second link
        let doc = grid_doc(
            &[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
            &[(0, 1, 2), (1, 2, 2)],
            4,
            4,
        );
        let topo = parse_topology(&doc).unwrap();
        let mut vt = VirtualTopology::new(3);
        vt.insert(&topo, NodeId(1), NodeId(2), vec![LinkId(1)], 0);
        let got = first_fit_wavelength(&vt, &topo, &[LinkId(0), LinkId(1)]);
        // exhaustive over indices 0..2: 0 is busy on link 1, 1 is free
        assert_eq!(got, Some(1));
    }

    #[test]
    fn first_fit_exhausted_returns_none() {
        let doc = grid_doc(&[(0.0, 0.0), (1.0, 0.0)], &[(0, 1, 1)], 4, 4);
        let topo = parse_topology(&doc).unwrap();
        let mut vt = VirtualTopology::new(2);
        vt.insert(&topo, NodeId(0), NodeId(1), vec![LinkId(0)], 0);
        assert_eq!(first_fit_wavelength(&vt, &topo, &[LinkId(0)]), None);
    }

    #[test]
    fn cspf_routes_when_residual_allows() {
        let doc = grid_doc(&[(0.0, 0.0), (1.0, 0.0)], &[(0, 1, 4)], 4, 4);
        let topo = parse_topology(&doc).unwrap();
        let mut vt = VirtualTopology::new(2);
        let id = vt.insert(&topo, NodeId(0), NodeId(1), vec![LinkId(0)], 0);
        vt.add_flow(id, FlowId(0), 5.0);

        // residual 5, rate 3: one-hop route
        let route = cspf_virtual_route(&vt, 2, NodeId(0), NodeId(1), 3.0).unwrap();
        assert_eq!(route.lightpath_ids, vec![id]);
        assert_eq!(route.virtual_hops, 1);

        // rate 6 exceeds residual: pruned away
        assert!(cspf_virtual_route(&vt, 2, NodeId(0), NodeId(1), 6.0).is_none());
    }
}
