//! Physical topology: nodes on a Euclidean km plane and directed fiber links.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of a node, dense in `0..N`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub usize);

/// Index of a directed fiber link, dense in `0..L`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct LinkId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::fmt::Display for LinkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// An electronic switching node of the lower layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node<F> {
    pub id: NodeId,
    pub name: String,
    pub x_km: F,
    pub y_km: F,
    pub population: u64,
    pub node_type: String,
    /// Whole hours relative to UTC, in [-12, +14]. Drives the multi-hour
    /// demand profile.
    pub timezone_offset_h: i32,
}

/// A directed fiber between two nodes carrying `num_wavelengths` channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberLink<F> {
    pub id: LinkId,
    pub src: NodeId,
    pub dst: NodeId,
    pub num_wavelengths: usize,
    /// Euclidean distance between the endpoints; derived, never free-standing.
    pub length_km: F,
}

/// The immutable lower layer: nodes, directed fibers and per-node transceiver
/// budgets. Interchange goes through [`TopologyDocument`].
#[derive(Debug, Clone)]
pub struct PhysicalTopology<F> {
    nodes: Vec<Node<F>>,
    links: Vec<FiberLink<F>>,
    max_transmitters: Vec<usize>,
    max_receivers: Vec<usize>,
    lightpath_capacity_gbps: F,
    /// Outgoing link ids per node, ascending.
    out_links: Vec<Vec<LinkId>>,
}

impl<F: Scalar> PhysicalTopology<F> {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn nodes(&self) -> &[Node<F>] {
        &self.nodes
    }

    pub fn links(&self) -> &[FiberLink<F>] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &Node<F> {
        &self.nodes[id.0]
    }

    pub fn link(&self, id: LinkId) -> &FiberLink<F> {
        &self.links[id.0]
    }

    pub fn max_transmitters(&self, n: NodeId) -> usize {
        self.max_transmitters[n.0]
    }

    pub fn max_receivers(&self, n: NodeId) -> usize {
        self.max_receivers[n.0]
    }

    /// Line rate of every lightpath, Gbps.
    pub fn lightpath_capacity_gbps(&self) -> F {
        self.lightpath_capacity_gbps
    }

    /// Override the per-lightpath line rate (run configuration wins over the
    /// topology document).
    pub fn set_lightpath_capacity_gbps(&mut self, capacity: F) -> Result<()> {
        if capacity <= F::zero() {
            return Err(Error::NonPositiveCapacity(capacity.to_f64_lossy()));
        }
        self.lightpath_capacity_gbps = capacity;
        Ok(())
    }

    /// Outgoing links of `n`, ascending by link id.
    pub fn out_links(&self, n: NodeId) -> &[LinkId] {
        &self.out_links[n.0]
    }

    /// Total number of (fiber, wavelength) pairs in the network.
    pub fn total_wavelength_slots(&self) -> usize {
        self.links.iter().map(|l| l.num_wavelengths).sum()
    }

    /// Sum of link lengths along `route`, in route order.
    pub fn route_length_km(&self, route: &[LinkId]) -> F {
        route
            .iter()
            .fold(F::zero(), |acc, id| acc + self.link(*id).length_km)
    }

    /// Checks that `route` is a contiguous physical walk from `src` to `dst`.
    pub fn route_is_contiguous(&self, src: NodeId, dst: NodeId, route: &[LinkId]) -> bool {
        let mut at = src;
        for id in route {
            let Some(link) = self.links.get(id.0) else {
                return false;
            };
            if link.src != at {
                return false;
            }
            at = link.dst;
        }
        at == dst && !route.is_empty()
    }

    /// Serializes back to the interchange document form.
    pub fn to_document(&self) -> TopologyDocument<F> {
        TopologyDocument {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeEntry {
                    id: n.id.0,
                    name: n.name.clone(),
                    x_km: n.x_km,
                    y_km: n.y_km,
                    population: n.population,
                    node_type: n.node_type.clone(),
                    timezone_offset_h: n.timezone_offset_h,
                })
                .collect(),
            links: self
                .links
                .iter()
                .map(|l| LinkEntry {
                    id: l.id.0,
                    src: l.src.0,
                    dst: l.dst.0,
                    num_wavelengths: l.num_wavelengths,
                    length_km: None,
                })
                .collect(),
            max_transmitters: self.max_transmitters.clone(),
            max_receivers: self.max_receivers.clone(),
            lightpath_capacity_gbps: Some(self.lightpath_capacity_gbps),
        }
    }
}

/// On-disk JSON form of a topology.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyDocument<F> {
    pub nodes: Vec<NodeEntry<F>>,
    pub links: Vec<LinkEntry>,
    pub max_transmitters: Vec<usize>,
    pub max_receivers: Vec<usize>,
    #[serde(default)]
    pub lightpath_capacity_gbps: Option<F>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeEntry<F> {
    pub id: usize,
    pub name: String,
    pub x_km: F,
    pub y_km: F,
    #[serde(default)]
    pub population: u64,
    #[serde(rename = "type", default)]
    pub node_type: String,
    #[serde(default)]
    pub timezone_offset_h: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkEntry {
    pub id: usize,
    pub src: usize,
    pub dst: usize,
    pub num_wavelengths: usize,
    /// Optional; when present it must agree with the coordinate distance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
}

const DEFAULT_CAPACITY_GBPS: f64 = 10.0;
const LENGTH_REL_TOL: f64 = 1e-9;

/// Validates a parsed document and builds the topology. Link lengths come
/// from node coordinates; an explicit `length_km` that disagrees beyond 1e-9
/// relative is rejected.
pub fn parse_topology<F: Scalar>(doc: &TopologyDocument<F>) -> Result<PhysicalTopology<F>> {
    let n = doc.nodes.len();

    let mut nodes: Vec<Option<Node<F>>> = vec![None; n];
    for entry in &doc.nodes {
        if entry.id >= n {
            return Err(Error::NonContiguousNodeIds {
                expected: n,
                found: entry.id,
            });
        }
        if nodes[entry.id].is_some() {
            return Err(Error::DuplicateNodeId(entry.id));
        }
        if !entry.x_km.is_finite() || !entry.y_km.is_finite() {
            return Err(Error::NonFiniteCoordinate(entry.id));
        }
        if !(-12..=14).contains(&entry.timezone_offset_h) {
            return Err(Error::TimezoneOutOfRange(entry.id, entry.timezone_offset_h));
        }
        nodes[entry.id] = Some(Node {
            id: NodeId(entry.id),
            name: entry.name.clone(),
            x_km: entry.x_km,
            y_km: entry.y_km,
            population: entry.population,
            node_type: entry.node_type.clone(),
            timezone_offset_h: entry.timezone_offset_h,
        });
    }
    let nodes: Vec<Node<F>> = nodes.into_iter().map(|o| o.unwrap()).collect();

    let mut seen = HashMap::new();
    for node in &nodes {
        let key = (node.x_km.to_f64_lossy().to_bits(), node.y_km.to_f64_lossy().to_bits());
        if let Some(prev) = seen.insert(key, node.id.0) {
            return Err(Error::DuplicateCoordinates(prev, node.id.0));
        }
    }

    let l = doc.links.len();
    let mut links: Vec<Option<FiberLink<F>>> = vec![None; l];
    for entry in &doc.links {
        if entry.id >= l {
            return Err(Error::NonContiguousLinkIds {
                expected: l,
                found: entry.id,
            });
        }
        if links[entry.id].is_some() {
            return Err(Error::DuplicateLinkId(entry.id));
        }
        for endpoint in [entry.src, entry.dst] {
            if endpoint >= n {
                return Err(Error::UnknownEndpoint {
                    link: entry.id,
                    node: endpoint,
                });
            }
        }
        if entry.src == entry.dst {
            return Err(Error::SelfLoop(entry.id));
        }
        if entry.num_wavelengths < 1 {
            return Err(Error::NoWavelengths(entry.id));
        }
        let a = &nodes[entry.src];
        let b = &nodes[entry.dst];
        let dx = a.x_km - b.x_km;
        let dy = a.y_km - b.y_km;
        let length_km = (dx * dx + dy * dy).sqrt();
        if let Some(stated) = entry.length_km {
            let computed = length_km.to_f64_lossy();
            let scale = computed.abs().max(stated.abs()).max(1.0);
            if (stated - computed).abs() > LENGTH_REL_TOL * scale {
                return Err(Error::LengthMismatch {
                    link: entry.id,
                    stated,
                    computed,
                });
            }
        }
        links[entry.id] = Some(FiberLink {
            id: LinkId(entry.id),
            src: NodeId(entry.src),
            dst: NodeId(entry.dst),
            num_wavelengths: entry.num_wavelengths,
            length_km,
        });
    }
    let links: Vec<FiberLink<F>> = links.into_iter().map(|o| o.unwrap()).collect();

    for (name, arr) in [
        ("max_transmitters", &doc.max_transmitters),
        ("max_receivers", &doc.max_receivers),
    ] {
        if arr.len() != n {
            return Err(Error::TransceiverArrayLength {
                array: name,
                got: arr.len(),
                nodes: n,
            });
        }
    }

    let capacity = doc
        .lightpath_capacity_gbps
        .unwrap_or_else(|| F::from_f64_lossy(DEFAULT_CAPACITY_GBPS));
    if capacity <= F::zero() {
        return Err(Error::NonPositiveCapacity(capacity.to_f64_lossy()));
    }

    let mut out_links = vec![Vec::new(); n];
    for link in &links {
        out_links[link.src.0].push(link.id);
    }

    Ok(PhysicalTopology {
        nodes,
        links,
        max_transmitters: doc.max_transmitters.clone(),
        max_receivers: doc.max_receivers.clone(),
        lightpath_capacity_gbps: capacity,
        out_links,
    })
}

/// Loads and validates a topology document from a JSON file.
pub fn load_topology<F: Scalar + serde::de::DeserializeOwned>(
    path: &Path,
) -> Result<PhysicalTopology<F>> {
    let text = std::fs::read_to_string(path)?;
    let doc: TopologyDocument<F> = serde_json::from_str(&text)?;
    parse_topology(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_doc() -> TopologyDocument<f64> {
        TopologyDocument {
            nodes: vec![
                NodeEntry {
                    id: 0,
                    name: "a".into(),
                    x_km: 0.0,
                    y_km: 0.0,
                    population: 10,
                    node_type: "core".into(),
                    timezone_offset_h: 0,
                },
                NodeEntry {
                    id: 1,
                    name: "b".into(),
                    x_km: 3.0,
                    y_km: 4.0,
                    population: 20,
                    node_type: "core".into(),
                    timezone_offset_h: 1,
                },
            ],
            links: vec![LinkEntry {
                id: 0,
                src: 0,
                dst: 1,
                num_wavelengths: 2,
                length_km: None,
            }],
            max_transmitters: vec![1, 1],
            max_receivers: vec![1, 1],
            lightpath_capacity_gbps: Some(10.0),
        }
    }

    #[test]
    fn three_four_five_triangle() {
        let topo = parse_topology(&two_node_doc()).unwrap();
        assert_eq!(topo.num_nodes(), 2);
        assert_eq!(topo.link(LinkId(0)).length_km, 5.0);
    }

    #[test]
    fn unknown_endpoint_rejected() {
        let mut doc = two_node_doc();
        doc.links[0].dst = 99;
        match parse_topology(&doc) {
            Err(Error::UnknownEndpoint { link: 0, node: 99 }) => {}
            other => panic!("expected unknown endpoint, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_node_id_rejected() {
        let mut doc = two_node_doc();
        doc.nodes[1].id = 0;
        assert!(matches!(
            parse_topology(&doc),
            Err(Error::DuplicateNodeId(0))
        ));
    }

    #[test]
    fn zero_wavelengths_rejected() {
        let mut doc = two_node_doc();
        doc.links[0].num_wavelengths = 0;
        assert!(matches!(parse_topology(&doc), Err(Error::NoWavelengths(0))));
    }

    #[test]
    fn non_finite_coordinate_rejected() {
        let mut doc = two_node_doc();
        doc.nodes[0].x_km = f64::NAN;
        assert!(matches!(
            parse_topology(&doc),
            Err(Error::NonFiniteCoordinate(0))
        ));
    }

    #[test]
    fn identical_coordinates_rejected() {
        let mut doc = two_node_doc();
        doc.nodes[1].x_km = 0.0;
        doc.nodes[1].y_km = 0.0;
        assert!(matches!(
            parse_topology(&doc),
            Err(Error::DuplicateCoordinates(0, 1))
        ));
    }

    #[test]
    fn conflicting_explicit_length_rejected() {
        let mut doc = two_node_doc();
        doc.links[0].length_km = Some(6.0);
        assert!(matches!(
            parse_topology(&doc),
            Err(Error::LengthMismatch { link: 0, .. })
        ));
    }

    #[test]
    fn agreeing_explicit_length_accepted() {
        let mut doc = two_node_doc();
        doc.links[0].length_km = Some(5.0);
        assert!(parse_topology(&doc).is_ok());
    }

    #[test]
    fn document_round_trip_is_identity() {
        let topo = parse_topology(&two_node_doc()).unwrap();
        let doc2 = topo.to_document();
        let topo2 = parse_topology(&doc2).unwrap();
        assert_eq!(
            serde_json::to_string(&topo.to_document()).unwrap(),
            serde_json::to_string(&topo2.to_document()).unwrap()
        );
    }
}
