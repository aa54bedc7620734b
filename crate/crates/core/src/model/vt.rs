//! Virtual topology: the live lightpath set plus occupancy bookkeeping.

use std::collections::{BTreeMap, BTreeSet};

use super::lightpath::{FlowId, Lightpath, LightpathId};
use super::topology::{LinkId, NodeId, PhysicalTopology};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The upper layer: lightpaths keyed by id, wavelength occupancy per fiber,
/// and transmitter/receiver usage per node.
///
/// Mutated only by the single simulation thread; all bookkeeping is kept
/// incrementally and can be re-derived from scratch by [`Self::audit`].
#[derive(Debug, Clone)]
pub struct VirtualTopology<F> {
    lightpaths: BTreeMap<LightpathId, Lightpath<F>>,
    /// (fiber, wavelength) -> occupying lightpath.
    occupancy: BTreeMap<(LinkId, usize), LightpathId>,
    tx_used: Vec<usize>,
    rx_used: Vec<usize>,
    next_id: u64,
}

impl<F: Scalar> VirtualTopology<F> {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            lightpaths: BTreeMap::new(),
            occupancy: BTreeMap::new(),
            tx_used: vec![0; num_nodes],
            rx_used: vec![0; num_nodes],
            next_id: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.lightpaths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lightpaths.is_empty()
    }

    pub fn lightpaths(&self) -> impl Iterator<Item = &Lightpath<F>> {
        self.lightpaths.values()
    }

    pub fn get(&self, id: LightpathId) -> Option<&Lightpath<F>> {
        self.lightpaths.get(&id)
    }

    pub fn tx_used(&self, n: NodeId) -> usize {
        self.tx_used[n.0]
    }

    pub fn rx_used(&self, n: NodeId) -> usize {
        self.rx_used[n.0]
    }

    /// Number of occupied (fiber, wavelength) pairs.
    pub fn occupied_slots(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_wavelength_free(&self, link: LinkId, wavelength: usize) -> bool {
        !self.occupancy.contains_key(&(link, wavelength))
    }

    /// Registers a new lightpath and returns its id. The caller is
    /// responsible for transceiver admission checks and for picking a free
    /// wavelength; violations here are bugs, not expected outcomes.
    pub fn insert(
        &mut self,
        topo: &PhysicalTopology<F>,
        src: NodeId,
        dst: NodeId,
        route: Vec<LinkId>,
        wavelength: usize,
    ) -> LightpathId {
        assert!(
            topo.route_is_contiguous(src, dst, &route),
            "lightpath route must be contiguous from src to dst"
        );
        for link in &route {
            assert!(
                wavelength < topo.link(*link).num_wavelengths,
                "wavelength {wavelength} out of range on link {link}"
            );
            assert!(
                self.is_wavelength_free(*link, wavelength),
                "wavelength {wavelength} already occupied on link {link}"
            );
        }
        assert!(self.tx_used[src.0] < topo.max_transmitters(src));
        assert!(self.rx_used[dst.0] < topo.max_receivers(dst));

        let id = LightpathId(self.next_id);
        self.next_id += 1;
        for link in &route {
            self.occupancy.insert((*link, wavelength), id);
        }
        self.tx_used[src.0] += 1;
        self.rx_used[dst.0] += 1;
        let delay_s = super::propagation_delay_s(topo.route_length_km(&route))
            .expect("route lengths are non-negative");
        self.lightpaths.insert(
            id,
            Lightpath {
                id,
                src,
                dst,
                route,
                wavelength,
                capacity_gbps: topo.lightpath_capacity_gbps(),
                carried_gbps: F::zero(),
                delay_s,
                flows: BTreeSet::new(),
            },
        );
        id
    }

    /// Removes a lightpath, releasing its wavelength slots and transceivers.
    /// Panics if it still carries flows.
    pub fn remove(&mut self, id: LightpathId) -> Lightpath<F> {
        let lp = self
            .lightpaths
            .remove(&id)
            .expect("removing unknown lightpath");
        assert!(lp.flows.is_empty(), "removing a non-empty lightpath");
        for link in &lp.route {
            let prev = self.occupancy.remove(&(*link, lp.wavelength));
            assert_eq!(prev, Some(id), "occupancy bookkeeping out of sync");
        }
        self.tx_used[lp.src.0] -= 1;
        self.rx_used[lp.dst.0] -= 1;
        lp
    }

    /// Adds a flow's reserved rate onto a lightpath.
    pub fn add_flow(&mut self, lp_id: LightpathId, flow_id: FlowId, rate: F) {
        let lp = self.lightpaths.get_mut(&lp_id).expect("unknown lightpath");
        assert!(lp.flows.insert(flow_id), "flow already on lightpath");
        lp.carried_gbps = lp.carried_gbps + rate;
    }

    /// Removes a flow's reserved rate from a lightpath.
    pub fn remove_flow(&mut self, lp_id: LightpathId, flow_id: FlowId, rate: F) {
        let lp = self.lightpaths.get_mut(&lp_id).expect("unknown lightpath");
        assert!(lp.flows.remove(&flow_id), "flow not on lightpath");
        lp.carried_gbps = lp.carried_gbps - rate;
        if lp.flows.is_empty() {
            // pin to exact zero so float residue cannot accumulate
            lp.carried_gbps = F::zero();
        }
    }

    /// Lightpaths leaving `n`, ascending by id.
    pub fn out_of(&self, n: NodeId) -> impl Iterator<Item = &Lightpath<F>> {
        self.lightpaths.values().filter(move |lp| lp.src == n)
    }

    /// Lightpaths entering `n`, ascending by id.
    pub fn into_node(&self, n: NodeId) -> impl Iterator<Item = &Lightpath<F>> {
        self.lightpaths.values().filter(move |lp| lp.dst == n)
    }

    /// Full structural audit: recomputes occupancy, transceiver counts and
    /// carried sums from scratch and compares with the incremental state.
    /// `flow_rate` maps a flow id to its reserved rate.
    pub fn audit(
        &self,
        topo: &PhysicalTopology<F>,
        flow_rate: &BTreeMap<FlowId, F>,
    ) -> Result<()> {
        let fail = |msg: String| Err(Error::AuditFailure(msg));

        let mut occupancy = BTreeMap::new();
        let mut tx = vec![0usize; topo.num_nodes()];
        let mut rx = vec![0usize; topo.num_nodes()];
        for lp in self.lightpaths.values() {
            if !topo.route_is_contiguous(lp.src, lp.dst, &lp.route) {
                return fail(format!("lightpath {} route not contiguous", lp.id));
            }
            for link in &lp.route {
                if lp.wavelength >= topo.link(*link).num_wavelengths {
                    return fail(format!(
                        "lightpath {} wavelength {} exceeds link {} budget",
                        lp.id, lp.wavelength, link
                    ));
                }
                if let Some(other) = occupancy.insert((*link, lp.wavelength), lp.id) {
                    return fail(format!(
                        "slot ({}, {}) claimed by lightpaths {} and {}",
                        link, lp.wavelength, other, lp.id
                    ));
                }
            }
            tx[lp.src.0] += 1;
            rx[lp.dst.0] += 1;

            if lp.carried_gbps < F::zero() || lp.carried_gbps > lp.capacity_gbps {
                return fail(format!(
                    "lightpath {} carried {} outside [0, {}]",
                    lp.id, lp.carried_gbps, lp.capacity_gbps
                ));
            }
            let mut sum = F::zero();
            for f in &lp.flows {
                match flow_rate.get(f) {
                    Some(r) => sum = sum + *r,
                    None => return fail(format!("lightpath {} lists unknown flow {}", lp.id, f)),
                }
            }
            let tol = F::from_f64_lossy(1e-9)
                * F::one().max(lp.carried_gbps.abs()).max(sum.abs());
            if (sum - lp.carried_gbps).abs() > tol {
                return fail(format!(
                    "lightpath {} carried {} but flow rates sum to {}",
                    lp.id, lp.carried_gbps, sum
                ));
            }
        }
        if occupancy != self.occupancy {
            return fail("occupancy map does not match lightpath routes".into());
        }
        if tx != self.tx_used || rx != self.rx_used {
            return fail("transceiver counters do not match lightpath set".into());
        }
        for n in 0..topo.num_nodes() {
            let id = NodeId(n);
            if self.tx_used[n] > topo.max_transmitters(id) {
                return fail(format!("node {n} exceeds transmitter budget"));
            }
            if self.rx_used[n] > topo.max_receivers(id) {
                return fail(format!("node {n} exceeds receiver budget"));
            }
        }
        Ok(())
    }
}
