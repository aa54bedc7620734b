//! Staged flow admission over the two-layer state, and flow teardown with
//! lightpath reclamation.
//!
//! An arriving flow is tried against five stages in strict order, committing
//! the first that succeeds:
//!
//! 1. route over the existing virtual topology (capacitated, fewest hops);
//! 2. establish one new direct lightpath source -> destination;
//! 3. reuse an existing lightpath source -> n with spare capacity and
//!    establish n -> destination, picking the n with the smallest total
//!    propagation delay;
//! 4. the mirror image: new lightpath source -> m, existing m -> destination;
//! 5. block the flow.
//!
//! At most one new lightpath is ever established per admission. Stage 3/4
//! candidates are evaluated against the untouched state (probe, then commit
//! the winner), so a blocked admission leaves no side effects.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    FlowId, LightpathId, LinkId, NodeId, PhysicalTopology, VirtualTopology,
};
use crate::routing::{cspf_virtual_route, first_fit_wavelength, k_shortest_paths, VirtualRoute};
use crate::scalar::Scalar;

/// Lifecycle of a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowState {
    Active,
    Blocked,
    Departed,
}

/// A multimedia demand routed over a chain of lightpaths.
#[derive(Debug, Clone)]
pub struct Flow<F> {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub reserved_gbps: F,
    /// Traffic-model tag from the demand matrix (e.g. `audio-unitary`).
    pub model: String,
    pub route: Option<VirtualRoute<F>>,
    pub state: FlowState,
}

/// Why a lightpath could not be established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstablishFailure {
    NoTransmitter,
    NoReceiver,
    NoWavelength,
    NoPath,
}

/// Which stage of the cascade settled the flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdmissionDecision {
    RoutedExisting,
    RoutedNewDirect,
    RoutedViaSourceAdjacent,
    RoutedViaDestinationAdjacent,
    Blocked,
}

impl AdmissionDecision {
    /// Cascade stage this decision corresponds to (1-5).
    pub fn stage(self) -> u8 {
        match self {
            AdmissionDecision::RoutedExisting => 1,
            AdmissionDecision::RoutedNewDirect => 2,
            AdmissionDecision::RoutedViaSourceAdjacent => 3,
            AdmissionDecision::RoutedViaDestinationAdjacent => 4,
            AdmissionDecision::Blocked => 5,
        }
    }
}

/// Why a flow was blocked outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    /// Reserved rate exceeds the lightpath line rate; no route can ever fit.
    RateExceedsCapacity,
    /// All five stages failed.
    CascadeExhausted,
}

/// One cascade stage attempt, for decision traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageAttempt {
    pub stage: u8,
    pub ok: bool,
}

/// Result of one admission.
#[derive(Debug, Clone)]
pub struct AdmissionOutcome<F> {
    pub decision: AdmissionDecision,
    /// Present iff not blocked.
    pub route: Option<VirtualRoute<F>>,
    /// Present iff a stage-2/3/4 decision established a lightpath.
    pub new_lightpath: Option<LightpathId>,
    pub blocked: Option<BlockReason>,
    /// Stages attempted, in order.
    pub attempts: Vec<StageAttempt>,
}

/// Mutable two-layer network state: the immutable physical topology, the
/// live virtual topology, and the active flow set.
#[derive(Debug, Clone)]
pub struct NetworkState<F: Scalar> {
    topo: PhysicalTopology<F>,
    vt: VirtualTopology<F>,
    flows: BTreeMap<FlowId, Flow<F>>,
}

impl<F: Scalar> NetworkState<F> {
    pub fn new(topo: PhysicalTopology<F>) -> Self {
        let n = topo.num_nodes();
        Self {
            topo,
            vt: VirtualTopology::new(n),
            flows: BTreeMap::new(),
        }
    }

    pub fn topology(&self) -> &PhysicalTopology<F> {
        &self.topo
    }

    pub fn virtual_topology(&self) -> &VirtualTopology<F> {
        &self.vt
    }

    /// Active flows, ascending by id.
    pub fn flows(&self) -> &BTreeMap<FlowId, Flow<F>> {
        &self.flows
    }

    /// Sum of reserved rates over active flows.
    pub fn total_offered_gbps(&self) -> F {
        self.flows
            .values()
            .fold(F::zero(), |acc, f| acc + f.reserved_gbps)
    }

    /// Reserved rate per active flow id.
    pub fn flow_rates(&self) -> BTreeMap<FlowId, F> {
        self.flows
            .iter()
            .map(|(id, f)| (*id, f.reserved_gbps))
            .collect()
    }

    /// Finds the route and wavelength a new lightpath s -> d would take,
    /// without touching state: k shortest physical routes in order, first
    /// route with a free wavelength wins (first-fit).
    fn probe_lightpath(
        &self,
        s: NodeId,
        d: NodeId,
        k: usize,
    ) -> std::result::Result<(Vec<LinkId>, usize), EstablishFailure> {
        if self.vt.tx_used(s) >= self.topo.max_transmitters(s) {
            return Err(EstablishFailure::NoTransmitter);
        }
        if self.vt.rx_used(d) >= self.topo.max_receivers(d) {
            return Err(EstablishFailure::NoReceiver);
        }
        let routes = k_shortest_paths(&self.topo, s, d, k);
        if routes.is_empty() {
            return Err(EstablishFailure::NoPath);
        }
        for route in routes {
            if let Some(w) = first_fit_wavelength(&self.vt, &self.topo, &route.links) {
                return Ok((route.links, w));
            }
        }
        Err(EstablishFailure::NoWavelength)
    }

    /// Establishes a new empty lightpath from `s` to `d`, searching the `k`
    /// shortest physical routes in order and assigning the first-fit
    /// wavelength on the first route that has one.
    pub fn establish_lightpath(
        &mut self,
        s: NodeId,
        d: NodeId,
        k: usize,
    ) -> std::result::Result<LightpathId, EstablishFailure> {
        assert_ne!(s, d, "lightpath endpoints must differ");
        let (route, wavelength) = self.probe_lightpath(s, d, k)?;
        Ok(self.vt.insert(&self.topo, s, d, route, wavelength))
    }

    /// Routes `flow` through the admission cascade. On success the flow is
    /// registered as active and every traversed lightpath carries its rate;
    /// a blocked admission leaves the state untouched.
    pub fn admit_flow(
        &mut self,
        id: FlowId,
        src: NodeId,
        dst: NodeId,
        reserved_gbps: F,
        model: &str,
        k: usize,
    ) -> AdmissionOutcome<F> {
        assert_ne!(src, dst, "flow endpoints must differ");
        assert!(reserved_gbps > F::zero(), "reserved rate must be positive");
        assert!(
            !self.flows.contains_key(&id),
            "flow id {id:?} already active"
        );

        let mut attempts = Vec::new();

        if reserved_gbps > self.topo.lightpath_capacity_gbps() {
            return AdmissionOutcome {
                decision: AdmissionDecision::Blocked,
                route: None,
                new_lightpath: None,
                blocked: Some(BlockReason::RateExceedsCapacity),
                attempts,
            };
        }

        // Stage 1: fit into the existing virtual topology.
        let stage1 = cspf_virtual_route(&self.vt, self.topo.num_nodes(), src, dst, reserved_gbps);
        attempts.push(StageAttempt {
            stage: 1,
            ok: stage1.is_some(),
        });
        if let Some(route) = stage1 {
            self.commit_flow(id, src, dst, reserved_gbps, model, route.clone());
            return AdmissionOutcome {
                decision: AdmissionDecision::RoutedExisting,
                route: Some(route),
                new_lightpath: None,
                blocked: None,
                attempts,
            };
        }

        // Stage 2: one new direct lightpath.
        let stage2 = self.probe_lightpath(src, dst, k);
        attempts.push(StageAttempt {
            stage: 2,
            ok: stage2.is_ok(),
        });
        if let Ok((links, wavelength)) = stage2 {
            let lp = self.vt.insert(&self.topo, src, dst, links, wavelength);
            let route = self.single_hop_route(lp);
            self.commit_flow(id, src, dst, reserved_gbps, model, route.clone());
            return AdmissionOutcome {
                decision: AdmissionDecision::RoutedNewDirect,
                route: Some(route),
                new_lightpath: Some(lp),
                blocked: None,
                attempts,
            };
        }

        // Stage 3: existing src -> n plus a new lightpath n -> dst.
        let stage3 = self.best_adjacent_candidate(src, dst, reserved_gbps, k, true);
        attempts.push(StageAttempt {
            stage: 3,
            ok: stage3.is_some(),
        });
        if let Some(cand) = stage3 {
            let lp = self
                .vt
                .insert(&self.topo, cand.new_src, cand.new_dst, cand.links, cand.wavelength);
            let route = self.two_hop_route(cand.existing, lp, true);
            self.commit_flow(id, src, dst, reserved_gbps, model, route.clone());
            return AdmissionOutcome {
                decision: AdmissionDecision::RoutedViaSourceAdjacent,
                route: Some(route),
                new_lightpath: Some(lp),
                blocked: None,
                attempts,
            };
        }

        // Stage 4: new lightpath src -> m plus existing m -> dst.
        let stage4 = self.best_adjacent_candidate(src, dst, reserved_gbps, k, false);
        attempts.push(StageAttempt {
            stage: 4,
            ok: stage4.is_some(),
        });
        if let Some(cand) = stage4 {
            let lp = self
                .vt
                .insert(&self.topo, cand.new_src, cand.new_dst, cand.links, cand.wavelength);
            let route = self.two_hop_route(cand.existing, lp, false);
            self.commit_flow(id, src, dst, reserved_gbps, model, route.clone());
            return AdmissionOutcome {
                decision: AdmissionDecision::RoutedViaDestinationAdjacent,
                route: Some(route),
                new_lightpath: Some(lp),
                blocked: None,
                attempts,
            };
        }

        attempts.push(StageAttempt { stage: 5, ok: true });
        AdmissionOutcome {
            decision: AdmissionDecision::Blocked,
            route: None,
            new_lightpath: None,
            blocked: Some(BlockReason::CascadeExhausted),
            attempts,
        }
    }

    /// Removes an active flow, returning the ids of lightpaths that became
    /// empty and were torn down with it.
    pub fn terminate_flow(&mut self, id: FlowId) -> Result<Vec<LightpathId>> {
        let flow = self.flows.remove(&id).ok_or(Error::UnknownFlow(id.0))?;
        let route = flow
            .route
            .as_ref()
            .expect("active flows always carry a route");
        let mut reclaimed = Vec::new();
        for lp_id in &route.lightpath_ids {
            self.vt.remove_flow(*lp_id, id, flow.reserved_gbps);
            if self.vt.get(*lp_id).unwrap().flows.is_empty() {
                self.vt.remove(*lp_id);
                reclaimed.push(*lp_id);
            }
        }
        Ok(reclaimed)
    }

    /// Best stage-3 (`src_side == true`) or stage-4 candidate: scans
    /// intermediate nodes in ascending id order, keeps for each the
    /// lowest-delay feasible existing lightpath and the probed new lightpath,
    /// and picks the candidate with the smallest two-hop delay (ties go to
    /// the smaller node id). Probing leaves the state untouched; the caller
    /// commits the winner.
    fn best_adjacent_candidate(
        &self,
        src: NodeId,
        dst: NodeId,
        rate: F,
        k: usize,
        src_side: bool,
    ) -> Option<AdjacentCandidate<F>> {
        let mut best: Option<AdjacentCandidate<F>> = None;
        for n in 0..self.topo.num_nodes() {
            let mid = NodeId(n);
            if mid == src || mid == dst {
                continue;
            }
            // Cheapest existing lightpath on the fixed side with room for
            // the flow; BTreeMap order makes the min-by deterministic.
            let existing = self
                .vt
                .lightpaths()
                .filter(|lp| {
                    let endpoints_match = if src_side {
                        lp.src == src && lp.dst == mid
                    } else {
                        lp.src == mid && lp.dst == dst
                    };
                    endpoints_match && lp.residual_gbps() >= rate
                })
                .min_by(|a, b| {
                    a.delay_s
                        .partial_cmp(&b.delay_s)
                        .expect("delays are never NaN")
                        .then(a.id.cmp(&b.id))
                });
            let Some(existing) = existing else { continue };

            let (new_src, new_dst) = if src_side { (mid, dst) } else { (src, mid) };
            let Ok((links, wavelength)) = self.probe_lightpath(new_src, new_dst, k) else {
                continue;
            };
            let new_delay = crate::model::propagation_delay_s(self.topo.route_length_km(&links))
                .expect("route lengths are non-negative");
            let total_delay = existing.delay_s + new_delay;

            let replace = match &best {
                None => true,
                Some(b) => {
                    total_delay
                        .partial_cmp(&b.total_delay)
                        .expect("delays are never NaN")
                        .is_lt()
                }
            };
            if replace {
                best = Some(AdjacentCandidate {
                    existing: existing.id,
                    new_src,
                    new_dst,
                    links,
                    wavelength,
                    total_delay,
                });
            }
        }
        best
    }

    fn single_hop_route(&self, lp: LightpathId) -> VirtualRoute<F> {
        let lightpath = self.vt.get(lp).unwrap();
        VirtualRoute {
            lightpath_ids: vec![lp],
            virtual_hops: 1,
            delay_s: lightpath.delay_s,
        }
    }

    fn two_hop_route(
        &self,
        existing: LightpathId,
        new_lp: LightpathId,
        src_side: bool,
    ) -> VirtualRoute<F> {
        let ids = if src_side {
            vec![existing, new_lp]
        } else {
            vec![new_lp, existing]
        };
        let delay_s = ids
            .iter()
            .fold(F::zero(), |acc, id| acc + self.vt.get(*id).unwrap().delay_s);
        VirtualRoute {
            lightpath_ids: ids,
            virtual_hops: 2,
            delay_s,
        }
    }

    fn commit_flow(
        &mut self,
        id: FlowId,
        src: NodeId,
        dst: NodeId,
        reserved_gbps: F,
        model: &str,
        route: VirtualRoute<F>,
    ) {
        debug_assert!(self.virtual_route_is_contiguous(src, dst, &route));
        for lp_id in &route.lightpath_ids {
            self.vt.add_flow(*lp_id, id, reserved_gbps);
        }
        self.flows.insert(
            id,
            Flow {
                id,
                src,
                dst,
                reserved_gbps,
                model: model.to_string(),
                route: Some(route),
                state: FlowState::Active,
            },
        );
    }

    fn virtual_route_is_contiguous(&self, src: NodeId, dst: NodeId, route: &VirtualRoute<F>) -> bool {
        let mut at = src;
        for lp_id in &route.lightpath_ids {
            let Some(lp) = self.vt.get(*lp_id) else {
                return false;
            };
            if lp.src != at {
                return false;
            }
            at = lp.dst;
        }
        at == dst && !route.lightpath_ids.is_empty()
    }

    /// Re-routes an active flow onto `new_route`, keeping carried sums in
    /// step. Used by the flow-deviation optimizer.
    pub(crate) fn move_flow(&mut self, id: FlowId, new_route: VirtualRoute<F>) {
        let (src, dst, rate, old_route) = {
            let flow = self.flows.get(&id).expect("moving unknown flow");
            (
                flow.src,
                flow.dst,
                flow.reserved_gbps,
                flow.route.clone().expect("active flows carry a route"),
            )
        };
        debug_assert!(self.virtual_route_is_contiguous(src, dst, &new_route));
        for lp_id in &old_route.lightpath_ids {
            self.vt.remove_flow(*lp_id, id, rate);
        }
        for lp_id in &new_route.lightpath_ids {
            self.vt.add_flow(*lp_id, id, rate);
        }
        self.flows.get_mut(&id).unwrap().route = Some(new_route);
    }

    /// Cheap structural checks run after every event: counter consistency
    /// between the occupancy map, the lightpath set and the transceiver
    /// tallies, plus per-lightpath load bounds.
    pub fn fast_audit(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::AuditFailure(msg));
        let mut slots = 0usize;
        let mut tx_total = 0usize;
        for lp in self.vt.lightpaths() {
            slots += lp.route.len();
            tx_total += 1;
            if lp.carried_gbps < F::zero() || lp.carried_gbps > lp.capacity_gbps {
                return fail(format!(
                    "lightpath {} carried {} outside [0, {}]",
                    lp.id, lp.carried_gbps, lp.capacity_gbps
                ));
            }
            if lp.flows.is_empty() && lp.carried_gbps != F::zero() {
                return fail(format!("empty lightpath {} carries load", lp.id));
            }
        }
        if slots != self.vt.occupied_slots() {
            return fail("occupancy size disagrees with lightpath routes".into());
        }
        let tx_sum: usize = (0..self.topo.num_nodes())
            .map(|n| self.vt.tx_used(NodeId(n)))
            .sum();
        let rx_sum: usize = (0..self.topo.num_nodes())
            .map(|n| self.vt.rx_used(NodeId(n)))
            .sum();
        if tx_sum != tx_total || rx_sum != tx_total {
            return fail("transceiver tallies disagree with lightpath count".into());
        }
        Ok(())
    }

    /// Full recompute-from-scratch audit of every structural invariant.
    pub fn full_audit(&self) -> Result<()> {
        self.vt.audit(&self.topo, &self.flow_rates())?;
        for (id, flow) in &self.flows {
            if flow.state != FlowState::Active {
                return Err(Error::AuditFailure(format!(
                    "stored flow {id:?} is not active"
                )));
            }
            let Some(route) = &flow.route else {
                return Err(Error::AuditFailure(format!("flow {id:?} has no route")));
            };
            if !self.virtual_route_is_contiguous(flow.src, flow.dst, route) {
                return Err(Error::AuditFailure(format!(
                    "flow {id:?} route is not contiguous"
                )));
            }
            for lp_id in &route.lightpath_ids {
                let lp = self.vt.get(*lp_id).unwrap();
                if !lp.flows.contains(id) {
                    return Err(Error::AuditFailure(format!(
                        "lightpath {} does not list flow {id:?}",
                        lp.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Winner of a stage-3/4 scan. The intermediate node itself is implicit in
/// the endpoints; ascending scan order provides the node-id tie-break.
#[derive(Debug, Clone)]
struct AdjacentCandidate<F> {
    existing: LightpathId,
    new_src: NodeId,
    new_dst: NodeId,
    links: Vec<LinkId>,
    wavelength: usize,
    total_delay: F,
}
