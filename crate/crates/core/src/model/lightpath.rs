//! Lightpaths: all-optical connections of the upper layer.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::topology::{LinkId, NodeId};

/// Identifier of a lightpath, unique for the lifetime of a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct LightpathId(pub u64);

/// Identifier of a flow, unique for the lifetime of a run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct FlowId(pub u64);

impl std::fmt::Display for LightpathId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::fmt::Display for FlowId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// An optical connection: a physical route holding one wavelength end to end,
/// terminated electronically, carrying a set of flows.
#[derive(Debug, Clone, PartialEq)]
pub struct Lightpath<F> {
    pub id: LightpathId,
    pub src: NodeId,
    pub dst: NodeId,
    /// Traversed fiber links, in order.
    pub route: Vec<LinkId>,
    /// Single wavelength index used on every traversed fiber.
    pub wavelength: usize,
    pub capacity_gbps: F,
    pub carried_gbps: F,
    /// End-to-end propagation delay over the physical route, seconds.
    /// Fixed at establishment; the physical layer is immutable.
    pub delay_s: F,
    /// Flows currently routed over this lightpath.
    pub flows: BTreeSet<FlowId>,
}

impl<F: crate::scalar::Scalar> Lightpath<F> {
    /// Capacity still available for new flows.
    pub fn residual_gbps(&self) -> F {
        self.capacity_gbps - self.carried_gbps
    }
}
