//! Serializable run-output documents. The virtual-topology document doubles
//! as a saved state: it carries enough (loads, delays, flow rates) to
//! recompute the average packet delay offline.

use serde::{Deserialize, Serialize};

use crate::admission::NetworkState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Saved upper-layer state: every lightpath with its physical footprint and
/// every active flow with its lightpath chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirtualTopologyDocument<F> {
    pub lightpaths: Vec<LightpathRecord<F>>,
    pub flows: Vec<FlowRecord<F>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LightpathRecord<F> {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub route: Vec<usize>,
    pub wavelength: usize,
    pub capacity_gbps: F,
    pub carried_gbps: F,
    pub delay_s: F,
    pub flows: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowRecord<F> {
    pub id: u64,
    pub src: usize,
    pub dst: usize,
    pub reserved_gbps: F,
    pub lightpaths: Vec<u64>,
}

impl<F: Scalar> VirtualTopologyDocument<F> {
    pub fn from_state(state: &NetworkState<F>) -> Self {
        Self {
            lightpaths: state
                .virtual_topology()
                .lightpaths()
                .map(|lp| LightpathRecord {
                    id: lp.id.0,
                    src: lp.src.0,
                    dst: lp.dst.0,
                    route: lp.route.iter().map(|l| l.0).collect(),
                    wavelength: lp.wavelength,
                    capacity_gbps: lp.capacity_gbps,
                    carried_gbps: lp.carried_gbps,
                    delay_s: lp.delay_s,
                    flows: lp.flows.iter().map(|f| f.0).collect(),
                })
                .collect(),
            flows: state
                .flows()
                .values()
                .map(|flow| FlowRecord {
                    id: flow.id.0,
                    src: flow.src.0,
                    dst: flow.dst.0,
                    reserved_gbps: flow.reserved_gbps,
                    lightpaths: flow
                        .route
                        .as_ref()
                        .map(|r| r.lightpath_ids.iter().map(|l| l.0).collect())
                        .unwrap_or_default(),
                })
                .collect(),
        }
    }

    /// Average packet delay of the saved state, the same load-weighted M/M/1
    /// sum the simulator reports.
    pub fn average_packet_delay_s(&self) -> Result<F> {
        let gamma = self
            .flows
            .iter()
            .fold(F::zero(), |acc, f| acc + f.reserved_gbps);
        if gamma <= F::zero() {
            return Err(Error::NoTraffic);
        }
        let mut sum = F::zero();
        for lp in &self.lightpaths {
            if lp.carried_gbps >= lp.capacity_gbps {
                return Ok(F::infinity());
            }
            sum = sum
                + lp.carried_gbps / (lp.capacity_gbps - lp.carried_gbps)
                + lp.carried_gbps * lp.delay_s;
        }
        Ok(sum / gamma)
    }
}
