//! Network-wide average packet delay and flow-deviation re-routing.
//!
//! Each lightpath is an M/M/1 server with rates expressed in Gbps treated as
//! normalized packet-service rates: a lightpath with capacity `C` and load
//! `f` contributes `f / (C - f)` plus `f * prop` of weighted propagation
//! delay, and the network-wide average is the load-weighted mean over
//! lightpaths. Flows are atomic, so deviation moves whole flows along
//! shortest paths and accepts only strict improvements.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::admission::NetworkState;
use crate::error::{Error, Result};
use crate::model::{FlowId, LightpathId, VirtualTopology};
use crate::routing::{weighted_virtual_route, VirtualRoute};
use crate::scalar::Scalar;

/// Delay-sum contribution of one lightpath: `f/(C-f) + f*prop`, or infinity
/// at or beyond capacity.
fn delay_term<F: Scalar>(capacity: F, load: F, prop_s: F) -> F {
    if load >= capacity {
        F::infinity()
    } else {
        load / (capacity - load) + load * prop_s
    }
}

/// Network-wide average packet delay in seconds over the given per-flow
/// rates: `T = (1/gamma) * sum_e [ f_e/(C_e - f_e) + f_e * prop_e ]`.
/// Infinity when any lightpath is at or beyond capacity; an error when no
/// traffic is carried.
pub fn average_packet_delay<F: Scalar>(
    vt: &VirtualTopology<F>,
    flow_rates: &BTreeMap<FlowId, F>,
) -> Result<F> {
    let gamma = flow_rates.values().fold(F::zero(), |acc, r| acc + *r);
    if gamma <= F::zero() {
        return Err(Error::NoTraffic);
    }
    let mut sum = F::zero();
    for lp in vt.lightpaths() {
        sum = sum + delay_term(lp.capacity_gbps, lp.carried_gbps, lp.delay_s);
    }
    Ok(sum / gamma)
}

/// Flow-deviation link length: the partial derivative of the delay sum
/// `gamma * T` with respect to the lightpath load, `C/(C-f)^2 + prop`.
/// Infinity at or beyond capacity.
pub fn marginal_delay_length<F: Scalar>(capacity: F, load: F, prop_s: F) -> F {
    debug_assert!(load >= F::zero());
    if load >= capacity {
        return F::infinity();
    }
    let slack = capacity - load;
    capacity / (slack * slack) + prop_s
}

/// One accepted re-route.
#[derive(Debug, Clone, Serialize)]
pub struct FdaMove {
    pub flow: FlowId,
    pub from: Vec<LightpathId>,
    pub to: Vec<LightpathId>,
}

/// Outcome of one flow-deviation invocation.
#[derive(Debug, Clone, Serialize)]
pub struct FdaReport<F> {
    /// Passes fully executed (a terminating no-move pass counts).
    pub passes: usize,
    pub t_before: Option<F>,
    pub t_after: Option<F>,
    /// Average delay at the end of each pass.
    pub pass_delays: Vec<F>,
    pub moves: Vec<FdaMove>,
}

/// Repeatedly sweeps active flows in descending reserved-rate order (ties by
/// ascending id) and re-routes each onto the cheapest feasible virtual path,
/// with that flow's own load removed from the weights. A move is committed
/// only if it strictly lowers the average delay by more than `tol * T`.
/// Stops after a moveless pass or `max_passes`.
///
/// Candidate paths come from two searches: the marginal-length shortest path
/// (the classical deviation direction) and the shortest path under the exact
/// per-lightpath delay increment. Both candidates are evaluated exactly; the
/// increment search guarantees that on return no single-flow move can beat
/// the threshold.
pub fn fda_reroute<F: Scalar>(
    state: &mut NetworkState<F>,
    tol: F,
    max_passes: usize,
) -> FdaReport<F> {
    state.full_audit().expect("flow deviation needs a clean state");

    let rates = state.flow_rates();
    let t_before = average_packet_delay(state.virtual_topology(), &rates).ok();
    let mut report = FdaReport {
        passes: 0,
        t_before,
        t_after: t_before,
        pass_delays: Vec::new(),
        moves: Vec::new(),
    };
    let Some(mut t_current) = t_before else {
        return report;
    };
    let gamma = rates.values().fold(F::zero(), |acc, r| acc + *r);

    let mut order: Vec<FlowId> = rates.keys().copied().collect();
    order.sort_by(|a, b| {
        rates[b]
            .partial_cmp(&rates[a])
            .expect("rates are never NaN")
            .then(a.cmp(b))
    });

    for _pass in 0..max_passes {
        report.passes += 1;
        let mut moved = false;

        for flow_id in &order {
            let (src, dst, rate, current) = {
                let flow = &state.flows()[flow_id];
                (
                    flow.src,
                    flow.dst,
                    flow.reserved_gbps,
                    flow.route.clone().expect("active flows carry a route"),
                )
            };
            let num_nodes = state.topology().num_nodes();
            let vt = state.virtual_topology();

            // Load seen by this flow's candidates: its own share removed.
            // Clamped at zero: carried sums accumulate float residue.
            let load_without = |lp: &crate::model::Lightpath<F>| {
                if lp.flows.contains(flow_id) {
                    (lp.carried_gbps - rate).max(F::zero())
                } else {
                    lp.carried_gbps
                }
            };

            let marginal = weighted_virtual_route(vt, num_nodes, src, dst, |lp| {
                let f0 = load_without(lp);
                (lp.capacity_gbps - f0 >= rate)
                    .then(|| marginal_delay_length(lp.capacity_gbps, f0, lp.delay_s))
            });
            let increment = weighted_virtual_route(vt, num_nodes, src, dst, |lp| {
                let f0 = load_without(lp);
                (lp.capacity_gbps - f0 >= rate)
                    .then(|| delay_term(lp.capacity_gbps, f0 + rate, lp.delay_s)
                        - delay_term(lp.capacity_gbps, f0, lp.delay_s))
            });

            let mut best: Option<(F, VirtualRoute<F>)> = None;
            for candidate in [marginal, increment].into_iter().flatten() {
                if candidate.lightpath_ids == current.lightpath_ids {
                    continue;
                }
                let t_new = delay_after_move(vt, gamma, *flow_id, rate, &current, &candidate);
                let better = match &best {
                    None => t_new < t_current,
                    Some((t_best, _)) => t_new < *t_best,
                };
                if better {
                    best = Some((t_new, candidate));
                }
            }

            if let Some((t_new, route)) = best {
                // strict improvement beyond the relative threshold; an
                // overloaded (infinite-delay) state accepts any finite cut
                let accept = if t_current.is_finite() {
                    t_current - t_new > tol * t_current
                } else {
                    t_new < t_current
                };
                if accept {
                    report.moves.push(FdaMove {
                        flow: *flow_id,
                        from: current.lightpath_ids.clone(),
                        to: route.lightpath_ids.clone(),
                    });
                    state.move_flow(*flow_id, route);
                    t_current = t_new;
                    moved = true;
                }
            }
        }

        report.pass_delays.push(t_current);
        if !moved {
            break;
        }
    }

    debug_assert!(state.full_audit().is_ok());
    report.t_after = Some(t_current);
    report
}

/// Average delay after hypothetically moving `flow` from `from` to `to`,
/// computed without mutating the topology.
fn delay_after_move<F: Scalar>(
    vt: &VirtualTopology<F>,
    gamma: F,
    flow: FlowId,
    rate: F,
    from: &VirtualRoute<F>,
    to: &VirtualRoute<F>,
) -> F {
    let mut overrides: BTreeMap<LightpathId, F> = BTreeMap::new();
    for lp_id in &from.lightpath_ids {
        let lp = vt.get(*lp_id).unwrap();
        debug_assert!(lp.flows.contains(&flow));
        overrides.insert(*lp_id, (lp.carried_gbps - rate).max(F::zero()));
    }
    for lp_id in &to.lightpath_ids {
        let base = overrides
            .get(lp_id)
            .copied()
            .unwrap_or_else(|| vt.get(*lp_id).unwrap().carried_gbps);
        overrides.insert(*lp_id, base + rate);
    }
    let mut sum = F::zero();
    for lp in vt.lightpaths() {
        let load = overrides.get(&lp.id).copied().unwrap_or(lp.carried_gbps);
        sum = sum + delay_term(lp.capacity_gbps, load, lp.delay_s);
    }
    sum / gamma
}
