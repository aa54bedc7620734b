//! Deterministic event loop tying generation, admission, flow deviation and
//! metrics together.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::admission::{AdmissionDecision, BlockReason, NetworkState, StageAttempt};
use crate::error::{Error, Result};
use crate::fda::{average_packet_delay, fda_reroute};
use crate::model::{FlowId, PhysicalTopology};
use crate::scalar::Scalar;
use crate::traffic::{stream_rng, spawn_flows, FlowArrival, HourlyProfile, TrafficMatrix};

/// What happens at a point in simulated time.
#[derive(Debug, Clone)]
pub enum EventKind<F> {
    FlowArrival { id: FlowId, arrival: FlowArrival<F> },
    FlowDeparture { id: FlowId },
    HourBoundary { hour: u32 },
    FdaTrigger,
}

#[derive(Debug, Clone)]
struct ScheduledEvent<F> {
    time_s: F,
    /// Insertion order; ties in time resolve first-scheduled-first.
    seq: u64,
    kind: EventKind<F>,
}

impl<F: Scalar> PartialEq for ScheduledEvent<F> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl<F: Scalar> Eq for ScheduledEvent<F> {}
impl<F: Scalar> PartialOrd for ScheduledEvent<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Scalar> Ord for ScheduledEvent<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap, we want earliest first
        other
            .time_s
            .partial_cmp(&self.time_s)
            .expect("event times are never NaN")
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Deterministic (time, insertion-seq) priority queue.
#[derive(Debug, Default)]
struct EventQueue<F: Scalar> {
    heap: BinaryHeap<ScheduledEvent<F>>,
    next_seq: u64,
}

impl<F: Scalar> EventQueue<F> {
    fn push(&mut self, time_s: F, kind: EventKind<F>) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(ScheduledEvent { time_s, seq, kind });
    }

    fn pop(&mut self) -> Option<ScheduledEvent<F>> {
        self.heap.pop()
    }
}

/// Trace verbosity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    /// Collect unless the event count estimate exceeds one million.
    Auto,
    /// Always collect.
    Force,
    /// Never collect.
    Off,
}

const TRACE_AUTO_LIMIT: u64 = 1_000_000;

/// Run parameters; every default matches the shipped configuration files.
#[derive(Debug, Clone, Serialize)]
pub struct SimOptions<F> {
    pub hours: u32,
    /// Physical route candidates per lightpath establishment.
    pub k: usize,
    pub seed: u64,
    pub mean_holding_s: F,
    pub hourly_floor: F,
    pub fda_enabled: bool,
    pub fda_tol: F,
    pub fda_max_passes: usize,
    pub fda_period_hours: u32,
    pub trace: TraceMode,
    /// Full recompute audit cadence in events; fast audits run every event.
    pub full_audit_every: u64,
}

impl<F: Scalar> Default for SimOptions<F> {
    fn default() -> Self {
        Self {
            hours: 24,
            k: 3,
            seed: 0,
            mean_holding_s: F::from_f64_lossy(300.0),
            hourly_floor: F::from_f64_lossy(0.1),
            fda_enabled: true,
            fda_tol: F::from_f64_lossy(1e-4),
            fda_max_passes: 10,
            fda_period_hours: 1,
            trace: TraceMode::Auto,
            full_audit_every: 10_000,
        }
    }
}

/// Flow-deviation digest attached to the hour it ran in.
#[derive(Debug, Clone, Serialize)]
pub struct FdaSummary<F> {
    pub passes: usize,
    pub moves: usize,
    pub delay_before_s: Option<F>,
    pub delay_after_s: Option<F>,
}

/// Per-hour statistics emitted at each hour boundary, before flow deviation
/// runs for that boundary.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsSnapshot<F> {
    pub hour: u32,
    pub offered_flows: u64,
    pub admitted_flows: u64,
    pub blocked_flows: u64,
    /// blocked / offered; 0 when nothing was offered.
    pub blocking_ratio: F,
    pub active_lightpaths: usize,
    /// Occupied (fiber, wavelength) pairs over all pairs.
    pub wavelength_utilization: F,
    /// None when no traffic is carried.
    pub avg_packet_delay_s: Option<F>,
    /// None when no flows are active.
    pub mean_virtual_hops: Option<F>,
    pub fda: Option<FdaSummary<F>>,
}

/// One newline-delimited JSON record of the event/decision trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord<F> {
    pub time_s: F,
    pub seq: u64,
    pub kind: &'static str,
    pub detail: TraceDetail<F>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum TraceDetail<F> {
    Admission {
        flow_id: u64,
        src: usize,
        dst: usize,
        reserved_gbps: F,
        decision: AdmissionDecision,
        stage: u8,
        route: Vec<u64>,
        new_lightpath: Option<u64>,
        blocked: Option<BlockReason>,
        attempts: Vec<StageAttempt>,
    },
    Departure {
        flow_id: u64,
        reclaimed: Vec<u64>,
    },
    Hour {
        hour: u32,
        offered: u64,
        admitted: u64,
        blocked: u64,
    },
    Fda {
        passes: usize,
        moves: usize,
        delay_before_s: Option<F>,
        delay_after_s: Option<F>,
    },
}

/// One routing-table row per active flow.
#[derive(Debug, Clone, Serialize)]
pub struct RoutingRow<F> {
    pub flow_id: u64,
    pub src: usize,
    pub dst: usize,
    pub reserved_gbps: F,
    pub virtual_hops: usize,
    pub segments: Vec<RouteSegment>,
}

/// One lightpath hop of a routed flow.
#[derive(Debug, Clone, Serialize)]
pub struct RouteSegment {
    pub lightpath: u64,
    pub wavelength: usize,
    pub links: Vec<usize>,
}

/// Cumulative admission counters.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Totals {
    pub offered: u64,
    pub admitted: u64,
    pub blocked: u64,
}

/// Everything a run produces.
#[derive(Debug)]
pub struct SimOutput<F: Scalar> {
    pub snapshots: Vec<MetricsSnapshot<F>>,
    pub state: NetworkState<F>,
    pub routing_table: Vec<RoutingRow<F>>,
    pub trace: Vec<TraceRecord<F>>,
    pub trace_enabled: bool,
    pub events_processed: u64,
    pub totals: Totals,
}

/// One routing-table row per active flow, ascending by flow id, straight
/// from the live state.
pub fn routing_table<F: Scalar>(state: &NetworkState<F>) -> Vec<RoutingRow<F>> {
    state
        .flows()
        .values()
        .map(|flow| {
            let route = flow.route.as_ref().expect("active flows carry a route");
            RoutingRow {
                flow_id: flow.id.0,
                src: flow.src.0,
                dst: flow.dst.0,
                reserved_gbps: flow.reserved_gbps,
                virtual_hops: route.virtual_hops,
                segments: route
                    .lightpath_ids
                    .iter()
                    .map(|lp_id| {
                        let lp = state.virtual_topology().get(*lp_id).unwrap();
                        RouteSegment {
                            lightpath: lp.id.0,
                            wavelength: lp.wavelength,
                            links: lp.route.iter().map(|l| l.0).collect(),
                        }
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Runs the full simulation: pre-generates every arrival, then processes
/// events in (time, insertion-seq) order for `opts.hours` simulated hours.
/// Output is a pure function of the inputs.
pub fn run<F: Scalar>(
    topo: &PhysicalTopology<F>,
    matrix: &TrafficMatrix<F>,
    opts: &SimOptions<F>,
) -> Result<SimOutput<F>> {
    assert!(opts.hours >= 1, "simulation needs at least one hour");
    assert!(opts.k >= 1, "k must be at least 1");
    if matrix.num_nodes() != topo.num_nodes() {
        return Err(Error::TrafficMatrix(format!(
            "matrix is {0} x {0} but the topology has {1} nodes",
            matrix.num_nodes(),
            topo.num_nodes()
        )));
    }

    let horizon_s = F::from_u32(opts.hours).unwrap() * F::from_f64_lossy(3600.0);
    let profile = HourlyProfile {
        floor: opts.hourly_floor,
    };

    // All arrivals up front, chronologically, with flow ids in time order.
    let mut rng = stream_rng(opts.seed, 0);
    let mut arrivals: Vec<FlowArrival<F>> = Vec::new();
    for hour in 0..opts.hours {
        arrivals.extend(spawn_flows(
            matrix,
            topo,
            &profile,
            opts.mean_holding_s,
            hour,
            &mut rng,
        ));
    }
    arrivals.sort_by(|a, b| {
        a.time_s
            .partial_cmp(&b.time_s)
            .expect("arrival times are never NaN")
    });

    let estimated_events =
        2 * arrivals.len() as u64 + u64::from(opts.hours) * 2 + 2;
    let trace_enabled = match opts.trace {
        TraceMode::Force => true,
        TraceMode::Off => false,
        TraceMode::Auto => estimated_events <= TRACE_AUTO_LIMIT,
    };

    let mut queue = EventQueue::default();
    for hour in 0..opts.hours {
        let t = F::from_u32(hour + 1).unwrap() * F::from_f64_lossy(3600.0);
        queue.push(t, EventKind::HourBoundary { hour });
    }
    if opts.fda_enabled {
        assert!(opts.fda_period_hours >= 1, "FDA period must be at least 1h");
        let mut j = opts.fda_period_hours;
        while j <= opts.hours {
            let t = F::from_u32(j).unwrap() * F::from_f64_lossy(3600.0);
            queue.push(t, EventKind::FdaTrigger);
            j += opts.fda_period_hours;
        }
    }
    for (i, arrival) in arrivals.into_iter().enumerate() {
        let time_s = arrival.time_s;
        queue.push(
            time_s,
            EventKind::FlowArrival {
                id: FlowId(i as u64),
                arrival,
            },
        );
    }

    let mut state = NetworkState::new(topo.clone());
    let total_slots = topo.total_wavelength_slots();
    let mut snapshots: Vec<MetricsSnapshot<F>> = Vec::with_capacity(opts.hours as usize);
    let mut trace: Vec<TraceRecord<F>> = Vec::new();
    let mut totals = Totals::default();
    let (mut hour_offered, mut hour_admitted, mut hour_blocked) = (0u64, 0u64, 0u64);
    let mut events_processed = 0u64;
    let mut last_key: Option<(F, u64)> = None;

    while let Some(event) = queue.pop() {
        if event.time_s > horizon_s {
            break;
        }
        // causality: strictly increasing (time, seq)
        let key = (event.time_s, event.seq);
        if let Some(prev) = last_key {
            assert!(
                key.0 > prev.0 || (key.0 == prev.0 && key.1 > prev.1),
                "event popped out of order"
            );
        }
        last_key = Some(key);
        events_processed += 1;

        match event.kind {
            EventKind::FlowArrival { id, arrival } => {
                totals.offered += 1;
                hour_offered += 1;
                let outcome = state.admit_flow(
                    id,
                    arrival.src,
                    arrival.dst,
                    arrival.reserved_gbps,
                    &arrival.model,
                    opts.k,
                );
                if outcome.decision == AdmissionDecision::Blocked {
                    totals.blocked += 1;
                    hour_blocked += 1;
                } else {
                    totals.admitted += 1;
                    hour_admitted += 1;
                    queue.push(
                        event.time_s + arrival.holding_s,
                        EventKind::FlowDeparture { id },
                    );
                }
                if trace_enabled {
                    trace.push(TraceRecord {
                        time_s: event.time_s,
                        seq: event.seq,
                        kind: "flow_arrival",
                        detail: TraceDetail::Admission {
                            flow_id: id.0,
                            src: arrival.src.0,
                            dst: arrival.dst.0,
                            reserved_gbps: arrival.reserved_gbps,
                            decision: outcome.decision,
                            stage: outcome.decision.stage(),
                            route: outcome
                                .route
                                .as_ref()
                                .map(|r| r.lightpath_ids.iter().map(|l| l.0).collect())
                                .unwrap_or_default(),
                            new_lightpath: outcome.new_lightpath.map(|l| l.0),
                            blocked: outcome.blocked,
                            attempts: outcome.attempts.clone(),
                        },
                    });
                }
            }
            EventKind::FlowDeparture { id } => {
                let reclaimed = state.terminate_flow(id)?;
                if trace_enabled {
                    trace.push(TraceRecord {
                        time_s: event.time_s,
                        seq: event.seq,
                        kind: "flow_departure",
                        detail: TraceDetail::Departure {
                            flow_id: id.0,
                            reclaimed: reclaimed.iter().map(|l| l.0).collect(),
                        },
                    });
                }
            }
            EventKind::HourBoundary { hour } => {
                let snapshot = make_snapshot(
                    &state,
                    hour,
                    hour_offered,
                    hour_admitted,
                    hour_blocked,
                    total_slots,
                );
                if trace_enabled {
                    trace.push(TraceRecord {
                        time_s: event.time_s,
                        seq: event.seq,
                        kind: "hour_boundary",
                        detail: TraceDetail::Hour {
                            hour,
                            offered: hour_offered,
                            admitted: hour_admitted,
                            blocked: hour_blocked,
                        },
                    });
                }
                snapshots.push(snapshot);
                hour_offered = 0;
                hour_admitted = 0;
                hour_blocked = 0;
            }
            EventKind::FdaTrigger => {
                let report = fda_reroute(&mut state, opts.fda_tol, opts.fda_max_passes);
                let summary = FdaSummary {
                    passes: report.passes,
                    moves: report.moves.len(),
                    delay_before_s: report.t_before,
                    delay_after_s: report.t_after,
                };
                if trace_enabled {
                    trace.push(TraceRecord {
                        time_s: event.time_s,
                        seq: event.seq,
                        kind: "fda",
                        detail: TraceDetail::Fda {
                            passes: summary.passes,
                            moves: summary.moves,
                            delay_before_s: summary.delay_before_s,
                            delay_after_s: summary.delay_after_s,
                        },
                    });
                }
                if let Some(row) = snapshots.last_mut() {
                    row.fda = Some(summary);
                }
            }
        }

        state.fast_audit()?;
        if opts.full_audit_every > 0 && events_processed.is_multiple_of(opts.full_audit_every) {
            state.full_audit()?;
        }
    }

    state.full_audit()?;
    let routing_table = routing_table(&state);
    Ok(SimOutput {
        snapshots,
        state,
        routing_table,
        trace,
        trace_enabled,
        events_processed,
        totals,
    })
}

fn make_snapshot<F: Scalar>(
    state: &NetworkState<F>,
    hour: u32,
    offered: u64,
    admitted: u64,
    blocked: u64,
    total_slots: usize,
) -> MetricsSnapshot<F> {
    let blocking_ratio = if offered > 0 {
        F::from_u64(blocked).unwrap() / F::from_u64(offered).unwrap()
    } else {
        F::zero()
    };
    let wavelength_utilization = if total_slots > 0 {
        F::from_usize(state.virtual_topology().occupied_slots()).unwrap()
            / F::from_usize(total_slots).unwrap()
    } else {
        F::zero()
    };
    let rates = state.flow_rates();
    let avg_packet_delay_s = average_packet_delay(state.virtual_topology(), &rates).ok();
    let mean_virtual_hops = if state.flows().is_empty() {
        None
    } else {
        let hops: usize = state
            .flows()
            .values()
            .map(|f| f.route.as_ref().unwrap().virtual_hops)
            .sum();
        Some(F::from_usize(hops).unwrap() / F::from_usize(state.flows().len()).unwrap())
    };
    MetricsSnapshot {
        hour,
        offered_flows: offered,
        admitted_flows: admitted,
        blocked_flows: blocked,
        blocking_ratio,
        active_lightpaths: state.virtual_topology().len(),
        wavelength_utilization,
        avg_packet_delay_s,
        mean_virtual_hops,
        fda: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_topology, LinkEntry, NodeEntry, TopologyDocument};
    use crate::traffic::{OnOffParams, TrafficModel, TrafficModelsDoc};
    use std::collections::BTreeMap;

    fn pair_topology() -> PhysicalTopology<f64> {
        parse_topology(&TopologyDocument {
            nodes: (0..2)
                .map(|i| NodeEntry {
                    id: i,
                    name: format!("n{i}"),
                    x_km: 100.0 * i as f64,
                    y_km: 0.0,
                    population: 1000,
                    node_type: "core".into(),
                    timezone_offset_h: 0,
                })
                .collect(),
            links: vec![
                LinkEntry {
                    id: 0,
                    src: 0,
                    dst: 1,
                    num_wavelengths: 8,
                    length_km: None,
                },
                LinkEntry {
                    id: 1,
                    src: 1,
                    dst: 0,
                    num_wavelengths: 8,
                    length_km: None,
                },
            ],
            max_transmitters: vec![8, 8],
            max_receivers: vec![8, 8],
            lightpath_capacity_gbps: Some(10.0),
        })
        .unwrap()
    }

    fn matrix(demand: f64) -> TrafficMatrix<f64> {
        let mut models = BTreeMap::new();
        models.insert(
            "audio-unitary".to_string(),
            TrafficModel::OnOff(OnOffParams {
                peak_gbps: 0.5,
                mean_on_s: 1.0,
                mean_off_s: 1.0,
            }),
        );
        TrafficMatrix::from_parts(
            vec![vec![0.0, demand], vec![0.0, 0.0]],
            &TrafficModelsDoc {
                models,
                default_tag: Some("audio-unitary".to_string()),
                assignment: None,
            },
        )
        .unwrap()
    }

    fn opts(hours: u32, seed: u64) -> SimOptions<f64> {
        SimOptions {
            hours,
            seed,
            mean_holding_s: 120.0,
            ..SimOptions::default()
        }
    }

    #[test]
    fn null_run_stays_empty() {
        let topo = pair_topology();
        let out = run(&topo, &matrix(0.0), &opts(3, 1)).unwrap();
        assert_eq!(out.snapshots.len(), 3);
        for snap in &out.snapshots {
            assert_eq!(snap.offered_flows, 0);
            assert!(snap.avg_packet_delay_s.is_none());
        }
        assert!(out.state.virtual_topology().is_empty());
        assert!(out.routing_table.is_empty());
    }

    #[test]
    fn same_seed_reproduces_run() {
        let topo = pair_topology();
        let a = run(&topo, &matrix(1.0), &opts(2, 42)).unwrap();
        let b = run(&topo, &matrix(1.0), &opts(2, 42)).unwrap();
        assert_eq!(a.events_processed, b.events_processed);
        assert_eq!(
            serde_json::to_string(&a.snapshots).unwrap(),
            serde_json::to_string(&b.snapshots).unwrap()
        );
        assert_eq!(
            serde_json::to_string(&a.routing_table).unwrap(),
            serde_json::to_string(&b.routing_table).unwrap()
        );
    }

    #[test]
    fn single_pair_below_capacity_never_blocks() {
        let topo = pair_topology();
        // 1 Gbps demand against a 10 Gbps lightpath: stages 1/2 always fit
        let out = run(&topo, &matrix(1.0), &opts(4, 7)).unwrap();
        assert!(out.totals.offered > 0);
        for snap in &out.snapshots {
            assert_eq!(snap.blocked_flows, 0);
            assert_eq!(
                snap.offered_flows,
                snap.admitted_flows + snap.blocked_flows
            );
        }
    }

    #[test]
    fn routing_table_counts_active_flows() {
        let topo = pair_topology();
        let out = run(&topo, &matrix(1.0), &opts(2, 11)).unwrap();
        assert_eq!(out.routing_table.len(), out.state.flows().len());
    }
}
