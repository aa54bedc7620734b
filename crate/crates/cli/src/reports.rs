//! Report emission: the four run artifacts plus the optional event trace.
//! Every file is written to a temporary sibling and renamed into place, so a
//! failed run never leaves a partial file behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use wdmsim_core::report::VirtualTopologyDocument;
use wdmsim_core::sim::MetricsSnapshot;
use wdmsim_core::SimOutput;

use crate::config::RunConfig;

/// Summary document: seed and full effective config for reproducibility,
/// plus run totals. `generated_unix_s` is the only non-deterministic field
/// in any artifact.
#[derive(Debug, Serialize)]
struct Summary<'a> {
    seed: u64,
    config: &'a RunConfig,
    totals: SummaryTotals,
    generated_unix_s: u64,
}

#[derive(Debug, Serialize)]
struct SummaryTotals {
    offered_flows: u64,
    admitted_flows: u64,
    blocked_flows: u64,
    blocking_ratio: f64,
    events_processed: u64,
    final_active_flows: usize,
    final_active_lightpaths: usize,
    final_avg_packet_delay_s: Option<f64>,
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    let target = dir.join(name);
    tmp.persist(&target)
        .with_context(|| format!("renaming into {}", target.display()))?;
    Ok(target)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metrics_csv(snapshots: &[MetricsSnapshot<f64>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "hour",
        "offered_flows",
        "admitted_flows",
        "blocked_flows",
        "blocking_ratio",
        "active_lightpaths",
        "wavelength_utilization",
        "avg_packet_delay_s",
        "mean_virtual_hops",
        "fda_passes",
        "fda_moves",
        "fda_delay_before_s",
        "fda_delay_after_s",
    ])?;
    for s in snapshots {
        w.write_record([
            s.hour.to_string(),
            s.offered_flows.to_string(),
            s.admitted_flows.to_string(),
            s.blocked_flows.to_string(),
            s.blocking_ratio.to_string(),
            s.active_lightpaths.to_string(),
            s.wavelength_utilization.to_string(),
            fmt_opt(s.avg_packet_delay_s),
            fmt_opt(s.mean_virtual_hops),
            s.fda.as_ref().map(|f| f.passes.to_string()).unwrap_or_default(),
            s.fda.as_ref().map(|f| f.moves.to_string()).unwrap_or_default(),
            s.fda
                .as_ref()
                .map(|f| fmt_opt(f.delay_before_s))
                .unwrap_or_default(),
            s.fda
                .as_ref()
                .map(|f| fmt_opt(f.delay_after_s))
                .unwrap_or_default(),
        ])?;
    }
    Ok(w.into_inner()?)
}

fn routing_csv(out: &SimOutput) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "flow_id",
        "src",
        "dst",
        "reserved_gbps",
        "virtual_hops",
        "lightpaths",
        "wavelengths",
        "physical_links",
    ])?;
    for row in &out.routing_table {
        let lightpaths = row
            .segments
            .iter()
            .map(|s| s.lightpath.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let wavelengths = row
            .segments
            .iter()
            .map(|s| s.wavelength.to_string())
            .collect::<Vec<_>>()
            .join(";");
        let links = row
            .segments
            .iter()
            .map(|s| {
                s.links
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(">")
            })
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            row.flow_id.to_string(),
            row.src.to_string(),
            row.dst.to_string(),
            row.reserved_gbps.to_string(),
            row.virtual_hops.to_string(),
            lightpaths,
            wavelengths,
            links,
        ])?;
    }
    Ok(w.into_inner()?)
}

/// Writes `virtual_topology.json`, `routing_table.csv`, `hourly_metrics.csv`
/// and `summary.json` (plus `events.ndjson` when tracing) into `out_dir`,
/// returning the paths written.
pub fn emit_reports(out: &SimOutput, config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut written = Vec::new();

    let vt_doc = VirtualTopologyDocument::from_state(&out.state);
    let mut vt_json = serde_json::to_vec_pretty(&vt_doc)?;
    vt_json.push(b'\n');
    written.push(write_atomic(out_dir, "virtual_topology.json", &vt_json)?);

    written.push(write_atomic(
        out_dir,
        "routing_table.csv",
        &routing_csv(out)?,
    )?);
    written.push(write_atomic(
        out_dir,
        "hourly_metrics.csv",
        &metrics_csv(&out.snapshots)?,
    )?);

    let delay = out
        .snapshots
        .last()
        .and_then(|s| s.avg_packet_delay_s)
        .or_else(|| {
            wdmsim_core::fda::average_packet_delay(
                out.state.virtual_topology(),
                &out.state.flow_rates(),
            )
            .ok()
        });
    let summary = Summary {
        seed: config.seed,
        config,
        totals: SummaryTotals {
            offered_flows: out.totals.offered,
            admitted_flows: out.totals.admitted,
            blocked_flows: out.totals.blocked,
            blocking_ratio: if out.totals.offered > 0 {
                out.totals.blocked as f64 / out.totals.offered as f64
            } else {
                0.0
            },
            events_processed: out.events_processed,
            final_active_flows: out.state.flows().len(),
            final_active_lightpaths: out.state.virtual_topology().len(),
            final_avg_packet_delay_s: delay,
        },
        generated_unix_s: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    };
    let mut summary_json = serde_json::to_vec_pretty(&summary)?;
    summary_json.push(b'\n');
    written.push(write_atomic(out_dir, "summary.json", &summary_json)?);

    if out.trace_enabled {
        let mut buf = Vec::new();
        for record in &out.trace {
            serde_json::to_writer(&mut buf, record)?;
            buf.push(b'\n');
        }
        written.push(write_atomic(out_dir, "events.ndjson", &buf)?);
    }
    Ok(written)
}
