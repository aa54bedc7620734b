//! Monte-Carlo checks of the traffic models against their analytic means,
//! with batch-means standard errors.

use wdmsim_core::model::{parse_topology, LinkEntry, NodeEntry, TopologyDocument};
use wdmsim_core::traffic::{
    onoff_mean_rate, sample_mginf_path, sample_mmpp_path, sample_onoff_path, spawn_flows,
    stream_rng, HourlyProfile, MgInfParams, MmppParams, OnOffParams, RateTrace, TrafficMatrix,
    TrafficModel, TrafficModelsDoc,
};

/// Batch-means estimate: (overall mean, standard error over `batches`).
fn batch_stats(trace: &RateTrace<f64>, batches: usize) -> (f64, f64) {
    let width = trace.horizon_s / batches as f64;
    let means: Vec<f64> = (0..batches)
        .map(|i| trace.window_average(i as f64 * width, (i + 1) as f64 * width))
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

fn assert_within_3se(name: &str, mean: f64, se: f64, analytic: f64) {
    let band = 3.0 * se;
    assert!(
        (mean - analytic).abs() <= band,
        "{name}: empirical {mean} vs analytic {analytic}, +-{band}"
    );
}

#[test]
fn onoff_time_average_matches_stationary_mean() {
    let p = OnOffParams {
        peak_gbps: 1.0,
        mean_on_s: 1.0,
        mean_off_s: 1.5,
    };
    let trace = sample_onoff_path(&p, &mut stream_rng(11, 0), 40_000.0);
    let (mean, se) = batch_stats(&trace, 20);
    assert_within_3se("on-off", mean, se, onoff_mean_rate(&p));
}

#[test]
fn onoff_on_durations_average_to_mean_on() {
    let p = OnOffParams {
        peak_gbps: 1.0,
        mean_on_s: 2.0,
        mean_off_s: 1.0,
    };
    let trace = sample_onoff_path(&p, &mut stream_rng(12, 0), 60_000.0);
    // extract completed on-periods from the trace
    let mut durations = Vec::new();
    for w in trace.points.windows(2) {
        if w[0].1 > 0.0 {
            durations.push(w[1].0 - w[0].0);
        }
    }
    assert!(durations.len() > 10_000);
    let n = durations.len() as f64;
    let mean: f64 = durations.iter().sum::<f64>() / n;
    let var: f64 = durations.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert_within_3se("on-durations", mean, se, 2.0);
}

#[test]
fn mmpp_time_average_matches_n_times_source_mean() {
    let per_source = OnOffParams {
        peak_gbps: 0.5,
        mean_on_s: 1.0,
        mean_off_s: 2.0,
    };
    let p = MmppParams {
        n_sources: 8,
        per_source,
    };
    let trace = sample_mmpp_path(&p, &mut stream_rng(13, 0), 40_000.0);
    let (mean, se) = batch_stats(&trace, 20);
    assert_within_3se("mmpp", mean, se, 8.0 * onoff_mean_rate(&per_source));
}

#[test]
fn mginf_busy_average_matches_littles_law() {
    let p = MgInfParams {
        lambda_per_s: 2.0,
        pareto_alpha: 1.5,
        pareto_xmin_s: 1.0,
        unit_gbps: 0.25,
    };
    let trace = sample_mginf_path(&p, &mut stream_rng(14, 0), 40_000.0);
    let (mean, se) = batch_stats(&trace, 20);
    // lambda * E[S] busy servers, E[S] = alpha * xmin / (alpha - 1)
    let analytic = 2.0 * (1.5 * 1.0 / 0.5) * 0.25;
    assert_within_3se("mg-inf", mean, se, analytic);
}

#[test]
fn spawned_sessions_obey_littles_law() {
    // single entry, flat profile (floor = 1 makes every hour identical)
    let topo = parse_topology(&TopologyDocument {
        nodes: (0..2)
            .map(|i| NodeEntry {
                id: i,
                name: format!("n{i}"),
                x_km: 100.0 * i as f64,
                y_km: 0.0,
                population: 0,
                node_type: String::new(),
                timezone_offset_h: 0,
            })
            .collect(),
        links: vec![LinkEntry {
            id: 0,
            src: 0,
            dst: 1,
            num_wavelengths: 4,
            length_km: None,
        }],
        max_transmitters: vec![4, 4],
        max_receivers: vec![4, 4],
        lightpath_capacity_gbps: Some(10.0),
    })
    .unwrap();
    let model = OnOffParams {
        peak_gbps: 0.5,
        mean_on_s: 1.0,
        mean_off_s: 1.0,
    };
    let session_rate = onoff_mean_rate(&model);
    let demand = 2.0;
    let mut models = std::collections::BTreeMap::new();
    models.insert("audio-unitary".to_string(), TrafficModel::OnOff(model));
    let matrix = TrafficMatrix::from_parts(
        vec![vec![0.0, demand], vec![0.0, 0.0]],
        &TrafficModelsDoc {
            models,
            default_tag: Some("audio-unitary".to_string()),
            assignment: None,
        },
    )
    .unwrap();
    let profile = HourlyProfile { floor: 1.0 };
    let mean_holding = 300.0;

    let hours = 300u32;
    let mut rng = stream_rng(15, 0);
    let mut arrivals = Vec::new();
    for hour in 0..hours {
        arrivals.extend(spawn_flows(
            &matrix,
            &topo,
            &profile,
            mean_holding,
            hour,
            &mut rng,
        ));
    }

    // time-average concurrency by sweeping arrival/departure steps
    let horizon = f64::from(hours) * 3600.0;
    let mut deltas: Vec<(f64, i64)> = Vec::new();
    for a in &arrivals {
        deltas.push((a.time_s, 1));
        if a.time_s + a.holding_s < horizon {
            deltas.push((a.time_s + a.holding_s, -1));
        }
    }
    deltas.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut level = 0i64;
    let mut prev = 0.0;
    let mut per_hour = vec![0.0f64; hours as usize];
    for (t, d) in deltas {
        let (mut from, to) = (prev, t);
        while from < to {
            let hour = (from / 3600.0) as usize;
            let end = ((hour + 1) as f64 * 3600.0).min(to);
            per_hour[hour] += level as f64 * (end - from);
            from = end;
        }
        level += d;
        prev = t;
    }
    let hour_means: Vec<f64> = per_hour.iter().map(|x| x / 3600.0).collect();
    let n = hour_means.len() as f64;
    let mean = hour_means.iter().sum::<f64>() / n;
    let var = hour_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();

    // expected concurrency: arrival_rate * holding = demand / session_rate
    let expected = demand / session_rate;
    assert_within_3se("spawned concurrency", mean, se, expected);
}
