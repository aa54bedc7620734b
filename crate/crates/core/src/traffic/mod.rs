//! Multimedia traffic generation: on-off and MMPP-N audio sources, M/G/inf
//! video, the multi-hour demand profile, and the session-level embedding of
//! the demand matrix.
//!
//! Sampling always draws in `f64` and converts at the trace boundary, so a
//! given seed produces the same event sequence for every scalar
//! instantiation.

mod matrix;

pub use matrix::{load_traffic_matrix, TrafficMatrix, TrafficModelsDoc};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, Pareto};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NodeId, PhysicalTopology};
use crate::scalar::Scalar;

/// Deterministic RNG used everywhere in the simulator.
pub type SimRng = rand_chacha::ChaCha12Rng;

/// Independent, reproducible stream: identical `(seed, stream)` pairs give
/// bit-identical draws, distinct pairs give independent streams.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exponential on/off source emitting `peak_gbps` while on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnOffParams<F> {
    pub peak_gbps: F,
    pub mean_on_s: F,
    pub mean_off_s: F,
}

/// Superposition of `n_sources` independent on-off sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmppParams<F> {
    pub n_sources: usize,
    pub per_source: OnOffParams<F>,
}

/// Busy-server count of an M/G/inf queue with Pareto service times,
/// scaled by `unit_gbps`. Heavy-tailed service gives the long-range
/// dependence expected of video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MgInfParams<F> {
    pub lambda_per_s: F,
    pub pareto_alpha: F,
    pub pareto_xmin_s: F,
    pub unit_gbps: F,
}

impl<F: Scalar> OnOffParams<F> {
    pub fn validate(&self, tag: &str) -> Result<()> {
        for (name, v) in [
            ("peak_gbps", self.peak_gbps),
            ("mean_on_s", self.mean_on_s),
            ("mean_off_s", self.mean_off_s),
        ] {
            if !v.is_finite() || v <= F::zero() {
                return Err(Error::TrafficModel {
                    tag: tag.to_string(),
                    reason: format!("{name} must be positive and finite"),
                });
            }
        }
        Ok(())
    }

    /// Stationary probability of the on state.
    pub fn p_on(&self) -> F {
        self.mean_on_s / (self.mean_on_s + self.mean_off_s)
    }
}

impl<F: Scalar> MgInfParams<F> {
    pub fn validate(&self, tag: &str) -> Result<()> {
        for (name, v) in [
            ("lambda_per_s", self.lambda_per_s),
            ("pareto_xmin_s", self.pareto_xmin_s),
            ("unit_gbps", self.unit_gbps),
        ] {
            if !v.is_finite() || v <= F::zero() {
                return Err(Error::TrafficModel {
                    tag: tag.to_string(),
                    reason: format!("{name} must be positive and finite"),
                });
            }
        }
        if !self.pareto_alpha.is_finite() || self.pareto_alpha <= F::one() {
            return Err(Error::TrafficModel {
                tag: tag.to_string(),
                reason: "pareto_alpha must exceed 1 for a finite mean".into(),
            });
        }
        Ok(())
    }

    /// Mean service time, `alpha * xmin / (alpha - 1)`.
    pub fn mean_service_s(&self) -> F {
        self.pareto_alpha * self.pareto_xmin_s / (self.pareto_alpha - F::one())
    }
}

/// One traffic model, tagged in the demand-matrix sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TrafficModel<F> {
    OnOff(OnOffParams<F>),
    Mmpp(MmppParams<F>),
    MgInf(MgInfParams<F>),
}

impl<F: Scalar> TrafficModel<F> {
    pub fn validate(&self, tag: &str) -> Result<()> {
        match self {
            TrafficModel::OnOff(p) => p.validate(tag),
            TrafficModel::Mmpp(p) => {
                if p.n_sources < 1 {
                    return Err(Error::TrafficModel {
                        tag: tag.to_string(),
                        reason: "n_sources must be at least 1".into(),
                    });
                }
                p.per_source.validate(tag)
            }
            TrafficModel::MgInf(p) => p.validate(tag),
        }
    }

    /// Long-run mean rate of one session, used as its reserved rate.
    pub fn mean_rate_gbps(&self) -> F {
        match self {
            TrafficModel::OnOff(p) => onoff_mean_rate(p),
            TrafficModel::Mmpp(p) => {
                F::from_usize(p.n_sources).unwrap() * onoff_mean_rate(&p.per_source)
            }
            TrafficModel::MgInf(p) => p.lambda_per_s * p.mean_service_s() * p.unit_gbps,
        }
    }
}

/// Mean rate of an on-off source: `peak * on / (on + off)`.
pub fn onoff_mean_rate<F: Scalar>(p: &OnOffParams<F>) -> F {
    p.peak_gbps * p.p_on()
}

/// A non-negative piecewise-constant rate process over `[0, horizon_s)`.
/// `points[i]` gives the rate from its timestamp until the next point.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTrace<F> {
    pub horizon_s: F,
    /// (start time, rate), starting at t = 0, strictly increasing times.
    pub points: Vec<(F, F)>,
}

impl<F: Scalar> RateTrace<F> {
    /// Time average of the rate over the whole horizon.
    pub fn time_average(&self) -> F {
        self.window_average(F::zero(), self.horizon_s)
    }

    /// Time average over `[from, to)`.
    pub fn window_average(&self, from: F, to: F) -> F {
        assert!(to > from);
        let mut acc = F::zero();
        for (i, (start, rate)) in self.points.iter().enumerate() {
            let end = self
                .points
                .get(i + 1)
                .map(|(t, _)| *t)
                .unwrap_or(self.horizon_s);
            let lo = start.max(from);
            let hi = end.min(to);
            if hi > lo {
                acc = acc + *rate * (hi - lo);
            }
        }
        acc / (to - from)
    }

    fn from_raw(horizon_s: F, raw: Vec<(F, F)>) -> Self {
        debug_assert!(!raw.is_empty() && raw[0].0 == F::zero());
        // collapse duplicate timestamps (keep the last level) and merge
        // consecutive equal rates
        let mut points: Vec<(F, F)> = Vec::with_capacity(raw.len());
        for (t, r) in raw {
            if let Some(last) = points.last_mut() {
                if last.0 == t {
                    last.1 = r;
                    continue;
                }
                if last.1 == r {
                    continue;
                }
            }
            points.push((t, r));
        }
        Self { horizon_s, points }
    }
}

fn exp_sample<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> f64 {
    Exp::new(1.0 / mean).expect("positive rate").sample(rng)
}

/// Samples one on-off path. The initial state is drawn from the stationary
/// distribution, which with exponential holding times makes the whole trace
/// stationary.
pub fn sample_onoff_path<F: Scalar, R: Rng + ?Sized>(
    p: &OnOffParams<F>,
    rng: &mut R,
    horizon_s: F,
) -> RateTrace<F> {
    assert!(horizon_s > F::zero());
    p.validate("on-off").expect("valid on-off parameters");
    let mean_on = p.mean_on_s.to_f64_lossy();
    let mean_off = p.mean_off_s.to_f64_lossy();
    let horizon = horizon_s.to_f64_lossy();

    let mut on = rng.random::<f64>() < mean_on / (mean_on + mean_off);
    let mut t = 0.0;
    let mut raw = Vec::new();
    while t < horizon {
        let rate = if on { p.peak_gbps } else { F::zero() };
        raw.push((F::from_f64_lossy(t), rate));
        t += exp_sample(rng, if on { mean_on } else { mean_off });
        on = !on;
    }
    RateTrace::from_raw(horizon_s, raw)
}

/// Samples an MMPP-N path as the superposition of `n_sources` independent
/// on-off paths. Source `i` uses a child RNG seeded from the i-th `u64`
/// drawn off `rng`, so N = 1 reproduces the on-off law (not the bitstream).
pub fn sample_mmpp_path<F: Scalar, R: Rng + ?Sized>(
    p: &MmppParams<F>,
    rng: &mut R,
    horizon_s: F,
) -> RateTrace<F> {
    assert!(p.n_sources >= 1);
    let mut deltas: Vec<(F, i64)> = Vec::new();
    for _ in 0..p.n_sources {
        let mut child = SimRng::seed_from_u64(rng.random::<u64>());
        let path = sample_onoff_path(&p.per_source, &mut child, horizon_s);
        let mut level = 0i64;
        for (t, rate) in path.points {
            let new_level = i64::from(rate > F::zero());
            deltas.push((t, new_level - level));
            level = new_level;
        }
    }
    deltas.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("times are never NaN"));

    let mut raw = Vec::new();
    let mut count = 0i64;
    let mut idx = 0;
    while idx < deltas.len() {
        let t = deltas[idx].0;
        while idx < deltas.len() && deltas[idx].0 == t {
            count += deltas[idx].1;
            idx += 1;
        }
        raw.push((t, F::from_i64(count).unwrap() * p.per_source.peak_gbps));
    }
    if raw.is_empty() || raw[0].0 != F::zero() {
        raw.insert(0, (F::zero(), F::zero()));
    }
    RateTrace::from_raw(horizon_s, raw)
}

/// Samples an M/G/inf input-process path: Poisson arrivals each holding one
/// `unit_gbps` server for an independent Pareto duration. A warm-up of ten
/// mean service times is simulated and discarded so the reported window is
/// close to stationary.
pub fn sample_mginf_path<F: Scalar, R: Rng + ?Sized>(
    p: &MgInfParams<F>,
    rng: &mut R,
    horizon_s: F,
) -> RateTrace<F> {
    assert!(horizon_s > F::zero());
    p.validate("mg-inf").expect("valid mg-inf parameters");
    let lambda = p.lambda_per_s.to_f64_lossy();
    let alpha = p.pareto_alpha.to_f64_lossy();
    let xmin = p.pareto_xmin_s.to_f64_lossy();
    let horizon = horizon_s.to_f64_lossy();
    let warmup = 10.0 * p.mean_service_s().to_f64_lossy();
    let total = warmup + horizon;

    let service = Pareto::new(xmin, alpha).expect("valid pareto parameters");
    // signed busy-count changes inside the observation window
    let mut deltas: Vec<(f64, i64)> = Vec::new();
    let mut initial = 0i64;
    let mut t = exp_sample(rng, 1.0 / lambda);
    while t < total {
        let end = t + service.sample(rng);
        if t >= warmup {
            deltas.push((t - warmup, 1));
        } else if end > warmup {
            initial += 1;
        }
        if end < total && end > warmup {
            deltas.push((end - warmup, -1));
        }
        t += exp_sample(rng, 1.0 / lambda);
    }
    deltas.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("times are never NaN"));

    let mut raw = vec![(F::zero(), F::from_i64(initial).unwrap() * p.unit_gbps)];
    let mut count = initial;
    let mut idx = 0;
    while idx < deltas.len() {
        let t = deltas[idx].0;
        while idx < deltas.len() && deltas[idx].0 == t {
            count += deltas[idx].1;
            idx += 1;
        }
        debug_assert!(count >= 0);
        raw.push((
            F::from_f64_lossy(t),
            F::from_i64(count).unwrap() * p.unit_gbps,
        ));
    }
    RateTrace::from_raw(horizon_s, raw)
}

/// Diurnal activity profile: peaks at local hour 14, bottoms out at `floor`
/// at local hour 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourlyProfile<F> {
    pub floor: F,
}

impl<F: Scalar> Default for HourlyProfile<F> {
    fn default() -> Self {
        Self {
            floor: F::from_f64_lossy(0.1),
        }
    }
}

impl<F: Scalar> HourlyProfile<F> {
    /// Demand multiplier in `[floor, 1]` for a UTC hour and a node timezone:
    /// `floor + (1 - floor) * (0.5 + 0.5 * cos(2pi * (local - 14) / 24))`.
    pub fn factor(&self, hour_utc: u32, tz_offset_h: i32) -> F {
        assert!(hour_utc < 24, "hour must be in 0..24");
        let local = (i64::from(hour_utc) + i64::from(tz_offset_h)).rem_euclid(24) as f64;
        let phase = (local - 14.0) / 24.0 * std::f64::consts::TAU;
        let activity = F::from_f64_lossy(0.5 + 0.5 * phase.cos());
        self.floor + (F::one() - self.floor) * activity
    }
}

/// A scheduled session arrival produced by [`spawn_flows`].
#[derive(Debug, Clone, PartialEq)]
pub struct FlowArrival<F> {
    pub time_s: F,
    pub src: NodeId,
    pub dst: NodeId,
    pub reserved_gbps: F,
    pub model: String,
    pub holding_s: F,
}

/// Generates Poisson session arrivals for hour `hour` (absolute, from the
/// start of the run). Per entry, the arrival rate is chosen so the expected
/// aggregate reserved rate equals the hour's scaled demand; each session
/// reserves its model's mean rate and holds for an exponential time. The
/// hour-of-day factor follows the source node's timezone. Entries are
/// visited in row-major order off the single `rng`, so a fixed seed fixes
/// the schedule.
pub fn spawn_flows<F: Scalar, R: Rng + ?Sized>(
    matrix: &TrafficMatrix<F>,
    topo: &PhysicalTopology<F>,
    profile: &HourlyProfile<F>,
    mean_holding_s: F,
    hour: u32,
    rng: &mut R,
) -> Vec<FlowArrival<F>> {
    assert!(mean_holding_s > F::zero());
    let n = matrix.num_nodes();
    assert_eq!(n, topo.num_nodes(), "matrix and topology disagree on N");
    let hour_start = f64::from(hour) * 3600.0;
    let hour_end = hour_start + 3600.0;
    let holding_mean = mean_holding_s.to_f64_lossy();

    let mut arrivals = Vec::new();
    for s in 0..n {
        for d in 0..n {
            let demand = matrix.demand_gbps(s, d);
            if demand <= F::zero() {
                continue;
            }
            let tag = matrix
                .model_tag(s, d)
                .expect("validated matrix has tags wherever demand is positive");
            let session_rate = matrix.model(tag).unwrap().mean_rate_gbps();
            let factor = profile.factor(hour % 24, topo.node(NodeId(s)).timezone_offset_h);
            let arrival_rate = (factor * demand / (mean_holding_s * session_rate)).to_f64_lossy();
            // a zero-floor profile can silence an entry for the whole hour
            if arrival_rate <= 0.0 {
                continue;
            }

            let mut t = hour_start + exp_sample(rng, 1.0 / arrival_rate);
            while t < hour_end {
                arrivals.push(FlowArrival {
                    time_s: F::from_f64_lossy(t),
                    src: NodeId(s),
                    dst: NodeId(d),
                    reserved_gbps: session_rate,
                    model: tag.to_string(),
                    holding_s: F::from_f64_lossy(exp_sample(rng, holding_mean)),
                });
                t += exp_sample(rng, 1.0 / arrival_rate);
            }
        }
    }
    arrivals
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onoff(peak: f64, on: f64, off: f64) -> OnOffParams<f64> {
        OnOffParams {
            peak_gbps: peak,
            mean_on_s: on,
            mean_off_s: off,
        }
    }

    #[test]
    fn mean_rate_symmetric() {
        assert_eq!(onoff_mean_rate(&onoff(1.0, 1.0, 1.0)), 0.5);
    }

    #[test]
    fn mean_rate_weighted() {
        assert_eq!(onoff_mean_rate(&onoff(2.0, 3.0, 1.0)), 1.5);
    }

    #[test]
    fn onoff_replay_is_bit_identical() {
        let p = onoff(1.0, 2.0, 3.0);
        let a = sample_onoff_path(&p, &mut stream_rng(42, 0), 1000.0);
        let b = sample_onoff_path(&p, &mut stream_rng(42, 0), 1000.0);
        assert_eq!(a, b);
    }

    #[test]
    fn onoff_degenerate_off_is_nearly_constant_peak() {
        let p = onoff(1.0, 1.0, 1e-12);
        let trace = sample_onoff_path(&p, &mut stream_rng(7, 0), 100.0);
        assert!((trace.time_average() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mmpp_rate_support_is_multiples_of_peak() {
        let p = MmppParams {
            n_sources: 5,
            per_source: onoff(0.5, 1.0, 2.0),
        };
        let trace = sample_mmpp_path(&p, &mut stream_rng(3, 0), 500.0);
        for (_, rate) in &trace.points {
            let k = rate / 0.5;
            assert!(
                (k - k.round()).abs() < 1e-12 && (0.0..=5.0).contains(&k),
                "rate {rate} is not a multiple of peak"
            );
        }
    }

    #[test]
    fn mginf_replay_is_bit_identical() {
        let p = MgInfParams {
            lambda_per_s: 1.0,
            pareto_alpha: 1.5,
            pareto_xmin_s: 1.0,
            unit_gbps: 0.2,
        };
        let a = sample_mginf_path(&p, &mut stream_rng(5, 1), 200.0);
        let b = sample_mginf_path(&p, &mut stream_rng(5, 1), 200.0);
        assert_eq!(a, b);
    }

    #[test]
    fn mginf_vanishing_lambda_gives_zero_rate() {
        let p = MgInfParams {
            lambda_per_s: 1e-9,
            pareto_alpha: 1.5,
            pareto_xmin_s: 1.0,
            unit_gbps: 0.2,
        };
        let trace = sample_mginf_path(&p, &mut stream_rng(5, 0), 1000.0);
        assert_eq!(trace.time_average(), 0.0);
    }

    #[test]
    fn hourly_factor_peak_and_trough() {
        let profile = HourlyProfile::<f64>::default();
        assert_eq!(profile.factor(14, 0), 1.0);
        assert_eq!(profile.factor(2, 0), 0.1);
        // timezone shifts the local clock: 12 UTC at +2 is local 14
        assert_eq!(profile.factor(12, 2), 1.0);
    }

    #[test]
    fn hourly_factor_bounded_and_periodic() {
        let profile = HourlyProfile::<f64>::default();
        for hour in 0..24u32 {
            for tz in -12..=14i32 {
                let f = profile.factor(hour, tz);
                assert!((0.1..=1.0).contains(&f), "factor {f} out of range");
                assert_eq!(f, profile.factor((hour + 24) % 24, tz));
            }
        }
    }

    #[test]
    fn stream_rng_is_stable_and_streams_differ() {
        let mut a = stream_rng(9, 4);
        let mut b = stream_rng(9, 4);
        let mut c = stream_rng(9, 5);
        let xa: u64 = a.random();
        assert_eq!(xa, b.random::<u64>());
        assert_ne!(xa, c.random::<u64>());
    }
}
