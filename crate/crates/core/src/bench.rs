//! Operation counts, timings and wire cost of a full run.
//!
//! Each iteration provisions a fresh deployment from `seed + i`, registers
//! one user and one sensor, and runs one handshake. Counts come from
//! [`crate::ops`] and must be identical across iterations.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::algebra::PairingBackend;
use crate::deployment::{Deployment, DeploymentConfig, DeploymentError};
use crate::hash::MAC_LEN;
use crate::ops::{self, Entity, OpCounter, OpCounts, Phase};
use crate::protocol::SensorConfig;
use crate::wire::{Fault, HEADER_LEN};

pub const SCHEMA_VERSION: u32 = 1;

/// Published per-entity counts.
pub const PUBLISHED_USER: OpCounts = OpCounts::new(0, 3, 0, 4);
pub const PUBLISHED_GATEWAY: OpCounts = OpCounts::new(0, 2, 0, 2);
pub const PUBLISHED_SENSOR: OpCounts = OpCounts::new(3, 4, 0, 6);
/// Published communication cost of one handshake.
pub const PUBLISHED_WIRE_BITS: u64 = 2012;
/// Published total computation time, platform unknown.
pub const PUBLISHED_TOTAL_MS: f64 = 16.913;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Deployment(#[from] DeploymentError),
    #[error("iteration {0}: handshake did not establish matching keys")]
    HandshakeFailed(usize),
    #[error("at least one iteration is required")]
    NoIterations,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScopeCounts {
    pub entity: Entity,
    pub phase: Phase,
    pub counts: OpCounts,
    pub notation: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub entity: Entity,
    /// Which scopes make up `measured`.
    pub basis: String,
    pub measured: OpCounts,
    pub measured_notation: String,
    pub published_notation: String,
    pub matches: bool,
    /// `measured - published`; empty when they match.
    pub delta: String,
}

impl Comparison {
    fn new(entity: Entity, basis: &str, measured: OpCounts, published: OpCounts) -> Self {
        let measured = measured.without_macs();
        Comparison {
            entity,
            basis: basis.to_string(),
            measured,
            measured_notation: measured.notation(),
            published_notation: published.notation(),
            matches: measured == published,
            delta: measured.delta_notation(&published),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TimingStats {
    pub samples: usize,
    pub mean_ms: f64,
    /// Sample variance (`n - 1` denominator).
    pub variance_ms2: f64,
    pub stddev_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl TimingStats {
    pub fn from_samples(samples: &[Duration]) -> Self {
        if samples.is_empty() {
            return TimingStats::default();
        }
        let ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        let n = ms.len() as f64;
        let mean = ms.iter().sum::<f64>() / n;
        let variance = if ms.len() > 1 {
            ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        TimingStats {
            samples: ms.len(),
            mean_ms: mean,
            variance_ms2: variance,
            stddev_ms: variance.sqrt(),
            min_ms: ms.iter().copied().fold(f64::INFINITY, f64::min),
            max_ms: ms.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub setup: TimingStats,
    /// One user and one sensor.
    pub registration: TimingStats,
    pub user_begin: TimingStats,
    pub sensor_handle: TimingStats,
    pub user_complete: TimingStats,
    pub handshake_total: TimingStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct WireCost {
    pub header_bytes: usize,
    pub point_bytes: usize,
    pub scalar_bytes: usize,
    pub payload_bytes: usize,
    pub timestamp_bytes: usize,
    pub mac_bytes: usize,
    pub service_request_bytes_analytic: usize,
    pub service_request_bytes_measured: usize,
    pub mac_confirm_bytes_analytic: usize,
    pub mac_confirm_bytes_measured: usize,
    pub analytic_matches_measured: bool,
    pub total_bytes: usize,
    pub total_bits: u64,
    pub published_bits: u64,
    /// Point width if only one source group were sent.
    pub compact_point_bytes: usize,
    /// Field sum without headers using `compact_point_bytes`.
    pub compact_total_bits: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub backend: String,
    pub group_order: String,
    pub security_bits: u32,
    pub seed: u64,
    pub iterations: usize,
    pub payload_bits: usize,
    pub counts: Vec<ScopeCounts>,
    pub entity_totals: BTreeMap<Entity, OpCounts>,
    /// Work done outside any party scope.
    pub unscoped: OpCounts,
    pub total: OpCounts,
    /// Every iteration produced the same counts.
    pub counts_stable: bool,
    pub comparisons: Vec<Comparison>,
    pub timings: Timings,
    pub published_total_ms: f64,
    pub wire: WireCost,
}

impl BenchReport {
    pub fn comparison(&self, entity: Entity) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.entity == entity)
    }

    pub fn scope(&self, entity: Entity, phase: Phase) -> OpCounts {
        self.counts
            .iter()
            .find(|s| s.entity == entity && s.phase == phase)
            .map_or_else(OpCounts::default, |s| s.counts)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "backend {} ({}-bit), seed {}, {} iterations, n = {} bits",
            self.backend, self.security_bits, self.seed, self.iterations, self.payload_bits
        );
        let _ = writeln!(
            s,
            "operation counts (counts stable: {}):",
            self.counts_stable
        );
        for c in &self.counts {
            let _ = writeln!(
                s,
                "  {:<8} {:<15} {:<12} mac {}",
                c.entity.to_string(),
                c.phase.to_string(),
                c.notation,
                c.counts.macs
            );
        }
        let _ = writeln!(s, "against the published table:");
        for c in &self.comparisons {
            let verdict = if c.matches {
                "match".to_string()
            } else {
                format!("DELTA {}", c.delta)
            };
            let _ = writeln!(
                s,
                "  {:<8} measured {:<12} published {:<12} {}  [{}]",
                c.entity.to_string(),
                c.measured_notation,
                c.published_notation,
                verdict,
                c.basis
            );
        }
        let _ = writeln!(s, "timings (ms):");
        let t = &self.timings;
        for (name, st) in [
            ("setup", &t.setup),
            ("registration", &t.registration),
            ("user-begin", &t.user_begin),
            ("sensor-handle", &t.sensor_handle),
            ("user-complete", &t.user_complete),
            ("handshake", &t.handshake_total),
        ] {
            let _ = writeln!(
                s,
                "  {:<14} mean {:>9.4} var {:>10.6} sd {:>8.4} min {:>9.4} max {:>9.4}",
                name, st.mean_ms, st.variance_ms2, st.stddev_ms, st.min_ms, st.max_ms
            );
        }
        let _ = writeln!(
            s,
            "  published total {} ms (platform unknown)",
            self.published_total_ms
        );
        let w = &self.wire;
        let _ = writeln!(
            s,
            "wire: request {} B + confirm {} B = {} bits (analytic match: {}), published {} bits",
            w.service_request_bytes_measured,
            w.mac_confirm_bytes_measured,
            w.total_bits,
            w.analytic_matches_measured,
            w.published_bits
        );
        let _ = writeln!(
            s,
            "  point {} B, scalar {} B, payload {} B, timestamp {} B, mac {} B, header {} B",
            w.point_bytes,
            w.scalar_bytes,
            w.payload_bytes,
            w.timestamp_bytes,
            w.mac_bytes,
            w.header_bytes
        );
        let _ = writeln!(
            s,
            "  with {}-byte points and no headers: {} bits",
            w.compact_point_bytes, w.compact_total_bits
        );
        s
    }
}

struct Sample {
    setup: Duration,
    registration: Duration,
    begin: Duration,
    handle: Duration,
    complete: Duration,
    request_len: usize,
    reply_len: usize,
}

fn iteration<B: PairingBackend>(
    seed: u64,
    index: usize,
    payload_bits: usize,
) -> Result<Sample, BenchError> {
    let cfg = DeploymentConfig {
        payload_bits,
        users: Vec::new(),
        sensors: Vec::new(),
        ..DeploymentConfig::default()
    };
    let t = Instant::now();
    let mut d = Deployment::<B>::provision(seed.wrapping_add(index as u64), &cfg)?;
    let setup = t.elapsed();

    let t = Instant::now();
    let user = d.register_user(b"alice")?;
    let sensor = d.register_sensor(b"sensor-1", SensorConfig::default())?;
    let registration = t.elapsed();

    let t = Instant::now();
    let request = d.begin(user, sensor)?;
    let begin = t.elapsed();

    let t = Instant::now();
    let mut arrivals = d.send_to_sensor(sensor, &request, Fault::None)?;
    let handle = t.elapsed();
    if arrivals.len() != 1 || arrivals[0].decision.is_err() {
        return Err(BenchError::HandshakeFailed(index));
    }
    let reply = arrivals.remove(0).reply;

    let t = Instant::now();
    let session = d.reply_to_user(user, sensor, &reply)?;
    let complete = t.elapsed();

    match (session, d.sensors[sensor].session()) {
        (Ok(u), Some(s)) if u.key == s.key => {}
        _ => return Err(BenchError::HandshakeFailed(index)),
    }
    Ok(Sample {
        setup,
        registration,
        begin,
        handle,
        complete,
        request_len: request.len(),
        reply_len: reply.len(),
    })
}

/// Run `iterations` full provision-register-handshake cycles.
pub fn run_benchmark<B: PairingBackend>(
    seed: u64,
    iterations: usize,
    payload_bits: usize,
) -> Result<BenchReport, BenchError> {
    if iterations == 0 {
        return Err(BenchError::NoIterations);
    }
    let mut samples = Vec::with_capacity(iterations);
    let mut first: Option<OpCounter> = None;
    let mut stable = true;
    for i in 0..iterations {
        let (sample, counter) = ops::count(|| iteration::<B>(seed, i, payload_bits));
        samples.push(sample?);
        match &first {
            None => first = Some(counter),
            Some(f) => stable &= *f == counter,
        }
    }
    let counter = first.expect("at least one iteration");

    let counts: Vec<ScopeCounts> = counter
        .scopes()
        .map(|(entity, phase, counts)| ScopeCounts {
            entity,
            phase,
            counts,
            notation: counts.notation(),
        })
        .collect();
    let entity_totals = [Entity::User, Entity::Gateway, Entity::Sensor]
        .into_iter()
        .map(|e| (e, counter.entity_total(e)))
        .collect();

    let user_auth = counter.get(Entity::User, Phase::Authentication);
    let gw_reg = counter.get(Entity::Gateway, Phase::Registration);
    let sn_reg = counter.get(Entity::Sensor, Phase::Registration);
    let sn_auth = counter.get(Entity::Sensor, Phase::Authentication);
    let sn = OpCounts {
        pairings: sn_reg.pairings,
        ..sn_auth
    };
    let comparisons = vec![
        Comparison::new(
            Entity::User,
            "user authentication",
            user_auth,
            PUBLISHED_USER,
        ),
        Comparison::new(
            Entity::Gateway,
            "gateway registration of one user and one sensor",
            gw_reg,
            PUBLISHED_GATEWAY,
        ),
        Comparison::new(
            Entity::Sensor,
            "sensor registration pairings + sensor authentication",
            sn,
            PUBLISHED_SENSOR,
        ),
    ];

    let col = |f: fn(&Sample) -> Duration| -> TimingStats {
        TimingStats::from_samples(&samples.iter().map(f).collect::<Vec<_>>())
    };
    let timings = Timings {
        setup: col(|s| s.setup),
        registration: col(|s| s.registration),
        user_begin: col(|s| s.begin),
        sensor_handle: col(|s| s.handle),
        user_complete: col(|s| s.complete),
        handshake_total: col(|s| s.begin + s.handle + s.complete),
    };

    let codec = crate::wire::Codec::<B>::new(payload_bits.div_ceil(8));
    let request_len = samples[0].request_len;
    let reply_len = samples[0].reply_len;
    let analytic_matches = samples.iter().all(|s| {
        s.request_len == codec.service_request_len() && s.reply_len == codec.mac_confirm_len()
    });
    let total_bytes = request_len + reply_len;
    let compact_bytes =
        3 * B::COMPACT_POINT_LEN + codec.scalar_len() + 2 * codec.payload_len() + 8 + MAC_LEN;
    let wire = WireCost {
        header_bytes: HEADER_LEN,
        point_bytes: codec.point_len(),
        scalar_bytes: codec.scalar_len(),
        payload_bytes: codec.payload_len(),
        timestamp_bytes: 8,
        mac_bytes: MAC_LEN,
        service_request_bytes_analytic: codec.service_request_len(),
        service_request_bytes_measured: request_len,
        mac_confirm_bytes_analytic: codec.mac_confirm_len(),
        mac_confirm_bytes_measured: reply_len,
        analytic_matches_measured: analytic_matches,
        total_bytes,
        total_bits: total_bytes as u64 * 8,
        published_bits: PUBLISHED_WIRE_BITS,
        compact_point_bytes: B::COMPACT_POINT_LEN,
        compact_total_bits: compact_bytes as u64 * 8,
    };

    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        backend: B::NAME.to_string(),
        group_order: B::order(),
        security_bits: B::SECURITY_BITS,
        seed,
        iterations,
        payload_bits,
        counts,
        entity_totals,
        unscoped: counter.unscoped(),
        total: counter.total(),
        counts_stable: stable,
        comparisons,
        timings,
        published_total_ms: PUBLISHED_TOTAL_MS,
        wire,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::toy::Toy;
    use crate::deployment::DEFAULT_PAYLOAD_BITS;

    #[test]
    fn stats_of_known_samples() {
        let s = TimingStats::from_samples(&[
            Duration::from_millis(1),
            Duration::from_millis(2),
            Duration::from_millis(3),
        ]);
        assert!((s.mean_ms - 2.0).abs() < 1e-9);
        assert!((s.variance_ms2 - 1.0).abs() < 1e-9);
        assert_eq!(s.min_ms, 1.0);
        assert_eq!(s.max_ms, 3.0);
    }

    #[test]
    fn totals_are_sums_of_scopes() {
        let r = run_benchmark::<Toy>(1, 5, DEFAULT_PAYLOAD_BITS).unwrap();
        assert!(r.counts_stable);
        let mut sum = r.unscoped;
        for c in &r.counts {
            sum += c.counts;
        }
        assert_eq!(sum, r.total);
        assert!(r.wire.analytic_matches_measured);
    }

    #[test]
    fn zero_iterations_is_an_error() {
        assert!(matches!(
            run_benchmark::<Toy>(1, 0, DEFAULT_PAYLOAD_BITS),
            Err(BenchError::NoIterations)
        ));
    }
}
