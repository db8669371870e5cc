//! Attack scenarios run against a [`Deployment`] over the simulated network.
//!
//! Forgeries are built from an [`AdversaryView`]: public parameters, public
//! keys and observed wire bytes. The harness itself may look at both
//! parties' outcomes to score a run.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::algebra::{GroupElement, PairingBackend, ScalarField};
use crate::deployment::{Deployment, DeploymentConfig, DeploymentError};
use crate::ops::{self, Entity, Phase};
use crate::protocol::{Rejection, Sensor, ServiceRequest, User};
use crate::signcryption::{
    session_key, signature_holds, signcrypt, user_keygen, Ciphertext, SensorPublicKey,
    SessionInputs, SystemParams, UserCredential,
};
use crate::wire::{handle_sensor_frame, Codec, Fault, MessageType, WireMessage, HEADER_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Replay,
    Dos,
    Tamper,
    Impersonation,
    Anonymity,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Replay,
        Scenario::Dos,
        Scenario::Tamper,
        Scenario::Impersonation,
        Scenario::Anonymity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Replay => "replay",
            Scenario::Dos => "dos",
            Scenario::Tamper => "tamper",
            Scenario::Impersonation => "impersonation",
            Scenario::Anonymity => "anonymity",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Reported but not part of the verdict.
    pub informational: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub scenario: Scenario,
    pub backend: &'static str,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, u64>,
}

impl Verdict {
    fn new<B: PairingBackend>(scenario: Scenario, seed: u64) -> Self {
        Verdict {
            scenario,
            backend: B::NAME,
            seed,
            passed: false,
            checks: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            informational: false,
            detail: detail.into(),
        });
    }

    fn note(&mut self, name: &str, holds: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed: holds,
            informational: true,
            detail: detail.into(),
        });
    }

    fn metric(&mut self, name: &str, value: u64) {
        self.metrics.insert(name.into(), value);
    }

    fn finish(mut self) -> Self {
        self.passed = self
            .checks
            .iter()
            .filter(|c| !c.informational)
            .all(|c| c.passed);
        self
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "scenario {} backend {} seed {}: {}\n",
            self.scenario,
            self.backend,
            self.seed,
            if self.passed { "PASS" } else { "FAIL" }
        );
        for c in &self.checks {
            let mark = match (c.informational, c.passed) {
                (true, _) => "info",
                (false, true) => "pass",
                (false, false) => "FAIL",
            };
            out.push_str(&format!("  [{mark}] {}: {}\n", c.name, c.detail));
        }
        for (k, v) in &self.metrics {
            out.push_str(&format!("  {k} = {v}\n"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttackOptions {
    /// Bogus requests in the DOS scenario.
    pub volume: usize,
    /// Forgeries in the impersonation scenario.
    pub attempts: usize,
    /// Sessions per user in the anonymity scan.
    pub sessions: usize,
    /// Bit flips in the tamper scenario; `None` is exhaustive.
    pub flips: Option<usize>,
}

impl Default for AttackOptions {
    fn default() -> Self {
        AttackOptions {
            volume: 1000,
            attempts: 1000,
            sessions: 100,
            flips: None,
        }
    }
}

/// Everything an outside attacker can know.
pub struct AdversaryView<B: PairingBackend> {
    pub params: SystemParams<B>,
    pub sensor: SensorPublicKey<B>,
    pub user_publics: Vec<B::G1>,
    /// Authentication-phase wire bytes observed so far.
    pub observed: Vec<Vec<u8>>,
}

impl<B: PairingBackend> AdversaryView<B> {
    pub fn of(d: &Deployment<B>, sensor: usize) -> Self {
        AdversaryView {
            params: d.params().clone(),
            sensor: d.sensors[sensor]
                .public_key()
                .expect("sensor is registered"),
            user_publics: d.users.iter().map(|u| u.keys().public).collect(),
            observed: d
                .net
                .transcript()
                .iter()
                .filter(|b| is_auth_message(b))
                .cloned()
                .collect(),
        }
    }

    /// Service requests seen on the wire.
    pub fn observed_requests(&self) -> Vec<ServiceRequest<B>> {
        let codec = Codec::<B>::for_params(&self.params);
        self.observed
            .iter()
            .filter_map(|b| match codec.decode(b) {
                Ok(WireMessage::ServiceRequest(r)) => Some(r),
                _ => None,
            })
            .collect()
    }
}

fn is_auth_message(bytes: &[u8]) -> bool {
    bytes
        .get(1)
        .and_then(|&t| MessageType::from_byte(t))
        .is_some_and(MessageType::is_auth_phase)
}

/// Cheap pseudo-random group elements: a random walk over a small pool of
/// random multiples of `P`.
struct PointWalk<B: PairingBackend> {
    pool: Vec<B::G1>,
    acc: B::G1,
}

impl<B: PairingBackend> PointWalk<B> {
    fn new(generator: B::G1, rng: &mut ChaCha20Rng) -> Self {
        let pool: Vec<_> = (0..16)
            .map(|_| generator * B::Scalar::random(rng))
            .collect();
        let acc = pool[0];
        PointWalk { pool, acc }
    }

    fn next(&mut self, rng: &mut ChaCha20Rng) -> B::G1 {
        let pick = rng.next_u32() as usize;
        self.acc = self.acc + self.pool[pick % 16];
        if pick & 0x100 != 0 {
            self.acc = self.acc + self.acc;
        }
        if self.acc.is_zero() {
            self.acc = self.pool[1];
        }
        self.acc
    }
}

fn random_bytes(len: usize, rng: &mut ChaCha20Rng) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

fn attacker_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ 0x6164_7665_7273_6172)
}

fn now<B: PairingBackend>(d: &Deployment<B>) -> u64 {
    d.clock().now_ms()
}

fn encode_request<B: PairingBackend>(codec: &Codec<B>, req: ServiceRequest<B>) -> Vec<u8> {
    codec
        .encode(&WireMessage::ServiceRequest(req))
        .expect("well-formed request")
}

fn describe(decision: &Result<(), Rejection>) -> String {
    match decision {
        Ok(()) => "accepted".into(),
        Err(r) => format!("rejected({})", serde_label(r)),
    }
}

fn serde_label(r: &Rejection) -> &'static str {
    match r {
        Rejection::StaleTimestamp => "stale-timestamp",
        Rejection::Replayed => "replayed",
        Rejection::BadSignature => "bad-signature",
        Rejection::UnknownAccount => "unknown-account",
        Rejection::Malformed => "malformed",
        Rejection::NotReady => "not-ready",
        Rejection::Overloaded => "overloaded",
    }
}

pub fn run<B: PairingBackend>(
    scenario: Scenario,
    seed: u64,
    options: &AttackOptions,
) -> Result<Verdict, DeploymentError> {
    match scenario {
        Scenario::Replay => run_replay::<B>(seed),
        Scenario::Dos => run_dos::<B>(seed, options.volume),
        Scenario::Tamper => run_tamper::<B>(seed, options.flips),
        Scenario::Impersonation => run_impersonation::<B>(seed, options.attempts),
        Scenario::Anonymity => run_anonymity::<B>(seed, options.sessions),
    }
}

/// Honest run, then the same bytes again inside and after `Δt`, plus a
/// duplicated and a delayed delivery of a fresh request.
pub fn run_replay<B: PairingBackend>(seed: u64) -> Result<Verdict, DeploymentError> {
    let mut v = Verdict::new::<B>(Scenario::Replay, seed);
    let mut d = Deployment::<B>::provision(seed, &DeploymentConfig::default())?;
    let delta = d.params().delta_t_ms;

    let first = d.handshake(0, 0)?;
    v.check(
        "first-delivery-accepted",
        first.sensor_decision.is_ok() && first.keys_agree(),
        describe(&first.sensor_decision),
    );

    let again = d.send_to_sensor(0, &first.request, Fault::None)?;
    let decision = again[0].decision;
    v.check(
        "in-window-resend-rejected",
        decision == Err(Rejection::Replayed),
        describe(&decision),
    );

    let fresh = d.begin(0, 0)?;
    let dup = d.send_to_sensor(0, &fresh, Fault::Duplicate)?;
    let decisions: Vec<_> = dup.iter().map(|x| x.decision).collect();
    v.check(
        "duplicate-second-copy-rejected",
        decisions == [Ok(()), Err(Rejection::Replayed)],
        decisions
            .iter()
            .map(describe)
            .collect::<Vec<_>>()
            .join(", "),
    );
    d.reply_to_user(0, 0, &dup[0].reply)?.ok();

    let clock = d.manual_clock().expect("manual clock").clone();
    clock.advance(2 * delta);
    let late = d.send_to_sensor(0, &first.request, Fault::None)?;
    v.check(
        "after-window-resend-rejected",
        late[0].decision == Err(Rejection::StaleTimestamp),
        describe(&late[0].decision),
    );

    let delayed = d.begin(0, 0)?;
    let arrivals = d.send_to_sensor(0, &delayed, Fault::Delay(2 * delta))?;
    v.check(
        "delayed-delivery-rejected",
        arrivals[0].decision == Err(Rejection::StaleTimestamp),
        describe(&arrivals[0].decision),
    );
    let cache = d.sensors[0].freshness().cache();
    v.check(
        "cache-holds-no-expired-entries",
        cache.oldest_expiry().is_none_or(|e| e > now(&d)),
        format!("{} entries", cache.len()),
    );
    v.metric("replay_cache_entries", cache.len() as u64);
    Ok(v.finish())
}

/// `volume` well-formed requests signcrypted to the sensor under an
/// attacker key and an invented account point, with one honest request in
/// the middle.
pub fn run_dos<B: PairingBackend>(seed: u64, volume: usize) -> Result<Verdict, DeploymentError> {
    let mut v = Verdict::new::<B>(Scenario::Dos, seed);
    let mut d = Deployment::<B>::provision(seed, &DeploymentConfig::default())?;
    let view = AdversaryView::of(&d, 0);
    let mut rng = attacker_rng(seed);
    let mut walk = PointWalk::<B>::new(view.params.generator, &mut rng);
    let attacker = user_keygen(b"mallory", &view.params, &mut rng);

    let accepted_before = d.sensors[0].stats().accepted;
    let mut honest = None;
    let mut reasons: BTreeMap<String, u64> = BTreeMap::new();
    let mut max_pairings = 0;
    let mut max_mults = 0;
    let mut max_hashes = 0;
    let mut total_macs = 0;
    let mut bogus_accepted = 0;

    for i in 0..volume {
        if i == volume / 2 {
            honest = Some(d.handshake(0, 0)?);
        }
        let fake = UserCredential::<B> {
            acd: walk.next(&mut rng),
            sigma1: B::Scalar::random(&mut rng),
            delta: B::Scalar::random(&mut rng),
        };
        let m = random_bytes(view.params.payload_len(), &mut rng);
        let sc = signcrypt(&attacker, &fake, &view.sensor, &m, &view.params, &mut rng)
            .expect("payload sized from params");
        let bytes = encode_request(
            &d.codec,
            ServiceRequest {
                r2_point: sc.r2_point,
                sigma: sc.sigma,
                timestamp_ms: now(&d),
            },
        );
        let (arrivals, counter) = ops::count(|| d.send_to_sensor(0, &bytes, Fault::None));
        let work = counter.get(Entity::Sensor, Phase::Authentication);
        max_pairings = max_pairings.max(work.pairings);
        max_mults = max_mults.max(work.scalar_mults);
        max_hashes = max_hashes.max(work.hashes);
        total_macs += work.macs;
        for a in arrivals? {
            match a.decision {
                Ok(()) => bogus_accepted += 1,
                Err(r) => *reasons.entry(serde_label(&r).into()).or_default() += 1,
            }
        }
    }
    let honest = match honest {
        Some(h) => h,
        None => d.handshake(0, 0)?,
    };

    let unknown = reasons.get("unknown-account").copied().unwrap_or(0);
    v.check(
        "no-bogus-session",
        bogus_accepted == 0 && d.sensors[0].stats().accepted - accepted_before == 1,
        format!("{bogus_accepted} bogus requests accepted"),
    );
    v.check(
        "all-rejected-unknown-account",
        unknown == volume as u64,
        format!("{reasons:?}"),
    );
    v.check(
        "zero-pairings-per-bogus-request",
        max_pairings == 0,
        format!("max {max_pairings} pairings"),
    );
    v.check(
        "no-key-or-mac-work",
        total_macs == 0 && max_hashes <= 3,
        format!("max {max_hashes} hashes, {total_macs} MACs"),
    );
    v.check(
        "interleaved-honest-accepted",
        honest.sensor_decision.is_ok() && honest.keys_agree(),
        describe(&honest.sensor_decision),
    );
    v.metric("bogus_requests", volume as u64);
    v.metric("per_bogus_pairings_max", max_pairings);
    v.metric("per_bogus_scalar_mults_max", max_mults);
    v.metric("per_bogus_hashes_max", max_hashes);
    v.metric("bogus_macs_total", total_macs);
    Ok(v.finish())
}

/// Byte ranges of the service request fields, header included.
pub fn request_fields<B: PairingBackend>(
    codec: &Codec<B>,
) -> Vec<(&'static str, std::ops::Range<usize>)> {
    let p = codec.point_len();
    let s = codec.scalar_len();
    let n = codec.payload_len();
    let widths = [
        ("header", HEADER_LEN),
        ("R2", p),
        ("c", s),
        ("R1", p),
        ("r_1", n),
        ("r_2", n),
        ("U", p),
        ("t_c", 8),
    ];
    let mut at = 0;
    widths
        .into_iter()
        .map(|(name, w)| {
            let r = at..at + w;
            at += w;
            (name, r)
        })
        .collect()
}

/// Outcome of delivering one altered request to a fresh copy of the
/// sensor and, if it answers, one altered-session user.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipOutcome {
    RejectedBySensor(Rejection),
    MacFailedAtUser,
    Accepted,
}

pub fn deliver_altered<B: PairingBackend>(
    sensor: &Sensor<B>,
    user: &User<B>,
    codec: &Codec<B>,
    bytes: &[u8],
) -> FlipOutcome {
    let mut sensor = sensor.clone();
    let (reply, decision) = handle_sensor_frame(&mut sensor, codec, bytes);
    if let Err(r) = decision {
        return FlipOutcome::RejectedBySensor(r);
    }
    let mut user = user.clone();
    let confirm = match codec.decode(&reply) {
        Ok(WireMessage::MacConfirm(c)) => c,
        _ => return FlipOutcome::MacFailedAtUser,
    };
    match user.complete_auth(sensor.id(), &confirm) {
        Ok(_) => FlipOutcome::Accepted,
        Err(_) => FlipOutcome::MacFailedAtUser,
    }
}

/// Flip single bits of a pinned honest request. Exhaustive unless `flips`
/// caps it, in which case positions are sampled.
pub fn run_tamper<B: PairingBackend>(
    seed: u64,
    flips: Option<usize>,
) -> Result<Verdict, DeploymentError> {
    let mut v = Verdict::new::<B>(Scenario::Tamper, seed);
    let mut d = Deployment::<B>::provision(seed, &DeploymentConfig::default())?;
    let request = d.begin(0, 0)?;
    let bits = request.len() * 8;

    let honest = deliver_altered(&d.sensors[0], &d.users[0], &d.codec, &request);
    v.check(
        "unaltered-request-accepted",
        honest == FlipOutcome::Accepted,
        format!("{honest:?}"),
    );

    let positions: Vec<usize> = match flips {
        Some(n) if n < bits => {
            let mut rng = attacker_rng(seed);
            (0..n).map(|_| rng.next_u64() as usize % bits).collect()
        }
        _ => (0..bits).collect(),
    };
    let fields = request_fields(&d.codec);
    let mut per_field: BTreeMap<&str, [u64; 3]> = BTreeMap::new();
    let mut accepted = Vec::new();
    for &bit in &positions {
        let mut altered = request.clone();
        altered[bit / 8] ^= 1 << (bit % 8);
        let outcome = deliver_altered(&d.sensors[0], &d.users[0], &d.codec, &altered);
        let field = fields
            .iter()
            .find(|(_, r)| r.contains(&(bit / 8)))
            .map_or("?", |(n, _)| n);
        let slot = per_field.entry(field).or_default();
        match outcome {
            FlipOutcome::RejectedBySensor(_) => slot[0] += 1,
            FlipOutcome::MacFailedAtUser => slot[1] += 1,
            FlipOutcome::Accepted => {
                slot[2] += 1;
                accepted.push(bit);
            }
        }
    }
    v.check(
        "every-flip-rejected",
        accepted.is_empty(),
        format!(
            "{} of {} flips accepted{}",
            accepted.len(),
            positions.len(),
            if accepted.is_empty() {
                String::new()
            } else {
                format!(" (bits {accepted:?})")
            }
        ),
    );
    v.metric("request_bits", bits as u64);
    v.metric("flips", positions.len() as u64);
    for (field, [sensor, mac, acc]) in per_field {
        v.metric(&format!("{field}.rejected_by_sensor"), sensor);
        v.metric(&format!("{field}.mac_failed_at_user"), mac);
        v.metric(&format!("{field}.accepted"), acc);
    }
    Ok(v.finish())
}

/// Forgeries from public values only: random requests, an observed `R_1`
/// with a fresh `c`, and a stolen `Acd` without `x_p`.
pub fn run_impersonation<B: PairingBackend>(
    seed: u64,
    attempts: usize,
) -> Result<Verdict, DeploymentError> {
    let mut v = Verdict::new::<B>(Scenario::Impersonation, seed);
    let mut d = Deployment::<B>::provision(
        seed,
        &DeploymentConfig::default().with_users(["alice", "bob"]),
    )?;
    let honest = d.handshake(0, 0)?;
    v.check(
        "honest-run-accepted",
        honest.keys_agree(),
        describe(&honest.sensor_decision),
    );
    let view = AdversaryView::of(&d, 0);
    let observed = view
        .observed_requests()
        .pop()
        .expect("one request on the wire");
    let mut rng = attacker_rng(seed);
    let mut walk = PointWalk::<B>::new(view.params.generator, &mut rng);
    let n = view.params.payload_len();

    let mut random_accepts = 0;
    for _ in 0..attempts {
        let forged = ServiceRequest::<B> {
            r2_point: walk.next(&mut rng),
            sigma: Ciphertext {
                c: B::Scalar::random(&mut rng),
                r1_point: walk.next(&mut rng),
                r_1: random_bytes(n, &mut rng),
                r_2: random_bytes(n, &mut rng),
                u: walk.next(&mut rng),
            },
            timestamp_ms: now(&d),
        };
        let bytes = encode_request(&d.codec, forged);
        if d.send_to_sensor(0, &bytes, Fault::None)?
            .iter()
            .any(|a| a.decision.is_ok())
        {
            random_accepts += 1;
        }
    }
    v.check(
        "random-forgeries-rejected",
        random_accepts == 0,
        format!("{random_accepts} of {attempts} accepted"),
    );

    let mut reuse_accepts = 0;
    let reuse_trials = attempts.clamp(1, 100);
    for _ in 0..reuse_trials {
        let mut forged = observed.clone();
        forged.sigma.c = B::Scalar::random(&mut rng);
        forged.timestamp_ms = now(&d);
        let bytes = encode_request(&d.codec, forged);
        if d.send_to_sensor(0, &bytes, Fault::None)?
            .iter()
            .any(|a| a.decision.is_ok())
        {
            reuse_accepts += 1;
        }
    }
    v.check(
        "observed-r1-with-fresh-c-rejected",
        reuse_accepts == 0,
        format!("{reuse_accepts} of {reuse_trials} accepted"),
    );

    // Stolen Acd, attacker's own x_p: the account exists but PK_p does not
    // match.
    let stolen = d.users[0].credential().expect("registered").clone();
    let attacker = user_keygen(b"mallory", &view.params, &mut rng);
    let m = random_bytes(n, &mut rng);
    let sc = signcrypt(&attacker, &stolen, &view.sensor, &m, &view.params, &mut rng)
        .expect("payload sized from params");
    let bytes = encode_request(
        &d.codec,
        ServiceRequest {
            r2_point: sc.r2_point,
            sigma: sc.sigma,
            timestamp_ms: now(&d),
        },
    );
    let stolen_decision = d.send_to_sensor(0, &bytes, Fault::None)?[0].decision;
    v.check(
        "stolen-acd-without-key-rejected",
        stolen_decision == Err(Rejection::BadSignature),
        describe(&stolen_decision),
    );

    // A valid σ verifies only under the signer's registered key.
    let h4m = view.params.hash.h4(&honest
        .sensor_session
        .as_ref()
        .map_or(Vec::new(), |s| s.payload.clone()));
    let under = |pk: &B::G1| {
        signature_holds(
            &observed.sigma.c,
            &h4m,
            &observed.sigma.r1_point,
            pk,
            &view.params,
        )
    };
    let alice_ok = under(&view.user_publics[0]);
    let bob_ok = under(&view.user_publics[1]);
    v.check(
        "signature-binds-to-signer",
        alice_ok && !bob_ok,
        format!("verifies under alice: {alice_ok}, under bob: {bob_ok}"),
    );

    // t_c is outside the signature and every session-key input is on the
    // wire: R_1 in σ gives Acd = R_2 − R_1.
    let mut rewritten = observed.clone();
    rewritten.timestamp_ms = now(&d) + 1;
    let bytes = encode_request(&d.codec, rewritten.clone());
    let rewrite = d.send_to_sensor(0, &bytes, Fault::None)?[0].clone();
    let acd = rewritten.r2_point - rewritten.sigma.r1_point;
    let sensor_id = view.sensor.id.clone();
    let (_, eavesdropped) = session_key(
        &SessionInputs::<B> {
            sensor_id: &sensor_id,
            timestamp_ms: rewritten.timestamp_ms,
            acd: &acd,
            c: &rewritten.sigma.c,
            r1_point: &rewritten.sigma.r1_point,
        },
        &view.params,
    );
    let sensor_key = d.sensors[0].session().map(|s| s.key.clone());
    let derived = rewrite.decision.is_ok() && sensor_key.as_ref() == Some(&eavesdropped);
    v.note(
        "timestamp-rewrite-replay",
        rewrite.decision.is_ok(),
        format!(
            "observed σ with a new t_c is {} by the sensor",
            describe(&rewrite.decision)
        ),
    );
    v.note(
        "session-key-from-public-values",
        derived,
        format!("attacker-derived key matches the sensor's session key: {derived}"),
    );
    v.metric("random_attempts", attempts as u64);
    v.metric("r1_reuse_attempts", reuse_trials as u64);
    Ok(v.finish())
}

/// Two users, `sessions` handshakes each; scan every authentication-phase
/// message for identity and account encodings.
pub fn run_anonymity<B: PairingBackend>(
    seed: u64,
    sessions: usize,
) -> Result<Verdict, DeploymentError> {
    let mut v = Verdict::new::<B>(Scenario::Anonymity, seed);
    let mut d = Deployment::<B>::provision(
        seed,
        &DeploymentConfig::default().with_users(["alice", "bob"]),
    )?;
    d.net.clear_transcript();

    let mut failures = 0;
    let mut r2_by_user: Vec<Vec<Vec<u8>>> = vec![Vec::new(); d.users.len()];
    for _ in 0..sessions {
        for (u, seen) in r2_by_user.iter_mut().enumerate() {
            let h = d.handshake(u, 0)?;
            if !h.keys_agree() {
                failures += 1;
            }
            if let Ok(WireMessage::ServiceRequest(r)) = d.codec.decode(&h.request) {
                seen.push(r.r2_point.to_bytes());
            }
        }
    }
    v.check(
        "sessions-established",
        failures == 0,
        format!("{failures} failed handshakes"),
    );

    let needles: Vec<(String, Vec<u8>)> = d
        .users
        .iter()
        .flat_map(|u| {
            let name = String::from_utf8_lossy(u.id()).into_owned();
            let acd = u.credential().expect("registered").acd.to_bytes();
            [
                (format!("ID_p({name})"), u.id().to_vec()),
                (format!("Acd({name})"), acd),
            ]
        })
        .collect();
    let auth: Vec<&Vec<u8>> = d
        .net
        .transcript()
        .iter()
        .filter(|b| is_auth_message(b))
        .collect();
    let mut hits = Vec::new();
    for (label, needle) in &needles {
        let n = auth.iter().filter(|m| contains(m, needle)).count();
        if n > 0 {
            hits.push(format!("{label}: {n}"));
        }
    }
    v.check(
        "no-identity-or-account-on-wire",
        hits.is_empty(),
        if hits.is_empty() {
            format!("{} messages scanned", auth.len())
        } else {
            hits.join(", ")
        },
    );

    let mut dupes = 0;
    let mut all = HashSet::new();
    for list in &r2_by_user {
        for r2 in list {
            if !all.insert(r2.clone()) {
                dupes += 1;
            }
        }
    }
    v.check(
        "r2-pairwise-distinct",
        dupes == 0,
        format!("{} R_2 values, {dupes} repeats", all.len()),
    );

    let reg_has_id = d.users.iter().all(|u| {
        d.registration_transcript()
            .iter()
            .any(|m| contains(m, u.id()))
    });
    v.note(
        "registration-channel-carries-id",
        reg_has_id,
        "registration messages are excluded from the scan",
    );

    // Acd is not sent, but R_2 − R_1 from a single request recovers it.
    let accounts: HashSet<Vec<u8>> = d
        .users
        .iter()
        .map(|u| u.credential().expect("registered").acd.to_bytes())
        .collect();
    let linkable = auth
        .iter()
        .filter_map(|b| match d.codec.decode(b) {
            Ok(WireMessage::ServiceRequest(r)) => Some(r),
            _ => None,
        })
        .filter(|r| accounts.contains(&(r.r2_point - r.sigma.r1_point).to_bytes()))
        .count();
    v.note(
        "account-recoverable-from-wire",
        linkable > 0,
        format!("{linkable} requests yield a registered Acd as R_2 - R_1"),
    );
    v.metric("auth_messages_scanned", auth.len() as u64);
    v.metric("sessions_per_user", sessions as u64);
    v.metric("requests_linkable_by_acd", linkable as u64);
    Ok(v.finish())
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}
