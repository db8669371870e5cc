use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand_core::{CryptoRng, RngCore};
use serde::Serialize;

use super::{
    check_identity, Clock, DirectoryEntry, FreshnessPolicy, MacConfirmation, PartyPhase,
    ProtocolError, Rejection, SensorProvisioning, ServiceRequest, Session,
};
use crate::algebra::{GroupElement, PairingBackend};
use crate::ops::{self, Entity, Phase};
use crate::signcryption::{
    derive_session, recover, sensor_finalize_keys, signature_holds, verify_credential,
    verify_partial_key, SensorKeyMaterial, SensorPublicKey, SessionInputs, SystemParams,
    UnsigncryptError, UserCredential,
};

/// How the sensor picks the `PK_p` to check a signature against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LookupPolicy {
    /// Index the directory on `Acd = R_2 − R_1` and check only that entry.
    #[default]
    ByAccount,
    /// Check the signature against every registered `PK_p`, then require the
    /// matching entry's `Acd` to equal `R_2 − R_1`.
    SignatureScan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SensorConfig {
    pub lookup: LookupPolicy,
    pub replay_capacity: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            lookup: LookupPolicy::ByAccount,
            replay_capacity: 65_536,
        }
    }
}

/// Accept/reject tallies since construction.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SensorStats {
    pub accepted: u64,
    pub rejected: HashMap<Rejection, u64>,
}

impl SensorStats {
    pub fn rejected_total(&self) -> u64 {
        self.rejected.values().sum()
    }

    pub fn rejected_for(&self, reason: Rejection) -> u64 {
        self.rejected.get(&reason).copied().unwrap_or(0)
    }
}

/// The CLC sensor node.
pub struct Sensor<B: PairingBackend> {
    id: Vec<u8>,
    params: SystemParams<B>,
    config: SensorConfig,
    phase: PartyPhase,
    keys: Option<SensorKeyMaterial<B>>,
    directory: Vec<DirectoryEntry<B>>,
    by_account: HashMap<Vec<u8>, usize>,
    freshness: FreshnessPolicy,
    clock: Arc<dyn Clock>,
    session: Option<Session>,
    stats: SensorStats,
}

impl<B: PairingBackend> Clone for Sensor<B> {
    fn clone(&self) -> Self {
        Sensor {
            id: self.id.clone(),
            params: self.params.clone(),
            config: self.config,
            phase: self.phase,
            keys: self.keys.clone(),
            directory: self.directory.clone(),
            by_account: self.by_account.clone(),
            freshness: self.freshness.clone(),
            clock: Arc::clone(&self.clock),
            session: self.session.clone(),
            stats: self.stats.clone(),
        }
    }
}

impl<B: PairingBackend> fmt::Debug for Sensor<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Sensor")
            .field("id", &String::from_utf8_lossy(&self.id))
            .field("phase", &self.phase)
            .field("directory", &self.directory.len())
            .field("stats", &self.stats)
            .finish_non_exhaustive()
    }
}

impl<B: PairingBackend> Sensor<B> {
    pub fn new(
        id: &[u8],
        params: SystemParams<B>,
        config: SensorConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ProtocolError> {
        check_identity(id)?;
        let freshness = FreshnessPolicy::new(params.delta_t_ms, config.replay_capacity);
        Ok(Sensor {
            id: id.to_vec(),
            params,
            config,
            phase: PartyPhase::Uninitialized,
            keys: None,
            directory: Vec::new(),
            by_account: HashMap::new(),
            freshness,
            clock,
            session: None,
            stats: SensorStats::default(),
        })
    }

    pub fn id(&self) -> &[u8] {
        &self.id
    }

    pub fn phase(&self) -> PartyPhase {
        self.phase
    }

    pub fn params(&self) -> &SystemParams<B> {
        &self.params
    }

    pub fn config(&self) -> SensorConfig {
        self.config
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    pub fn stats(&self) -> &SensorStats {
        &self.stats
    }

    pub fn directory(&self) -> &[DirectoryEntry<B>] {
        &self.directory
    }

    pub fn freshness(&self) -> &FreshnessPolicy {
        &self.freshness
    }

    pub fn public_key(&self) -> Option<SensorPublicKey<B>> {
        self.keys.as_ref().map(SensorKeyMaterial::public_key)
    }

    /// Check `{T, d, γ}` with the pairing equation, pick `x_c`, and load the
    /// user directory. Any failed check leaves the sensor `Failed`.
    pub fn install<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        provisioning: &SensorProvisioning<B>,
        rng: &mut R,
    ) -> Result<SensorPublicKey<B>, ProtocolError> {
        if self.phase != PartyPhase::Uninitialized {
            return Err(ProtocolError::WrongPhase(self.phase));
        }
        let result = ops::within(Entity::Sensor, Phase::Registration, || {
            if !verify_partial_key(&provisioning.partial, &self.params) {
                return Err(ProtocolError::PartialKeyRejected);
            }
            check_entries(&provisioning.directory, &self.params)?;
            Ok(sensor_finalize_keys(
                &self.id,
                &provisioning.partial,
                &self.params,
                rng,
            ))
        });
        match result {
            Ok(keys) => {
                let public = keys.public_key();
                self.keys = Some(keys);
                self.load_entries(&provisioning.directory);
                self.phase = PartyPhase::Registered;
                Ok(public)
            }
            Err(e) => {
                self.phase = PartyPhase::Failed;
                Err(e)
            }
        }
    }

    /// Merge a later directory push. All entries are verified before any is
    /// stored; a bad push changes nothing.
    pub fn apply_directory(
        &mut self,
        entries: &[DirectoryEntry<B>],
    ) -> Result<usize, ProtocolError> {
        if self.keys.is_none() || self.phase == PartyPhase::Failed {
            return Err(ProtocolError::WrongPhase(self.phase));
        }
        ops::within(Entity::Sensor, Phase::Registration, || {
            check_entries(entries, &self.params)
        })?;
        Ok(self.load_entries(entries))
    }

    fn load_entries(&mut self, entries: &[DirectoryEntry<B>]) -> usize {
        let mut added = 0;
        for entry in entries {
            let key = entry.acd.to_bytes();
            if self.by_account.contains_key(&key) {
                continue;
            }
            self.by_account.insert(key, self.directory.len());
            self.directory.push(entry.clone());
            added += 1;
        }
        added
    }

    /// Process `{R_2, σ, t_c}` at the sensor's current clock reading.
    pub fn handle_request(
        &mut self,
        request: &ServiceRequest<B>,
    ) -> Result<MacConfirmation, Rejection> {
        let now = self.clock.now_ms();
        let outcome = ops::within(Entity::Sensor, Phase::Authentication, || {
            self.process(request, now)
        });
        match &outcome {
            Ok(_) => self.stats.accepted += 1,
            Err(reason) => *self.stats.rejected.entry(*reason).or_default() += 1,
        }
        outcome
    }

    fn process(
        &mut self,
        request: &ServiceRequest<B>,
        now: u64,
    ) -> Result<MacConfirmation, Rejection> {
        let keys = match (&self.keys, self.phase) {
            (Some(keys), PartyPhase::Registered | PartyPhase::Established) => keys,
            _ => return Err(Rejection::NotReady),
        };
        self.freshness.prune(now);
        if !self.freshness.is_fresh(request.timestamp_ms, now) {
            return Err(Rejection::StaleTimestamp);
        }
        let sigma = &request.sigma;
        let recovered = recover(keys, sigma, &self.params).map_err(|e| match e {
            UnsigncryptError::MalformedLengths => Rejection::Malformed,
            UnsigncryptError::BadSignature => Rejection::BadSignature,
        })?;
        let acd = request.r2_point - recovered.r1_point;
        let acd_bytes = acd.to_bytes();

        match self.config.lookup {
            LookupPolicy::ByAccount => {
                let entry = self
                    .by_account
                    .get(&acd_bytes)
                    .map(|&i| &self.directory[i])
                    .ok_or(Rejection::UnknownAccount)?;
                let h4m = self.params.hash.h4(&recovered.m);
                if !signature_holds(
                    &sigma.c,
                    &h4m,
                    &recovered.r1_point,
                    &entry.public,
                    &self.params,
                ) {
                    return Err(Rejection::BadSignature);
                }
            }
            LookupPolicy::SignatureScan => {
                let h4m = self.params.hash.h4(&recovered.m);
                let signer = self
                    .directory
                    .iter()
                    .find(|e| {
                        signature_holds(
                            &sigma.c,
                            &h4m,
                            &recovered.r1_point,
                            &e.public,
                            &self.params,
                        )
                    })
                    .ok_or(Rejection::BadSignature)?;
                if signer.acd != acd {
                    return Err(Rejection::UnknownAccount);
                }
            }
        }

        self.freshness
            .admit(&acd_bytes, request.timestamp_ms, now)?;

        let material = derive_session(
            &SessionInputs::<B> {
                sensor_id: &self.id,
                timestamp_ms: request.timestamp_ms,
                acd: &acd,
                c: &sigma.c,
                r1_point: &recovered.r1_point,
            },
            &self.params,
        );
        self.session = Some(Session {
            key: material.key,
            h1: material.h1,
            peer: acd_bytes,
            payload: recovered.m,
            established_at_ms: now,
        });
        self.phase = PartyPhase::Established;
        Ok(MacConfirmation { tag: material.tag })
    }
}

fn check_entries<B: PairingBackend>(
    entries: &[DirectoryEntry<B>],
    params: &SystemParams<B>,
) -> Result<(), ProtocolError> {
    for (i, entry) in entries.iter().enumerate() {
        let cred = UserCredential {
            acd: entry.acd,
            sigma1: entry.sigma1,
            delta: entry.delta,
        };
        if !verify_credential(&cred, params) {
            return Err(ProtocolError::DirectoryEntryRejected(i));
        }
    }
    Ok(())
}
