use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand_core::{CryptoRng, RngCore};

use super::{
    check_identity, Clock, MacConfirmation, PartyPhase, ProtocolError, ServiceRequest, Session,
    UserRegistration,
};
use crate::algebra::PairingBackend;
use crate::ops::{self, Entity, Phase};
use crate::signcryption::{
    confirm_session, signcrypt, user_keygen, verify_credential, SensorPublicKey, SessionInputs,
    SystemParams, UserCredential, UserKeyPair,
};

/// What the user keeps between sending a request and receiving `M_1`.
/// Holds the inputs of `h_1` and `R_1`, never the key itself.
struct Pending<B: PairingBackend> {
    timestamp_ms: u64,
    c: B::Scalar,
    r1_point: B::G1,
    payload: Vec<u8>,
}

impl<B: PairingBackend> Clone for Pending<B> {
    fn clone(&self) -> Self {
        Pending {
            timestamp_ms: self.timestamp_ms,
            c: self.c,
            r1_point: self.r1_point,
            payload: self.payload.clone(),
        }
    }
}

/// The PKI user.
pub struct User<B: PairingBackend> {
    params: SystemParams<B>,
    keys: UserKeyPair<B>,
    credential: Option<UserCredential<B>>,
    sensors: HashMap<Vec<u8>, SensorPublicKey<B>>,
    pending: HashMap<Vec<u8>, Pending<B>>,
    phase: PartyPhase,
    session: Option<Session>,
    clock: Arc<dyn Clock>,
    /// Sensors cache `(Acd, t_c)`, so two requests never share a stamp.
    last_timestamp_ms: u64,
}

impl<B: PairingBackend> Clone for User<B> {
    fn clone(&self) -> Self {
        User {
            params: self.params.clone(),
            keys: self.keys.clone(),
            credential: self.credential.clone(),
            sensors: self.sensors.clone(),
            pending: self.pending.clone(),
            phase: self.phase,
            session: self.session.clone(),
            clock: Arc::clone(&self.clock),
            last_timestamp_ms: self.last_timestamp_ms,
        }
    }
}

impl<B: PairingBackend> fmt::Debug for User<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("User")
            .field("id", &String::from_utf8_lossy(&self.keys.id))
            .field("phase", &self.phase)
            .field("pending", &self.pending.len())
            .finish_non_exhaustive()
    }
}

impl<B: PairingBackend> User<B> {
    /// Generate `(x_p, PK_p)` for `id`.
    pub fn new<R: RngCore + CryptoRng + ?Sized>(
        id: &[u8],
        params: SystemParams<B>,
        clock: Arc<dyn Clock>,
        rng: &mut R,
    ) -> Result<Self, ProtocolError> {
        check_identity(id)?;
        let keys = ops::within(Entity::User, Phase::Registration, || {
            user_keygen(id, &params, rng)
        });
        Ok(User {
            params,
            keys,
            credential: None,
            sensors: HashMap::new(),
            pending: HashMap::new(),
            phase: PartyPhase::Uninitialized,
            session: None,
            clock,
            last_timestamp_ms: 0,
        })
    }

    pub fn id(&self) -> &[u8] {
        &self.keys.id
    }

    pub fn phase(&self) -> PartyPhase {
        self.phase
    }

    pub fn keys(&self) -> &UserKeyPair<B> {
        &self.keys
    }

    pub fn credential(&self) -> Option<&UserCredential<B>> {
        self.credential.as_ref()
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    pub fn params(&self) -> &SystemParams<B> {
        &self.params
    }

    pub fn has_pending(&self, sensor_id: &[u8]) -> bool {
        self.pending.contains_key(sensor_id)
    }

    pub fn registration_request(&self) -> UserRegistration<B> {
        UserRegistration {
            id: self.keys.id.clone(),
            public: self.keys.public,
        }
    }

    /// Accept `{Acd, σ1, δ}` from the gateway after checking
    /// `Acd = σ1·P − δ·P_pub`.
    pub fn install_credential(&mut self, cred: UserCredential<B>) -> Result<(), ProtocolError> {
        if self.phase != PartyPhase::Uninitialized {
            return Err(ProtocolError::WrongPhase(self.phase));
        }
        let ok = ops::within(Entity::User, Phase::Registration, || {
            verify_credential(&cred, &self.params)
        });
        if !ok {
            self.phase = PartyPhase::Failed;
            return Err(ProtocolError::CredentialRejected);
        }
        self.credential = Some(cred);
        self.phase = PartyPhase::Registered;
        Ok(())
    }

    pub fn learn_sensor(&mut self, public: SensorPublicKey<B>) {
        self.sensors.insert(public.id.clone(), public);
    }

    /// Signcrypt `m` to `sensor_id` and stamp it with the current time,
    /// bumped past the previous stamp if the clock has not moved.
    /// Replaces any request still pending for the same sensor.
    pub fn begin_auth<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        sensor_id: &[u8],
        m: &[u8],
        rng: &mut R,
    ) -> Result<ServiceRequest<B>, ProtocolError> {
        let cred = match (&self.credential, self.phase) {
            (
                Some(cred),
                PartyPhase::Registered | PartyPhase::AwaitingConfirm | PartyPhase::Established,
            ) => cred,
            _ => return Err(ProtocolError::WrongPhase(self.phase)),
        };
        let recipient = self.sensors.get(sensor_id).ok_or_else(|| {
            ProtocolError::UnknownSensor(String::from_utf8_lossy(sensor_id).into())
        })?;
        let out = ops::within(Entity::User, Phase::Authentication, || {
            signcrypt(&self.keys, cred, recipient, m, &self.params, rng)
        })?;
        let timestamp_ms = self.clock.now_ms().max(self.last_timestamp_ms + 1);
        self.last_timestamp_ms = timestamp_ms;
        self.pending.insert(
            sensor_id.to_vec(),
            Pending {
                timestamp_ms,
                c: out.sigma.c,
                r1_point: out.sigma.r1_point,
                payload: m.to_vec(),
            },
        );
        self.session = None;
        self.phase = PartyPhase::AwaitingConfirm;
        Ok(ServiceRequest {
            r2_point: out.r2_point,
            sigma: out.sigma,
            timestamp_ms,
        })
    }

    /// Check `M_1` from `sensor_id`. The key is stored only if the tag
    /// verifies; a mismatch drops the pending state and fails the user.
    pub fn complete_auth(
        &mut self,
        sensor_id: &[u8],
        confirm: &MacConfirmation,
    ) -> Result<Session, ProtocolError> {
        let pending = self
            .pending
            .remove(sensor_id)
            .ok_or(ProtocolError::NoPendingSession)?;
        let cred = self
            .credential
            .as_ref()
            .expect("pending implies a credential");
        let material = ops::within(Entity::User, Phase::Authentication, || {
            confirm_session(
                &SessionInputs::<B> {
                    sensor_id,
                    timestamp_ms: pending.timestamp_ms,
                    acd: &cred.acd,
                    c: &pending.c,
                    r1_point: &pending.r1_point,
                },
                &confirm.tag,
                &self.params,
            )
        });
        let Some(material) = material else {
            self.fail();
            return Err(ProtocolError::BadMac);
        };
        let session = Session {
            key: material.key,
            h1: material.h1,
            peer: sensor_id.to_vec(),
            payload: pending.payload,
            established_at_ms: self.clock.now_ms(),
        };
        self.session = Some(session.clone());
        self.phase = PartyPhase::Established;
        Ok(session)
    }

    /// The sensor answered with a reject.
    pub fn handle_reject(&mut self, sensor_id: &[u8]) -> ProtocolError {
        if self.pending.remove(sensor_id).is_some() {
            self.fail();
            ProtocolError::RejectedByPeer
        } else {
            ProtocolError::NoPendingSession
        }
    }

    fn fail(&mut self) {
        self.pending.clear();
        self.session = None;
        self.phase = PartyPhase::Failed;
    }
}
