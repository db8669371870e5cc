//! Party state machines for the gateway (GWN), the PKI user and the CLC
//! sensor node, and the messages they exchange.
//!
//! The engine does no I/O. Each party consumes a message value and returns
//! the reply value; [`crate::wire`] turns those into bytes.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::PairingBackend;
use crate::hash::MacTag;
use crate::signcryption::{Ciphertext, CryptoError, SessionKey};

mod clock;
mod freshness;
mod gateway;
mod sensor;
mod user;

pub use clock::{Clock, ManualClock, SystemClock};
pub use freshness::{FreshnessPolicy, ReplayCache};
pub use gateway::{Gateway, SensorProvisioning};
pub use sensor::{LookupPolicy, Sensor, SensorConfig, SensorStats};
pub use user::User;

/// Identities travel with a 16-bit length prefix.
pub const MAX_IDENTITY_LEN: usize = u16::MAX as usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartyPhase {
    Uninitialized,
    Registered,
    AwaitingConfirm,
    Established,
    Failed,
}

impl fmt::Display for PartyPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartyPhase::Uninitialized => "uninitialized",
            PartyPhase::Registered => "registered",
            PartyPhase::AwaitingConfirm => "awaiting-confirm",
            PartyPhase::Established => "established",
            PartyPhase::Failed => "failed",
        })
    }
}

/// Why a sensor turned a service request down. Distinct internally; the wire
/// collapses all of them into one opaque code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Error)]
#[serde(rename_all = "kebab-case")]
pub enum Rejection {
    #[error("timestamp outside the freshness window")]
    StaleTimestamp,
    #[error("request already seen")]
    Replayed,
    #[error("signature check failed")]
    BadSignature,
    #[error("account not in directory")]
    UnknownAccount,
    #[error("malformed request")]
    Malformed,
    #[error("sensor not registered")]
    NotReady,
    #[error("replay cache full")]
    Overloaded,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("not allowed in phase {0}")]
    WrongPhase(PartyPhase),
    #[error("identity longer than {MAX_IDENTITY_LEN} bytes")]
    IdentityTooLong,
    #[error("credential failed verification")]
    CredentialRejected,
    #[error("partial private key failed the pairing check")]
    PartialKeyRejected,
    #[error("directory entry {0} failed verification")]
    DirectoryEntryRejected(usize),
    #[error("no public key known for sensor {0:?}")]
    UnknownSensor(String),
    #[error("no pending session")]
    NoPendingSession,
    #[error("confirmation MAC mismatch")]
    BadMac,
    #[error("sensor rejected the request")]
    RejectedByPeer,
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

/// `{ID_p, PK_p}`, sent over the registration channel.
#[derive(Debug)]
pub struct UserRegistration<B: PairingBackend> {
    pub id: Vec<u8>,
    pub public: B::G1,
}

impl<B: PairingBackend> Clone for UserRegistration<B> {
    fn clone(&self) -> Self {
        UserRegistration {
            id: self.id.clone(),
            public: self.public,
        }
    }
}

impl<B: PairingBackend> PartialEq for UserRegistration<B> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.public == other.public
    }
}

/// `{Acd, σ1, PK_p, δ}`: what a sensor stores about each registered user.
#[derive(Debug)]
pub struct DirectoryEntry<B: PairingBackend> {
    pub acd: B::G1,
    pub sigma1: B::Scalar,
    pub public: B::G1,
    pub delta: B::Scalar,
}

impl<B: PairingBackend> Clone for DirectoryEntry<B> {
    fn clone(&self) -> Self {
        DirectoryEntry {
            acd: self.acd,
            sigma1: self.sigma1,
            public: self.public,
            delta: self.delta,
        }
    }
}

impl<B: PairingBackend> PartialEq for DirectoryEntry<B> {
    fn eq(&self, other: &Self) -> bool {
        self.acd == other.acd
            && self.sigma1 == other.sigma1
            && self.public == other.public
            && self.delta == other.delta
    }
}

/// `{R_2, σ, t_c}`.
#[derive(Debug)]
pub struct ServiceRequest<B: PairingBackend> {
    pub r2_point: B::G1,
    pub sigma: Ciphertext<B>,
    pub timestamp_ms: u64,
}

impl<B: PairingBackend> Clone for ServiceRequest<B> {
    fn clone(&self) -> Self {
        ServiceRequest {
            r2_point: self.r2_point,
            sigma: self.sigma.clone(),
            timestamp_ms: self.timestamp_ms,
        }
    }
}

impl<B: PairingBackend> PartialEq for ServiceRequest<B> {
    fn eq(&self, other: &Self) -> bool {
        self.r2_point == other.r2_point
            && self.sigma == other.sigma
            && self.timestamp_ms == other.timestamp_ms
    }
}

/// `M_1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MacConfirmation {
    pub tag: MacTag,
}

/// An established session as seen by one party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Session {
    pub key: SessionKey,
    /// Encoded `h_1`.
    pub h1: Vec<u8>,
    /// Sensor id on the user side; encoded `Acd` on the sensor side.
    pub peer: Vec<u8>,
    /// The payload `m` carried by the request.
    pub payload: Vec<u8>,
    pub established_at_ms: u64,
}

fn check_identity(id: &[u8]) -> Result<(), ProtocolError> {
    if id.len() > MAX_IDENTITY_LEN {
        Err(ProtocolError::IdentityTooLong)
    } else {
        Ok(())
    }
}
