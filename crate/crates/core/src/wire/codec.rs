//! Byte-exact message encoding.
//!
//! ```text
//! header  version:u8 | type:u8 | body_len:u32be
//! body    type-specific, fixed-width fields; identities carry a u16be length
//! ```
//!
//! Field layouts are listed in `docs/wire.md`.

use std::fmt;
use std::marker::PhantomData;

use thiserror::Error;

use crate::algebra::{GroupElement, PairingBackend, ScalarField};
use crate::hash::{MacTag, MAC_LEN};
use crate::protocol::{
    DirectoryEntry, MacConfirmation, ServiceRequest, UserRegistration, MAX_IDENTITY_LEN,
};
use crate::signcryption::{Ciphertext, PartialKey, SystemParams, UserCredential};

pub const WIRE_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 6;
/// The only reject code ever sent.
pub const REJECT_CODE: u8 = 0x01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MessageType {
    RegUserReq = 0x01,
    RegUserResp = 0x02,
    RegSensorReq = 0x03,
    RegSensorResp = 0x04,
    DirectoryPush = 0x05,
    ServiceRequest = 0x06,
    MacConfirm = 0x07,
    Reject = 0x08,
}

impl MessageType {
    pub const ALL: [MessageType; 8] = [
        MessageType::RegUserReq,
        MessageType::RegUserResp,
        MessageType::RegSensorReq,
        MessageType::RegSensorResp,
        MessageType::DirectoryPush,
        MessageType::ServiceRequest,
        MessageType::MacConfirm,
        MessageType::Reject,
    ];

    pub fn from_byte(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|t| *t as u8 == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            MessageType::RegUserReq => "reg-user-req",
            MessageType::RegUserResp => "reg-user-resp",
            MessageType::RegSensorReq => "reg-sensor-req",
            MessageType::RegSensorResp => "reg-sensor-resp",
            MessageType::DirectoryPush => "directory-push",
            MessageType::ServiceRequest => "service-request",
            MessageType::MacConfirm => "mac-confirm",
            MessageType::Reject => "reject",
        }
    }

    /// Messages exchanged after registration, over the open network.
    pub fn is_auth_phase(self) -> bool {
        matches!(
            self,
            MessageType::ServiceRequest | MessageType::MacConfirm | MessageType::Reject
        )
    }
}

impl fmt::Display for MessageType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug)]
pub enum WireMessage<B: PairingBackend> {
    RegUserReq(UserRegistration<B>),
    RegUserResp(UserCredential<B>),
    RegSensorReq { id: Vec<u8> },
    RegSensorResp(PartialKey<B>),
    DirectoryPush(Vec<DirectoryEntry<B>>),
    ServiceRequest(ServiceRequest<B>),
    MacConfirm(MacConfirmation),
    Reject { code: u8 },
}

impl<B: PairingBackend> Clone for WireMessage<B> {
    fn clone(&self) -> Self {
        match self {
            WireMessage::RegUserReq(m) => WireMessage::RegUserReq(m.clone()),
            WireMessage::RegUserResp(m) => WireMessage::RegUserResp(m.clone()),
            WireMessage::RegSensorReq { id } => WireMessage::RegSensorReq { id: id.clone() },
            WireMessage::RegSensorResp(m) => WireMessage::RegSensorResp(m.clone()),
            WireMessage::DirectoryPush(m) => WireMessage::DirectoryPush(m.clone()),
            WireMessage::ServiceRequest(m) => WireMessage::ServiceRequest(m.clone()),
            WireMessage::MacConfirm(m) => WireMessage::MacConfirm(*m),
            WireMessage::Reject { code } => WireMessage::Reject { code: *code },
        }
    }
}

impl<B: PairingBackend> PartialEq for WireMessage<B> {
    fn eq(&self, other: &Self) -> bool {
        use WireMessage::*;
        match (self, other) {
            (RegUserReq(a), RegUserReq(b)) => a == b,
            (RegUserResp(a), RegUserResp(b)) => a == b,
            (RegSensorReq { id: a }, RegSensorReq { id: b }) => a == b,
            (RegSensorResp(a), RegSensorResp(b)) => a == b,
            (DirectoryPush(a), DirectoryPush(b)) => a == b,
            (ServiceRequest(a), ServiceRequest(b)) => a == b,
            (MacConfirm(a), MacConfirm(b)) => a == b,
            (Reject { code: a }, Reject { code: b }) => a == b,
            _ => false,
        }
    }
}

impl<B: PairingBackend> WireMessage<B> {
    pub fn message_type(&self) -> MessageType {
        match self {
            WireMessage::RegUserReq(_) => MessageType::RegUserReq,
            WireMessage::RegUserResp(_) => MessageType::RegUserResp,
            WireMessage::RegSensorReq { .. } => MessageType::RegSensorReq,
            WireMessage::RegSensorResp(_) => MessageType::RegSensorResp,
            WireMessage::DirectoryPush(_) => MessageType::DirectoryPush,
            WireMessage::ServiceRequest(_) => MessageType::ServiceRequest,
            WireMessage::MacConfirm(_) => MessageType::MacConfirm,
            WireMessage::Reject { .. } => MessageType::Reject,
        }
    }

    pub fn reject() -> Self {
        WireMessage::Reject { code: REJECT_CODE }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("malformed length: {0}")]
    Length(&'static str),
    #[error("unknown message type 0x{0:02x}")]
    Tag(u8),
    #[error("unsupported wire version {0}")]
    Version(u8),
    #[error("invalid {0} encoding")]
    Element(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("identity longer than {MAX_IDENTITY_LEN} bytes")]
    IdentityTooLong,
    #[error("directory holds more than {} entries", u16::MAX)]
    DirectoryTooLarge,
    #[error("payload field must be {expected} bytes, got {actual}")]
    PayloadLength { expected: usize, actual: usize },
}

/// Encoder/decoder bound to a backend and payload width.
pub struct Codec<B: PairingBackend> {
    payload_len: usize,
    _backend: PhantomData<fn() -> B>,
}

impl<B: PairingBackend> Clone for Codec<B> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<B: PairingBackend> Copy for Codec<B> {}

impl<B: PairingBackend> fmt::Debug for Codec<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Codec")
            .field("backend", &B::NAME)
            .field("payload_len", &self.payload_len)
            .finish()
    }
}

impl<B: PairingBackend> Codec<B> {
    pub fn new(payload_len: usize) -> Self {
        Codec {
            payload_len,
            _backend: PhantomData,
        }
    }

    pub fn for_params(params: &SystemParams<B>) -> Self {
        Self::new(params.payload_len())
    }

    pub fn payload_len(&self) -> usize {
        self.payload_len
    }

    pub fn point_len(&self) -> usize {
        <B::G1 as GroupElement<B::Scalar>>::ENCODED_LEN
    }

    pub fn scalar_len(&self) -> usize {
        <B::Scalar as ScalarField>::ENCODED_LEN
    }

    /// Body width of `{R_2, σ, t_c}`: three points, one scalar, two payload
    /// fields and the timestamp.
    pub fn service_request_body_len(&self) -> usize {
        3 * self.point_len() + self.scalar_len() + 2 * self.payload_len + 8
    }

    pub fn service_request_len(&self) -> usize {
        HEADER_LEN + self.service_request_body_len()
    }

    pub fn mac_confirm_len(&self) -> usize {
        HEADER_LEN + MAC_LEN
    }

    pub fn encode(&self, msg: &WireMessage<B>) -> Result<Vec<u8>, EncodeError> {
        let mut body = Vec::new();
        match msg {
            WireMessage::RegUserReq(req) => {
                put_id(&mut body, &req.id)?;
                body.extend(req.public.to_bytes());
            }
            WireMessage::RegUserResp(cred) => {
                body.extend(cred.acd.to_bytes());
                body.extend(cred.sigma1.to_bytes());
                body.extend(cred.delta.to_bytes());
            }
            WireMessage::RegSensorReq { id } => put_id(&mut body, id)?,
            WireMessage::RegSensorResp(partial) => {
                body.extend(partial.t_point.to_bytes());
                body.extend(partial.d.to_bytes());
                body.extend(partial.gamma.to_bytes());
            }
            WireMessage::DirectoryPush(entries) => {
                let count =
                    u16::try_from(entries.len()).map_err(|_| EncodeError::DirectoryTooLarge)?;
                body.extend(count.to_be_bytes());
                for e in entries {
                    body.extend(e.acd.to_bytes());
                    body.extend(e.sigma1.to_bytes());
                    body.extend(e.public.to_bytes());
                    body.extend(e.delta.to_bytes());
                }
            }
            WireMessage::ServiceRequest(req) => {
                let s = &req.sigma;
                for field in [&s.r_1, &s.r_2] {
                    if field.len() != self.payload_len {
                        return Err(EncodeError::PayloadLength {
                            expected: self.payload_len,
                            actual: field.len(),
                        });
                    }
                }
                body.extend(req.r2_point.to_bytes());
                body.extend(s.c.to_bytes());
                body.extend(s.r1_point.to_bytes());
                body.extend_from_slice(&s.r_1);
                body.extend_from_slice(&s.r_2);
                body.extend(s.u.to_bytes());
                body.extend(req.timestamp_ms.to_be_bytes());
            }
            WireMessage::MacConfirm(m) => body.extend_from_slice(&m.tag.0),
            WireMessage::Reject { code } => body.push(*code),
        }
        let mut out = Vec::with_capacity(HEADER_LEN + body.len());
        out.push(WIRE_VERSION);
        out.push(msg.message_type() as u8);
        out.extend((body.len() as u32).to_be_bytes());
        out.extend(body);
        Ok(out)
    }

    /// Total over arbitrary input: returns a message or an error, never
    /// panics.
    pub fn decode(&self, bytes: &[u8]) -> Result<WireMessage<B>, DecodeError> {
        if bytes.len() < HEADER_LEN {
            return Err(DecodeError::Length("short header"));
        }
        if bytes[0] != WIRE_VERSION {
            return Err(DecodeError::Version(bytes[0]));
        }
        let ty = MessageType::from_byte(bytes[1]).ok_or(DecodeError::Tag(bytes[1]))?;
        let declared = u32::from_be_bytes(bytes[2..6].try_into().expect("4 bytes")) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() != declared {
            return Err(DecodeError::Length("body length mismatch"));
        }
        let mut r = Reader { buf: body };
        let msg = match ty {
            MessageType::RegUserReq => WireMessage::RegUserReq(UserRegistration {
                id: r.id()?,
                public: r.point::<B>()?,
            }),
            MessageType::RegUserResp => WireMessage::RegUserResp(UserCredential {
                acd: r.point::<B>()?,
                sigma1: r.scalar::<B>()?,
                delta: r.scalar::<B>()?,
            }),
            MessageType::RegSensorReq => WireMessage::RegSensorReq { id: r.id()? },
            MessageType::RegSensorResp => WireMessage::RegSensorResp(PartialKey {
                t_point: r.point::<B>()?,
                d: r.scalar::<B>()?,
                gamma: r.scalar::<B>()?,
            }),
            MessageType::DirectoryPush => {
                let count = u16::from_be_bytes(r.array::<2>()?) as usize;
                let entry_len = 2 * self.point_len() + 2 * self.scalar_len();
                if r.buf.len() != count * entry_len {
                    return Err(DecodeError::Length("directory entry count"));
                }
                let mut entries = Vec::with_capacity(count);
                for _ in 0..count {
                    entries.push(DirectoryEntry {
                        acd: r.point::<B>()?,
                        sigma1: r.scalar::<B>()?,
                        public: r.point::<B>()?,
                        delta: r.scalar::<B>()?,
                    });
                }
                WireMessage::DirectoryPush(entries)
            }
            MessageType::ServiceRequest => {
                if body.len() != self.service_request_body_len() {
                    return Err(DecodeError::Length("service request"));
                }
                let r2_point = r.point::<B>()?;
                let c = r.scalar::<B>()?;
                let r1_point = r.point::<B>()?;
                let r_1 = r.take(self.payload_len)?.to_vec();
                let r_2 = r.take(self.payload_len)?.to_vec();
                let u = r.point::<B>()?;
                let timestamp_ms = u64::from_be_bytes(r.array::<8>()?);
                WireMessage::ServiceRequest(ServiceRequest {
                    r2_point,
                    sigma: Ciphertext {
                        c,
                        r1_point,
                        r_1,
                        r_2,
                        u,
                    },
                    timestamp_ms,
                })
            }
            MessageType::MacConfirm => WireMessage::MacConfirm(MacConfirmation {
                tag: MacTag(r.array::<MAC_LEN>()?),
            }),
            MessageType::Reject => WireMessage::Reject {
                code: r.array::<1>()?[0],
            },
        };
        if !r.buf.is_empty() {
            return Err(DecodeError::Length("trailing bytes"));
        }
        Ok(msg)
    }
}

fn put_id(out: &mut Vec<u8>, id: &[u8]) -> Result<(), EncodeError> {
    let len = u16::try_from(id.len()).map_err(|_| EncodeError::IdentityTooLong)?;
    out.extend(len.to_be_bytes());
    out.extend_from_slice(id);
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DecodeError> {
        if self.buf.len() < n {
            return Err(DecodeError::Length("truncated field"));
        }
        let (head, rest) = self.buf.split_at(n);
        self.buf = rest;
        Ok(head)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    fn id(&mut self) -> Result<Vec<u8>, DecodeError> {
        let len = u16::from_be_bytes(self.array::<2>()?) as usize;
        Ok(self.take(len)?.to_vec())
    }

    fn point<B: PairingBackend>(&mut self) -> Result<B::G1, DecodeError> {
        let len = <B::G1 as GroupElement<B::Scalar>>::ENCODED_LEN;
        B::G1::from_bytes(self.take(len)?).ok_or(DecodeError::Element("group element"))
    }

    fn scalar<B: PairingBackend>(&mut self) -> Result<B::Scalar, DecodeError> {
        let len = <B::Scalar as ScalarField>::ENCODED_LEN;
        B::Scalar::from_bytes(self.take(len)?).ok_or(DecodeError::Element("scalar"))
    }
}
