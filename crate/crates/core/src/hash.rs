//! The protocol hash functions `H0`..`H4` and the confirmation MAC.
//!
//! Every function is SHAKE256 under its own domain tag. Inputs are absorbed
//! as `lp(tag) || counter(u32 BE) || lp(input_1) || lp(input_2) ...`, where
//! `lp(x)` is `x` preceded by its length as a `u32` big-endian. Hashes into
//! `Z_q*` squeeze 64 bytes, reduce modulo `q`, and retry with the next counter
//! value on zero. `H3` squeezes exactly `n/8` bytes with counter 0.
//!
//! The MAC is HMAC-SHA3-256 over `lp(MAC tag) || lp(message)`.

use std::fmt;
use std::marker::PhantomData;

use hmac::{Hmac, Mac};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Sha3_256, Shake256};

use crate::algebra::{GroupElement, PairingBackend, ScalarField};
use crate::ops::{self, Op};

pub const TAG_H0: &[u8] = b"HETAUTH-H0";
pub const TAG_H1: &[u8] = b"HETAUTH-H1";
pub const TAG_H2: &[u8] = b"HETAUTH-H2";
pub const TAG_H3: &[u8] = b"HETAUTH-H3";
pub const TAG_H4: &[u8] = b"HETAUTH-H4";
pub const TAG_MAC: &[u8] = b"HETAUTH-MAC";

pub const MAC_LEN: usize = 32;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct MacTag(pub [u8; MAC_LEN]);

impl fmt::Debug for MacTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MacTag(")?;
        for b in &self.0[..8] {
            write!(f, "{b:02x}")?;
        }
        write!(f, "..)")
    }
}

/// Append `bytes` with a 4-byte big-endian length prefix.
pub fn push_length_prefixed(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u32).to_be_bytes());
    out.extend_from_slice(bytes);
}

fn absorb(tag: &[u8], counter: u32, inputs: &[&[u8]]) -> impl XofReader {
    let mut shake = Shake256::default();
    shake.update(&(tag.len() as u32).to_be_bytes());
    shake.update(tag);
    shake.update(&counter.to_be_bytes());
    for input in inputs {
        shake.update(&(input.len() as u32).to_be_bytes());
        shake.update(input);
    }
    shake.finalize_xof()
}

/// XOR `rhs` into `lhs`. Both must have the same length.
pub fn xor(lhs: &[u8], rhs: &[u8]) -> Vec<u8> {
    assert_eq!(lhs.len(), rhs.len(), "xor operands differ in length");
    lhs.iter().zip(rhs).map(|(a, b)| a ^ b).collect()
}

/// The hash functions of one deployment, bound to a backend's scalar field
/// and to the payload width `n`.
pub struct HashSuite<B> {
    payload_bits: usize,
    _backend: PhantomData<fn() -> B>,
}

impl<B> Clone for HashSuite<B> {
    fn clone(&self) -> Self {
        HashSuite {
            payload_bits: self.payload_bits,
            _backend: PhantomData,
        }
    }
}

impl<B> fmt::Debug for HashSuite<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HashSuite")
            .field("payload_bits", &self.payload_bits)
            .finish()
    }
}

impl<B: PairingBackend> HashSuite<B> {
    /// `payload_bits` must be a positive multiple of 8; callers validate.
    pub fn new(payload_bits: usize) -> Self {
        debug_assert!(payload_bits > 0 && payload_bits.is_multiple_of(8));
        HashSuite {
            payload_bits,
            _backend: PhantomData,
        }
    }

    pub fn payload_bits(&self) -> usize {
        self.payload_bits
    }

    pub fn payload_len(&self) -> usize {
        self.payload_bits / 8
    }

    fn to_scalar(tag: &[u8], inputs: &[&[u8]]) -> B::Scalar {
        let mut wide = [0u8; 64];
        for counter in 0u32.. {
            absorb(tag, counter, inputs).read(&mut wide);
            let s = B::Scalar::from_uniform_bytes(&wide);
            if !num_traits::Zero::is_zero(&s) {
                return s;
            }
        }
        unreachable!("counter space exhausted")
    }

    /// `H0: {0,1}* -> Z_q*`.
    pub fn h0(&self, id: &[u8]) -> B::Scalar {
        ops::record(Op::Hash);
        Self::to_scalar(TAG_H0, &[id])
    }

    /// `H1: {0,1}* x G1 -> Z_q*`.
    pub fn h1(&self, msg: &[u8], point: &B::G1) -> B::Scalar {
        self.h1_bytes(msg, &point.to_bytes())
    }

    /// `H1` over two already-encoded components.
    pub fn h1_bytes(&self, left: &[u8], right: &[u8]) -> B::Scalar {
        ops::record(Op::Hash);
        Self::to_scalar(TAG_H1, &[left, right])
    }

    /// `H2: {0,1}* x {0,1}* -> Z_q*`. Order-sensitive.
    pub fn h2(&self, a: &[u8], b: &[u8]) -> B::Scalar {
        ops::record(Op::Hash);
        Self::to_scalar(TAG_H2, &[a, b])
    }

    /// `H3: {0,1}* -> {0,1}^n`.
    pub fn h3(&self, x: &[u8]) -> Vec<u8> {
        ops::record(Op::Hash);
        let mut out = vec![0u8; self.payload_len()];
        absorb(TAG_H3, 0, &[x]).read(&mut out);
        out
    }

    /// `H4: {0,1}^n -> Z_q*`.
    pub fn h4(&self, m: &[u8]) -> B::Scalar {
        ops::record(Op::Hash);
        Self::to_scalar(TAG_H4, &[m])
    }

    pub fn mac(&self, key: &[u8], msg: &[u8]) -> MacTag {
        ops::record(Op::Mac);
        let tag = Self::hmac(key, msg).finalize().into_bytes();
        MacTag(tag.into())
    }

    /// Constant-time check of `tag` against `MAC_key(msg)`.
    pub fn verify_mac(&self, key: &[u8], msg: &[u8], tag: &MacTag) -> bool {
        ops::record(Op::Mac);
        Self::hmac(key, msg).verify_slice(&tag.0).is_ok()
    }

    fn hmac(key: &[u8], msg: &[u8]) -> Hmac<Sha3_256> {
        let mut mac =
            <Hmac<Sha3_256> as Mac>::new_from_slice(key).expect("HMAC takes keys of any length");
        let mut framed = Vec::with_capacity(TAG_MAC.len() + msg.len() + 8);
        push_length_prefixed(&mut framed, TAG_MAC);
        push_length_prefixed(&mut framed, msg);
        Mac::update(&mut mac, &framed);
        mac
    }
}
