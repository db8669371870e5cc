//! Symmetric bilinear pairing arithmetic.
//!
//! The protocol is written against [`PairingBackend`]: an additive source
//! group `G1` of prime order `q` with a fixed generator `P`, a multiplicative
//! target group, the scalar field `Z_q`, and a map `e: G1 x G1 -> Gt`.
//!
//! Two backends are provided. [`toy::ToyBackend`] keeps every element as its
//! discrete logarithm, which makes it an oracle for algebraic identities and
//! worthless for security. [`bls::Bls12`] runs on BLS12-381.
//!
//! Scalar multiplication in `G1`, pairings and target-group exponentiation
//! are reported to [`crate::ops`] by the implementations themselves.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Pow, Zero};
use rand_core::{CryptoRng, RngCore};

pub mod bls;
pub mod toy;

/// An element of `Z_q`.
pub trait ScalarField:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Width of the canonical big-endian encoding.
    const ENCODED_LEN: usize;

    fn from_u64(value: u64) -> Self;

    /// Reduce a 512-bit big-endian integer modulo `q`.
    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self;

    fn invert(&self) -> Option<Self>;

    /// Fixed-width big-endian encoding.
    fn to_bytes(&self) -> Vec<u8>;

    /// Inverse of [`ScalarField::to_bytes`]. Rejects wrong lengths and
    /// non-canonical values (`>= q`).
    fn from_bytes(bytes: &[u8]) -> Option<Self>;

    /// Uniform sample from `Z_q*`.
    fn random<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut wide = [0u8; 64];
        loop {
            rng.fill_bytes(&mut wide);
            let s = Self::from_uniform_bytes(&wide);
            if !s.is_zero() {
                return s;
            }
        }
    }
}

/// An element of the additive source group.
pub trait GroupElement<S: ScalarField>:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<S, Output = Self>
{
    const ENCODED_LEN: usize;

    fn generator() -> Self;

    fn to_bytes(&self) -> Vec<u8>;

    /// Rejects wrong lengths, off-curve and out-of-subgroup encodings.
    fn from_bytes(bytes: &[u8]) -> Option<Self>;
}

/// An element of the multiplicative target group.
pub trait TargetElement<S: ScalarField>:
    Copy + Eq + Debug + Send + Sync + 'static + One + Mul<Output = Self> + Pow<S, Output = Self>
{
}

/// Capabilities and parameters of one pairing instantiation.
pub trait PairingBackend: Copy + Debug + Default + Send + Sync + 'static {
    type Scalar: ScalarField;
    type G1: GroupElement<Self::Scalar>;
    type Gt: TargetElement<Self::Scalar>;

    const NAME: &'static str;
    /// Elements expose their discrete logarithms. Test use only.
    const ORACLE_DLOG: bool;
    /// Nominal security level in bits.
    const SECURITY_BITS: u32;
    /// Point width if only one source group had to be sent.
    const COMPACT_POINT_LEN: usize = <Self::G1 as GroupElement<Self::Scalar>>::ENCODED_LEN;

    /// The group order `q` in decimal.
    fn order() -> String;

    fn pair(x: &Self::G1, y: &Self::G1) -> Self::Gt;
}

pub(crate) fn horner_512(bytes: &[u8; 64], mut step: impl FnMut(u64)) {
    for chunk in bytes.chunks_exact(8) {
        step(u64::from_be_bytes(chunk.try_into().expect("8-byte chunk")));
    }
}
