//! Pairing simulated in the exponent.
//!
//! A `G1` element `aP` is stored as `a`, a target element `g^c` as `c`, and
//! `e(aP, bP) = g^(ab)`. All identities of a symmetric pairing hold exactly,
//! and every discrete log is readable, so tests can check protocol algebra
//! directly against exponent arithmetic. Offers no security at all.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Pow, Zero};

use super::{horner_512, GroupElement, PairingBackend, ScalarField, TargetElement};
use crate::ops::{self, Op};

/// Discrete-log backend over `Z_Q`. `Q` must be prime and below 2^63.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ToyBackend<const Q: u64>;

/// Default desk-scale modulus.
pub type Toy = ToyBackend<1009>;

/// Same construction over the Mersenne prime 2^61 - 1. Accidental collisions
/// become negligible while elements stay transparent.
pub type ToyWide = ToyBackend<2_305_843_009_213_693_951>;

const fn byte_width(q: u64) -> usize {
    let bits = 64 - (q - 1).leading_zeros() as usize;
    bits.div_ceil(8)
}

const fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

const fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + b as u128) % q as u128) as u64
}

const fn neg_mod(a: u64, q: u64) -> u64 {
    if a == 0 {
        0
    } else {
        q - a
    }
}

fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

fn encode(value: u64, width: usize) -> Vec<u8> {
    value.to_be_bytes()[8 - width..].to_vec()
}

fn decode(bytes: &[u8], width: usize, q: u64) -> Option<u64> {
    if bytes.len() != width {
        return None;
    }
    let mut buf = [0u8; 8];
    buf[8 - width..].copy_from_slice(bytes);
    let value = u64::from_be_bytes(buf);
    (value < q).then_some(value)
}

macro_rules! residue_type {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name<const Q: u64>(u64);

        impl<const Q: u64> fmt::Debug for $name<Q> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({} mod {})", stringify!($name), self.0, Q)
            }
        }
    };
}

residue_type!(ToyScalar, "Residue modulo `Q`.");
residue_type!(ToyPoint, "`aP`, stored as `a`.");
residue_type!(ToyGt, "`g^c`, stored as `c`.");

impl<const Q: u64> ToyScalar<Q> {
    pub const fn new(value: u64) -> Self {
        ToyScalar(value % Q)
    }

    pub const fn value(&self) -> u64 {
        self.0
    }
}

impl<const Q: u64> ToyPoint<Q> {
    pub const fn from_dlog(dlog: u64) -> Self {
        ToyPoint(dlog % Q)
    }

    /// The discrete log of this element to base `P`.
    pub const fn dlog(&self) -> u64 {
        self.0
    }
}

impl<const Q: u64> ToyGt<Q> {
    pub const fn from_dlog(dlog: u64) -> Self {
        ToyGt(dlog % Q)
    }

    /// The discrete log of this element to base `g = e(P, P)`.
    pub const fn dlog(&self) -> u64 {
        self.0
    }
}

impl<const Q: u64> Add for ToyScalar<Q> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ToyScalar(add_mod(self.0, rhs.0, Q))
    }
}

impl<const Q: u64> Sub for ToyScalar<Q> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ToyScalar(add_mod(self.0, neg_mod(rhs.0, Q), Q))
    }
}

impl<const Q: u64> Mul for ToyScalar<Q> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ToyScalar(mul_mod(self.0, rhs.0, Q))
    }
}

impl<const Q: u64> Neg for ToyScalar<Q> {
    type Output = Self;
    fn neg(self) -> Self {
        ToyScalar(neg_mod(self.0, Q))
    }
}

impl<const Q: u64> Zero for ToyScalar<Q> {
    fn zero() -> Self {
        ToyScalar(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl<const Q: u64> One for ToyScalar<Q> {
    fn one() -> Self {
        ToyScalar(1 % Q)
    }
}

impl<const Q: u64> ScalarField for ToyScalar<Q> {
    const ENCODED_LEN: usize = byte_width(Q);

    fn from_u64(value: u64) -> Self {
        ToyScalar(value % Q)
    }

    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self {
        let mut acc: u128 = 0;
        horner_512(bytes, |limb| {
            acc = ((acc << 64) | limb as u128) % Q as u128;
        });
        ToyScalar(acc as u64)
    }

    fn invert(&self) -> Option<Self> {
        (self.0 != 0).then(|| ToyScalar(pow_mod(self.0, Q - 2, Q)))
    }

    fn to_bytes(&self) -> Vec<u8> {
        encode(self.0, Self::ENCODED_LEN)
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        decode(bytes, Self::ENCODED_LEN, Q).map(ToyScalar)
    }
}

impl<const Q: u64> Add for ToyPoint<Q> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        ToyPoint(add_mod(self.0, rhs.0, Q))
    }
}

impl<const Q: u64> Sub for ToyPoint<Q> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        ToyPoint(add_mod(self.0, neg_mod(rhs.0, Q), Q))
    }
}

impl<const Q: u64> Neg for ToyPoint<Q> {
    type Output = Self;
    fn neg(self) -> Self {
        ToyPoint(neg_mod(self.0, Q))
    }
}

impl<const Q: u64> Mul<ToyScalar<Q>> for ToyPoint<Q> {
    type Output = Self;
    fn mul(self, k: ToyScalar<Q>) -> Self {
        ops::record(Op::ScalarMul);
        ToyPoint(mul_mod(self.0, k.0, Q))
    }
}

impl<const Q: u64> Zero for ToyPoint<Q> {
    fn zero() -> Self {
        ToyPoint(0)
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}

impl<const Q: u64> GroupElement<ToyScalar<Q>> for ToyPoint<Q> {
    const ENCODED_LEN: usize = byte_width(Q);

    fn generator() -> Self {
        ToyPoint(1)
    }

    fn to_bytes(&self) -> Vec<u8> {
        encode(self.0, Self::ENCODED_LEN)
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        decode(bytes, Self::ENCODED_LEN, Q).map(ToyPoint)
    }
}

impl<const Q: u64> Mul for ToyGt<Q> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        ToyGt(add_mod(self.0, rhs.0, Q))
    }
}

impl<const Q: u64> One for ToyGt<Q> {
    fn one() -> Self {
        ToyGt(0)
    }
}

impl<const Q: u64> Pow<ToyScalar<Q>> for ToyGt<Q> {
    type Output = Self;
    fn pow(self, k: ToyScalar<Q>) -> Self {
        ops::record(Op::GtExp);
        ToyGt(mul_mod(self.0, k.0, Q))
    }
}

impl<const Q: u64> TargetElement<ToyScalar<Q>> for ToyGt<Q> {}

impl<const Q: u64> PairingBackend for ToyBackend<Q> {
    type Scalar = ToyScalar<Q>;
    type G1 = ToyPoint<Q>;
    type Gt = ToyGt<Q>;

    const NAME: &'static str = "toy";
    const ORACLE_DLOG: bool = true;
    const SECURITY_BITS: u32 = 64 - Q.leading_zeros() - 1;

    fn order() -> String {
        Q.to_string()
    }

    fn pair(x: &ToyPoint<Q>, y: &ToyPoint<Q>) -> ToyGt<Q> {
        ops::record(Op::Pairing);
        ToyGt(mul_mod(x.0, y.0, Q))
    }
}
