//! BLS12-381 backend.
//!
//! BLS12-381 has an asymmetric pairing `G1 x G2 -> Gt`, while the protocol
//! is written for a symmetric one. Each protocol point is kept as a mirrored
//! pair `(k·P1, k·P2)`: the same scalar applied to both source-group
//! generators. Group operations act on both halves, and `e(X, Y)` pairs the
//! `G1` half of `X` with the `G2` half of `Y`, so
//! `e(aP, bP) = e(P1, P2)^(ab)` holds exactly as in the symmetric setting.

use std::ops::{Add, Mul, Neg, Sub};

use blstrs::{G1Affine, G1Projective, G2Affine, G2Projective};
use ff::Field;
use group::{Curve, Group};
use num_traits::{One, Pow, Zero};

use super::{horner_512, GroupElement, PairingBackend, ScalarField, TargetElement};
use crate::ops::{self, Op};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Bls12;

const G1_COMPRESSED: usize = 48;
const G2_COMPRESSED: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlsScalar(blstrs::Scalar);

/// `(k·P1, k·P2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MirroredPoint {
    g1: G1Projective,
    g2: G2Projective,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlsGt(blstrs::Gt);

impl BlsScalar {
    pub fn inner(&self) -> &blstrs::Scalar {
        &self.0
    }
}

impl MirroredPoint {
    pub fn g1(&self) -> &G1Projective {
        &self.g1
    }

    pub fn g2(&self) -> &G2Projective {
        &self.g2
    }
}

impl Add for BlsScalar {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        BlsScalar(self.0 + rhs.0)
    }
}

impl Sub for BlsScalar {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        BlsScalar(self.0 - rhs.0)
    }
}

impl Mul for BlsScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        BlsScalar(self.0 * rhs.0)
    }
}

impl Neg for BlsScalar {
    type Output = Self;
    fn neg(self) -> Self {
        BlsScalar(-self.0)
    }
}

impl Zero for BlsScalar {
    fn zero() -> Self {
        BlsScalar(blstrs::Scalar::ZERO)
    }
    fn is_zero(&self) -> bool {
        bool::from(self.0.is_zero())
    }
}

impl One for BlsScalar {
    fn one() -> Self {
        BlsScalar(blstrs::Scalar::ONE)
    }
}

impl ScalarField for BlsScalar {
    const ENCODED_LEN: usize = 32;

    fn from_u64(value: u64) -> Self {
        BlsScalar(blstrs::Scalar::from(value))
    }

    fn from_uniform_bytes(bytes: &[u8; 64]) -> Self {
        let radix = blstrs::Scalar::from(u64::MAX) + blstrs::Scalar::ONE;
        let mut acc = blstrs::Scalar::ZERO;
        horner_512(bytes, |limb| {
            acc = acc * radix + blstrs::Scalar::from(limb);
        });
        BlsScalar(acc)
    }

    fn invert(&self) -> Option<Self> {
        Option::from(self.0.invert()).map(BlsScalar)
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.0.to_bytes_be().to_vec()
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let arr: &[u8; 32] = bytes.try_into().ok()?;
        Option::from(blstrs::Scalar::from_bytes_be(arr)).map(BlsScalar)
    }
}

impl Add for MirroredPoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        MirroredPoint {
            g1: self.g1 + rhs.g1,
            g2: self.g2 + rhs.g2,
        }
    }
}

impl Sub for MirroredPoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        MirroredPoint {
            g1: self.g1 - rhs.g1,
            g2: self.g2 - rhs.g2,
        }
    }
}

impl Neg for MirroredPoint {
    type Output = Self;
    fn neg(self) -> Self {
        MirroredPoint {
            g1: -self.g1,
            g2: -self.g2,
        }
    }
}

impl Mul<BlsScalar> for MirroredPoint {
    type Output = Self;
    fn mul(self, k: BlsScalar) -> Self {
        ops::record(Op::ScalarMul);
        MirroredPoint {
            g1: self.g1 * k.0,
            g2: self.g2 * k.0,
        }
    }
}

impl Zero for MirroredPoint {
    fn zero() -> Self {
        MirroredPoint {
            g1: G1Projective::identity(),
            g2: G2Projective::identity(),
        }
    }
    fn is_zero(&self) -> bool {
        bool::from(self.g1.is_identity()) && bool::from(self.g2.is_identity())
    }
}

impl GroupElement<BlsScalar> for MirroredPoint {
    /// Compressed `G1` half followed by compressed `G2` half.
    const ENCODED_LEN: usize = G1_COMPRESSED + G2_COMPRESSED;

    fn generator() -> Self {
        MirroredPoint {
            g1: G1Projective::generator(),
            g2: G2Projective::generator(),
        }
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::ENCODED_LEN);
        out.extend_from_slice(&self.g1.to_affine().to_compressed());
        out.extend_from_slice(&self.g2.to_affine().to_compressed());
        out
    }

    fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != Self::ENCODED_LEN {
            return None;
        }
        let (a, b) = bytes.split_at(G1_COMPRESSED);
        let g1: Option<G1Affine> = Option::from(G1Affine::from_compressed(a.try_into().ok()?));
        let g2: Option<G2Affine> = Option::from(G2Affine::from_compressed(b.try_into().ok()?));
        Some(MirroredPoint {
            g1: g1?.into(),
            g2: g2?.into(),
        })
    }
}

impl Mul for BlsGt {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Self {
        // blstrs writes Gt additively.
        BlsGt(self.0 + rhs.0)
    }
}

impl One for BlsGt {
    fn one() -> Self {
        BlsGt(blstrs::Gt::identity())
    }
}

impl Pow<BlsScalar> for BlsGt {
    type Output = Self;
    fn pow(self, k: BlsScalar) -> Self {
        ops::record(Op::GtExp);
        BlsGt(self.0 * k.0)
    }
}

impl TargetElement<BlsScalar> for BlsGt {}

impl PairingBackend for Bls12 {
    type Scalar = BlsScalar;
    type G1 = MirroredPoint;
    type Gt = BlsGt;

    const NAME: &'static str = "bls12-381";
    const ORACLE_DLOG: bool = false;
    const SECURITY_BITS: u32 = 128;
    const COMPACT_POINT_LEN: usize = G1_COMPRESSED;

    fn order() -> String {
        "52435875175126190479447740508185965837690552500527637822603658699938581184513".into()
    }

    fn pair(x: &MirroredPoint, y: &MirroredPoint) -> BlsGt {
        ops::record(Op::Pairing);
        BlsGt(blstrs::pairing(&x.g1.to_affine(), &y.g2.to_affine()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    type P = MirroredPoint;

    #[test]
    fn order_annihilates_generator() {
        // q ≡ 0 in the field, so multiply by (q - 1) and add P once more.
        let minus_one = -BlsScalar::one();
        assert_eq!(P::generator() * minus_one + P::generator(), P::zero());
    }

    #[test]
    fn bilinear_and_non_degenerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..4 {
            let a = BlsScalar::random(&mut rng);
            let b = BlsScalar::random(&mut rng);
            let lhs = Bls12::pair(&(P::generator() * a), &(P::generator() * b));
            let rhs = Bls12::pair(&P::generator(), &P::generator()).pow(a * b);
            assert_eq!(lhs, rhs);
        }
        assert!(!Bls12::pair(&P::generator(), &P::generator()).is_one());
        assert!(Bls12::pair(&P::zero(), &P::generator()).is_one());
    }

    #[test]
    fn encoding_round_trip_and_rejection() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let x = P::generator() * BlsScalar::random(&mut rng);
        let bytes = x.to_bytes();
        assert_eq!(bytes.len(), 144);
        assert_eq!(P::from_bytes(&bytes), Some(x));
        assert_eq!(P::from_bytes(&P::zero().to_bytes()), Some(P::zero()));
        assert!(P::from_bytes(&bytes[1..]).is_none());
        let mut bad = bytes.clone();
        bad[5] ^= 0x40;
        assert!(P::from_bytes(&bad).is_none());

        let s = BlsScalar::random(&mut rng);
        assert_eq!(BlsScalar::from_bytes(&s.to_bytes()), Some(s));
        assert!(BlsScalar::from_bytes(&[0xff; 32]).is_none());
    }

    #[test]
    fn wide_reduction_matches_small_values() {
        let mut wide = [0u8; 64];
        wide[63] = 7;
        wide[55] = 1; // 2^64
        let expected = BlsScalar::from_u64(7) + BlsScalar::from_u64(u64::MAX) + BlsScalar::one();
        assert_eq!(BlsScalar::from_uniform_bytes(&wide), expected);
    }
}
