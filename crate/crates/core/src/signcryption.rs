//! Stateless algorithms of the scheme: system setup, user key generation and
//! credential issuance, certificateless partial-key issuance, PKI-to-CLC
//! signcryption, unsigncryption, and session derivation.
//!
//! Notation follows the protocol: `P` is the generator, `P_pub = sP` the
//! gateway's public key, `Acd` the user's anonymous account point.

use std::fmt;

use rand_core::{CryptoRng, RngCore};
use thiserror::Error;

use crate::algebra::{GroupElement, PairingBackend, ScalarField};
use crate::hash::{push_length_prefixed, xor, HashSuite, MacTag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("payload width must be a positive multiple of 8 bits, got {0}")]
    InvalidPayloadBits(usize),
    #[error("payload must be {expected} bytes, got {actual}")]
    PayloadLength { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum UnsigncryptError {
    #[error("ciphertext field has the wrong length")]
    MalformedLengths,
    #[error("signature check failed")]
    BadSignature,
}

/// Public parameters published by the gateway.
pub struct SystemParams<B: PairingBackend> {
    pub generator: B::G1,
    pub p_pub: B::G1,
    /// `g = e(P, P)`.
    pub g: B::Gt,
    /// Nominal security level `l` in bits.
    pub security_bits: u32,
    /// Allowed transmission delay `Δt` in milliseconds.
    pub delta_t_ms: u64,
    pub hash: HashSuite<B>,
}

impl<B: PairingBackend> Clone for SystemParams<B> {
    fn clone(&self) -> Self {
        SystemParams {
            generator: self.generator,
            p_pub: self.p_pub,
            g: self.g,
            security_bits: self.security_bits,
            delta_t_ms: self.delta_t_ms,
            hash: self.hash.clone(),
        }
    }
}

impl<B: PairingBackend> fmt::Debug for SystemParams<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemParams")
            .field("backend", &B::NAME)
            .field("p_pub", &self.p_pub)
            .field("security_bits", &self.security_bits)
            .field("payload_bits", &self.payload_bits())
            .field("delta_t_ms", &self.delta_t_ms)
            .finish()
    }
}

impl<B: PairingBackend> SystemParams<B> {
    pub fn payload_bits(&self) -> usize {
        self.hash.payload_bits()
    }

    /// `n / 8`: width of `m`, `k`, `r_1` and `r_2`.
    pub fn payload_len(&self) -> usize {
        self.hash.payload_len()
    }

    pub fn scalar_len(&self) -> usize {
        B::Scalar::ENCODED_LEN
    }

    pub fn point_len(&self) -> usize {
        B::G1::ENCODED_LEN
    }
}

/// The gateway's master secret `s`.
pub struct MasterKey<B: PairingBackend> {
    s: B::Scalar,
}

impl<B: PairingBackend> MasterKey<B> {
    pub fn secret(&self) -> &B::Scalar {
        &self.s
    }
}

impl<B: PairingBackend> Clone for MasterKey<B> {
    fn clone(&self) -> Self {
        MasterKey { s: self.s }
    }
}

impl<B: PairingBackend> fmt::Debug for MasterKey<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterKey(..)")
    }
}

/// A PKI user's identity and key pair, `PK_p = x_p·P`.
pub struct UserKeyPair<B: PairingBackend> {
    pub id: Vec<u8>,
    secret: B::Scalar,
    pub public: B::G1,
}

impl<B: PairingBackend> UserKeyPair<B> {
    pub fn secret(&self) -> &B::Scalar {
        &self.secret
    }
}

impl<B: PairingBackend> Clone for UserKeyPair<B> {
    fn clone(&self) -> Self {
        UserKeyPair {
            id: self.id.clone(),
            secret: self.secret,
            public: self.public,
        }
    }
}

impl<B: PairingBackend> fmt::Debug for UserKeyPair<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserKeyPair")
            .field("id", &String::from_utf8_lossy(&self.id))
            .field("public", &self.public)
            .finish_non_exhaustive()
    }
}

/// The account triple `{Acd, σ1, δ}` issued by the gateway.
#[derive(Debug)]
pub struct UserCredential<B: PairingBackend> {
    pub acd: B::G1,
    pub sigma1: B::Scalar,
    pub delta: B::Scalar,
}

impl<B: PairingBackend> Clone for UserCredential<B> {
    fn clone(&self) -> Self {
        UserCredential {
            acd: self.acd,
            sigma1: self.sigma1,
            delta: self.delta,
        }
    }
}

impl<B: PairingBackend> PartialEq for UserCredential<B> {
    fn eq(&self, other: &Self) -> bool {
        self.acd == other.acd && self.sigma1 == other.sigma1 && self.delta == other.delta
    }
}

/// `{T, d, γ}` from the gateway's partial-private-key algorithm.
#[derive(Debug)]
pub struct PartialKey<B: PairingBackend> {
    pub t_point: B::G1,
    pub d: B::Scalar,
    pub gamma: B::Scalar,
}

impl<B: PairingBackend> Clone for PartialKey<B> {
    fn clone(&self) -> Self {
        PartialKey {
            t_point: self.t_point,
            d: self.d,
            gamma: self.gamma,
        }
    }
}

impl<B: PairingBackend> PartialEq for PartialKey<B> {
    fn eq(&self, other: &Self) -> bool {
        self.t_point == other.t_point && self.d == other.d && self.gamma == other.gamma
    }
}

/// A sensor's composite public key `PK_c = {T, PK_c1, γ}` plus its identity.
#[derive(Debug)]
pub struct SensorPublicKey<B: PairingBackend> {
    pub id: Vec<u8>,
    pub t_point: B::G1,
    pub pk_c1: B::G1,
    pub gamma: B::Scalar,
}

impl<B: PairingBackend> Clone for SensorPublicKey<B> {
    fn clone(&self) -> Self {
        SensorPublicKey {
            id: self.id.clone(),
            t_point: self.t_point,
            pk_c1: self.pk_c1,
            gamma: self.gamma,
        }
    }
}

impl<B: PairingBackend> PartialEq for SensorPublicKey<B> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.t_point == other.t_point
            && self.pk_c1 == other.pk_c1
            && self.gamma == other.gamma
    }
}

/// Full certificateless key material of a sensor: `sk_c = {x_c, d}`.
pub struct SensorKeyMaterial<B: PairingBackend> {
    pub id: Vec<u8>,
    pub t_point: B::G1,
    d: B::Scalar,
    pub gamma: B::Scalar,
    x_c: B::Scalar,
    pub pk_c1: B::G1,
}

impl<B: PairingBackend> SensorKeyMaterial<B> {
    pub fn public_key(&self) -> SensorPublicKey<B> {
        SensorPublicKey {
            id: self.id.clone(),
            t_point: self.t_point,
            pk_c1: self.pk_c1,
            gamma: self.gamma,
        }
    }

    pub fn partial_secret(&self) -> &B::Scalar {
        &self.d
    }

    pub fn secret_value(&self) -> &B::Scalar {
        &self.x_c
    }
}

impl<B: PairingBackend> Clone for SensorKeyMaterial<B> {
    fn clone(&self) -> Self {
        SensorKeyMaterial {
            id: self.id.clone(),
            t_point: self.t_point,
            d: self.d,
            gamma: self.gamma,
            x_c: self.x_c,
            pk_c1: self.pk_c1,
        }
    }
}

impl<B: PairingBackend> fmt::Debug for SensorKeyMaterial<B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SensorKeyMaterial")
            .field("id", &String::from_utf8_lossy(&self.id))
            .field("t_point", &self.t_point)
            .field("pk_c1", &self.pk_c1)
            .finish_non_exhaustive()
    }
}

/// `σ = {c, R_1, r_1, r_2, U}`.
#[derive(Debug)]
pub struct Ciphertext<B: PairingBackend> {
    pub c: B::Scalar,
    pub r1_point: B::G1,
    pub r_1: Vec<u8>,
    pub r_2: Vec<u8>,
    pub u: B::G1,
}

impl<B: PairingBackend> Clone for Ciphertext<B> {
    fn clone(&self) -> Self {
        Ciphertext {
            c: self.c,
            r1_point: self.r1_point,
            r_1: self.r_1.clone(),
            r_2: self.r_2.clone(),
            u: self.u,
        }
    }
}

impl<B: PairingBackend> PartialEq for Ciphertext<B> {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
            && self.r1_point == other.r1_point
            && self.r_1 == other.r_1
            && self.r_2 == other.r_2
            && self.u == other.u
    }
}

/// Output of [`signcrypt`].
#[derive(Debug)]
pub struct Signcrypted<B: PairingBackend> {
    /// Account protection point `R_2 = R_1 + Acd`.
    pub r2_point: B::G1,
    pub sigma: Ciphertext<B>,
}

/// What the sensor learns from `σ` before any signature check.
#[derive(Debug)]
pub struct Recovered<B: PairingBackend> {
    pub r1_point: B::G1,
    pub k: Vec<u8>,
    pub m: Vec<u8>,
    pub r: B::Scalar,
}

/// Accepted output of [`unsigncrypt`].
#[derive(Debug)]
pub struct Unsigncrypted<B: PairingBackend> {
    pub m: Vec<u8>,
    pub acd: B::G1,
    pub r1_point: B::G1,
}

/// A session key `H2(h_1, R_1)`, canonically encoded.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionKey(Vec<u8>);

impl SessionKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// First 8 bytes of SHA3-256 of the key, hex encoded.
    pub fn fingerprint(&self) -> String {
        use sha3::Digest;
        let digest = sha3::Sha3_256::digest(&self.0);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionKey({})", self.fingerprint())
    }
}

/// `(h_1, key, M_1)` as derived by either party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionMaterial {
    /// Canonical encoding of the digest `h_1`.
    pub h1: Vec<u8>,
    pub key: SessionKey,
    pub tag: MacTag,
}

/// Inputs binding a session: `ID_c || t_c` and `Acd || c`.
#[derive(Debug)]
pub struct SessionInputs<'a, B: PairingBackend> {
    pub sensor_id: &'a [u8],
    pub timestamp_ms: u64,
    pub acd: &'a B::G1,
    pub c: &'a B::Scalar,
    pub r1_point: &'a B::G1,
}

/// System initialization: pick `s`, publish `P_pub = sP` and `g = e(P, P)`.
pub fn setup<B, R>(
    payload_bits: usize,
    delta_t_ms: u64,
    rng: &mut R,
) -> Result<(SystemParams<B>, MasterKey<B>), CryptoError>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    if payload_bits == 0 || !payload_bits.is_multiple_of(8) {
        return Err(CryptoError::InvalidPayloadBits(payload_bits));
    }
    let generator = B::G1::generator();
    let s = B::Scalar::random(rng);
    let params = SystemParams {
        generator,
        p_pub: generator * s,
        g: B::pair(&generator, &generator),
        security_bits: B::SECURITY_BITS,
        delta_t_ms,
        hash: HashSuite::new(payload_bits),
    };
    Ok((params, MasterKey { s }))
}

/// PKI key generation: `sk_p = x_p`, `PK_p = x_p·P`.
pub fn user_keygen<B, R>(id: &[u8], params: &SystemParams<B>, rng: &mut R) -> UserKeyPair<B>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let secret = B::Scalar::random(rng);
    UserKeyPair {
        id: id.to_vec(),
        secret,
        public: params.generator * secret,
    }
}

/// Gateway side of user registration.
///
/// `Acd = (w_1 + H0(ID_p))·P`, `δ = H1(ID_p, PK_p)`, `σ1 = w_1 + H0(ID_p) + sδ`.
pub fn issue_credential<B, R>(
    master: &MasterKey<B>,
    id: &[u8],
    public: &B::G1,
    params: &SystemParams<B>,
    rng: &mut R,
) -> UserCredential<B>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let w1 = B::Scalar::random(rng);
    let account = w1 + params.hash.h0(id);
    let delta = params.hash.h1(id, public);
    UserCredential {
        acd: params.generator * account,
        sigma1: account + master.s * delta,
        delta,
    }
}

/// `Acd == σ1·P − δ·P_pub`.
pub fn verify_credential<B: PairingBackend>(
    cred: &UserCredential<B>,
    params: &SystemParams<B>,
) -> bool {
    cred.acd == params.generator * cred.sigma1 - params.p_pub * cred.delta
}

/// Gateway side of sensor registration: `T = tP`, `γ = H1(ID_c, T)`,
/// `d = t + sγ`.
pub fn issue_partial_key<B, R>(
    master: &MasterKey<B>,
    id: &[u8],
    params: &SystemParams<B>,
    rng: &mut R,
) -> PartialKey<B>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let t = B::Scalar::random(rng);
    let t_point = params.generator * t;
    let gamma = params.hash.h1(id, &t_point);
    PartialKey {
        t_point,
        d: t + master.s * gamma,
        gamma,
    }
}

/// `e(dP, P) == e(T, P)·e(P_pub, γP)`. Three pairings.
pub fn verify_partial_key<B: PairingBackend>(
    partial: &PartialKey<B>,
    params: &SystemParams<B>,
) -> bool {
    let p = &params.generator;
    let lhs = B::pair(&(*p * partial.d), p);
    let rhs = B::pair(&partial.t_point, p) * B::pair(&params.p_pub, &(*p * partial.gamma));
    lhs == rhs
}

/// Pairing-free equivalent of [`verify_partial_key`]: `dP == T + γ·P_pub`.
pub fn verify_partial_key_scalar<B: PairingBackend>(
    partial: &PartialKey<B>,
    params: &SystemParams<B>,
) -> bool {
    params.generator * partial.d == partial.t_point + params.p_pub * partial.gamma
}

/// Sensor completes its key: pick `x_c`, publish `PK_c1 = x_c·P`.
pub fn sensor_finalize_keys<B, R>(
    id: &[u8],
    partial: &PartialKey<B>,
    params: &SystemParams<B>,
    rng: &mut R,
) -> SensorKeyMaterial<B>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let x_c = B::Scalar::random(rng);
    SensorKeyMaterial {
        id: id.to_vec(),
        t_point: partial.t_point,
        d: partial.d,
        gamma: partial.gamma,
        x_c,
        pk_c1: params.generator * x_c,
    }
}

fn random_bits<R: RngCore + CryptoRng + ?Sized>(len: usize, rng: &mut R) -> Vec<u8> {
    let mut k = vec![0u8; len];
    rng.fill_bytes(&mut k);
    k
}

/// PKI-to-CLC signcryption of an `n`-bit payload `m`.
///
/// ```text
/// k <- {0,1}^n          r   = H2(k, m)        R_1 = rP
/// r_1 = m ⊕ H3(k)       r_2 = k ⊕ H3(r_1)
/// U   = r·PK_c1 + T + γ·P_pub
/// c   = x_p·H4(m) + r   R_2 = R_1 + Acd
/// ```
pub fn signcrypt<B, R>(
    user: &UserKeyPair<B>,
    cred: &UserCredential<B>,
    recipient: &SensorPublicKey<B>,
    m: &[u8],
    params: &SystemParams<B>,
    rng: &mut R,
) -> Result<Signcrypted<B>, CryptoError>
where
    B: PairingBackend,
    R: RngCore + CryptoRng + ?Sized,
{
    let n = params.payload_len();
    if m.len() != n {
        return Err(CryptoError::PayloadLength {
            expected: n,
            actual: m.len(),
        });
    }
    let h = &params.hash;
    let k = random_bits(n, rng);
    let r = h.h2(&k, m);
    let r1_point = params.generator * r;
    let r_1 = xor(m, &h.h3(&k));
    let r_2 = xor(&k, &h.h3(&r_1));
    let u = recipient.pk_c1 * r + recipient.t_point + params.p_pub * recipient.gamma;
    let c = user.secret * h.h4(m) + r;
    Ok(Signcrypted {
        r2_point: r1_point + cred.acd,
        sigma: Ciphertext {
            c,
            r1_point,
            r_1,
            r_2,
            u,
        },
    })
}

/// First half of unsigncryption: `R_1 = (1/x_c)(U − dP)`, then
/// `k = r_2 ⊕ H3(r_1)`, `m = r_1 ⊕ H3(k)`, `r = H2(k, m)`.
///
/// The recovered `R_1` must equal the one carried in `σ`.
pub fn recover<B: PairingBackend>(
    sensor: &SensorKeyMaterial<B>,
    sigma: &Ciphertext<B>,
    params: &SystemParams<B>,
) -> Result<Recovered<B>, UnsigncryptError> {
    let n = params.payload_len();
    if sigma.r_1.len() != n || sigma.r_2.len() != n {
        return Err(UnsigncryptError::MalformedLengths);
    }
    let inv = sensor
        .x_c
        .invert()
        .expect("x_c is sampled from Z_q* and never zero");
    let r1_point = (sigma.u - params.generator * sensor.d) * inv;
    if r1_point != sigma.r1_point {
        return Err(UnsigncryptError::BadSignature);
    }
    let h = &params.hash;
    let k = xor(&sigma.r_2, &h.h3(&sigma.r_1));
    let m = xor(&sigma.r_1, &h.h3(&k));
    let r = h.h2(&k, &m);
    Ok(Recovered { r1_point, k, m, r })
}

/// `R_1 == c·P − h4m·PK_p`, with `h4m = H4(m)` computed by the caller.
pub fn signature_holds<B: PairingBackend>(
    c: &B::Scalar,
    h4m: &B::Scalar,
    r1_point: &B::G1,
    sender: &B::G1,
    params: &SystemParams<B>,
) -> bool {
    *r1_point == params.generator * *c - *sender * *h4m
}

/// PKI-to-CLC unsigncryption against a known sender key `PK_p`.
///
/// Returns the payload and the account point `Acd = R_2 − R_1`, or `⊥` as
/// [`UnsigncryptError::BadSignature`].
pub fn unsigncrypt<B: PairingBackend>(
    sensor: &SensorKeyMaterial<B>,
    sender: &B::G1,
    r2_point: &B::G1,
    sigma: &Ciphertext<B>,
    params: &SystemParams<B>,
) -> Result<Unsigncrypted<B>, UnsigncryptError> {
    let rec = recover(sensor, sigma, params)?;
    let h4m = params.hash.h4(&rec.m);
    if !signature_holds(&sigma.c, &h4m, &rec.r1_point, sender, params) {
        return Err(UnsigncryptError::BadSignature);
    }
    Ok(Unsigncrypted {
        acd: *r2_point - rec.r1_point,
        r1_point: rec.r1_point,
        m: rec.m,
    })
}

/// `h_1 = H1(ID_c || t_c, Acd || c)` and `key = H2(h_1, R_1)`.
pub fn session_key<B: PairingBackend>(
    inputs: &SessionInputs<'_, B>,
    params: &SystemParams<B>,
) -> (Vec<u8>, SessionKey) {
    let mut left = Vec::new();
    push_length_prefixed(&mut left, inputs.sensor_id);
    push_length_prefixed(&mut left, &inputs.timestamp_ms.to_be_bytes());
    let mut right = Vec::new();
    push_length_prefixed(&mut right, &inputs.acd.to_bytes());
    push_length_prefixed(&mut right, &inputs.c.to_bytes());
    let h1 = params.hash.h1_bytes(&left, &right).to_bytes();
    let key = params.hash.h2(&h1, &inputs.r1_point.to_bytes()).to_bytes();
    (h1, SessionKey(key))
}

/// Full sensor-side derivation: `(h_1, key, M_1 = MAC_key(h_1))`.
pub fn derive_session<B: PairingBackend>(
    inputs: &SessionInputs<'_, B>,
    params: &SystemParams<B>,
) -> SessionMaterial {
    let (h1, key) = session_key(inputs, params);
    let tag = params.hash.mac(key.as_bytes(), &h1);
    SessionMaterial { h1, key, tag }
}

/// User-side confirmation: recompute `h_1` and the key, check `M_1`.
/// Returns the material only if the tag verifies.
pub fn confirm_session<B: PairingBackend>(
    inputs: &SessionInputs<'_, B>,
    tag: &MacTag,
    params: &SystemParams<B>,
) -> Option<SessionMaterial> {
    let (h1, key) = session_key(inputs, params);
    params
        .hash
        .verify_mac(key.as_bytes(), &h1, tag)
        .then_some(SessionMaterial { h1, key, tag: *tag })
}
