//! Bilinear group environment.
//!
//! Everything above this module is written against [`Backend`], which
//! supplies three prime-order groups `G1`, `G2`, `Gt` sharing one scalar
//! field, a pairing `e: G1 x G2 -> Gt`, and a map from bytes onto `G1`.
//! Group elements are written multiplicatively (`mul`, `div`, `pow`) so the
//! scheme code reads like the algebra it implements.
//!
//! Two backends ship with the crate:
//!
//! * [`TransparentBackend`]: every element is stored as its exponent over a
//!   hidden base, modulo a prime `p`. Discrete logs are known, which turns
//!   every pairing identity into exact modular arithmetic that tests can
//!   check directly. Useless for security, ideal as an oracle.
//! * [`Bls12Backend`]: BLS12-381 with a type-3 pairing.
//!
//! [`GroupContext`] wraps a backend and counts pairing evaluations.

mod codec;
mod curve;
mod transparent;

pub use codec::{Reader, Writer};
pub use curve::Bls12Backend;
pub use transparent::{TransparentBackend, Zp, TG1, TG2, TGt, DEFAULT_MODULUS};

use std::fmt::{self, Debug};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::RngCore;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} out of supported range [3, 2^62)")]
    ModulusOutOfRange(u64),
    #[error("unknown curve identifier `{0}`")]
    UnknownCurve(String),
    #[error("malformed {what}: {reason}")]
    Decode { what: &'static str, reason: String },
    #[error("bad context descriptor: {0}")]
    Descriptor(String),
    #[error("descriptor names backend `{found}`, expected `{expected}`")]
    BackendMismatch { expected: &'static str, found: String },
}

impl AlgebraError {
    pub(crate) fn decode(what: &'static str, reason: impl Into<String>) -> Self {
        AlgebraError::Decode {
            what,
            reason: reason.into(),
        }
    }
}

/// Element of the scalar field `Z_p`.
pub trait Scalar:
    Copy
    + Eq
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn is_zero(&self) -> bool;
    fn invert(&self) -> Option<Self>;
    /// Fixed-width big-endian encoding.
    fn to_be_bytes(&self) -> Vec<u8>;
}

/// A prime-order group written multiplicatively.
pub trait Group: Copy + Eq + Debug + Send + Sync + 'static {
    type Scalar: Scalar;

    fn mul(&self, rhs: &Self) -> Self;
    fn inverse(&self) -> Self;
    fn pow(&self, k: &Self::Scalar) -> Self;
    fn is_identity(&self) -> bool;
    /// Canonical encoding; decoding it back goes through the owning backend.
    fn to_bytes(&self) -> Vec<u8>;

    fn div(&self, rhs: &Self) -> Self {
        self.mul(&rhs.inverse())
    }
}

/// Domain tags separating the four hash functions of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HashDomain {
    /// Vehicle identities onto `G1`.
    Vehicle,
    /// Opening-authority identities onto `G1`.
    Opener,
    /// Group manager key derivation onto `Z_p*`.
    Manager,
    /// Fiat-Shamir challenges onto `Z_p*`.
    Challenge,
}

impl HashDomain {
    pub fn tag(self) -> &'static [u8] {
        match self {
            HashDomain::Vehicle => b"VANET-IBGS-V1:vehicle",
            HashDomain::Opener => b"VANET-IBGS-V1:opener",
            HashDomain::Manager => b"VANET-IBGS-V1:manager",
            HashDomain::Challenge => b"VANET-IBGS-V1:challenge",
        }
    }
}

/// Serializable description of a context, enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContextDescriptor {
    Transparent { modulus: u64, seed: u64 },
    Curve { curve_id: String },
}

impl ContextDescriptor {
    pub fn backend_name(&self) -> &'static str {
        match self {
            ContextDescriptor::Transparent { .. } => TransparentBackend::NAME,
            ContextDescriptor::Curve { .. } => Bls12Backend::NAME,
        }
    }
}

impl fmt::Display for ContextDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextDescriptor::Transparent { modulus, seed } => {
                writeln!(f, "backend=transparent")?;
                writeln!(f, "p={modulus}")?;
                writeln!(f, "seed={seed}")
            }
            ContextDescriptor::Curve { curve_id } => {
                writeln!(f, "backend=curve")?;
                writeln!(f, "curve_id={curve_id}")
            }
        }
    }
}

impl FromStr for ContextDescriptor {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut backend = None;
        let mut modulus = None;
        let mut seed = None;
        let mut curve_id = None;
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| AlgebraError::Descriptor(format!("expected key=value, got `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "backend" => backend = Some(value.to_string()),
                "p" => {
                    modulus = Some(value.parse::<u64>().map_err(|e| {
                        AlgebraError::Descriptor(format!("p: {e}"))
                    })?)
                }
                "seed" => {
                    seed = Some(value.parse::<u64>().map_err(|e| {
                        AlgebraError::Descriptor(format!("seed: {e}"))
                    })?)
                }
                "curve_id" => curve_id = Some(value.to_string()),
                other => return Err(AlgebraError::Descriptor(format!("unknown key `{other}`"))),
            }
        }
        match backend.as_deref() {
            Some("transparent") => Ok(ContextDescriptor::Transparent {
                modulus: modulus.unwrap_or(DEFAULT_MODULUS),
                seed: seed.unwrap_or(0),
            }),
            Some("curve") => Ok(ContextDescriptor::Curve {
                curve_id: curve_id.ok_or_else(|| AlgebraError::Descriptor("missing curve_id".into()))?,
            }),
            Some(other) => Err(AlgebraError::Descriptor(format!("unknown backend `{other}`"))),
            None => Err(AlgebraError::Descriptor("missing backend".into())),
        }
    }
}

/// Concrete group arithmetic behind a [`GroupContext`].
pub trait Backend: Clone + Debug + PartialEq + Eq + Send + Sync + 'static {
    type Scalar: Scalar;
    type G1: Group<Scalar = Self::Scalar>;
    type G2: Group<Scalar = Self::Scalar>;
    type Gt: Group<Scalar = Self::Scalar>;

    const NAME: &'static str;

    fn descriptor(&self) -> ContextDescriptor;
    fn from_descriptor(descriptor: &ContextDescriptor) -> Result<Self, AlgebraError>;

    fn g1_generator(&self) -> Self::G1;
    fn g2_generator(&self) -> Self::G2;
    fn g1_identity(&self) -> Self::G1;
    fn g2_identity(&self) -> Self::G2;
    fn gt_identity(&self) -> Self::Gt;

    fn scalar_from_u128(&self, v: u128) -> Self::Scalar;
    fn scalar_from_be_bytes_mod_order(&self, bytes: &[u8]) -> Self::Scalar;
    /// Byte width of an encoded scalar.
    fn scalar_len(&self) -> usize;

    /// Raw, uncounted pairing. Use [`GroupContext::pairing`] instead.
    fn pair(&self, a: &Self::G1, b: &Self::G2) -> Self::Gt;
    /// Deterministic map of `msg` onto a non-identity `G1` element under `dst`.
    fn map_to_g1(&self, dst: &[u8], msg: &[u8]) -> Self::G1;

    fn decode_scalar(&self, bytes: &[u8]) -> Result<Self::Scalar, AlgebraError>;
    fn decode_g1(&self, bytes: &[u8]) -> Result<Self::G1, AlgebraError>;
    fn decode_g2(&self, bytes: &[u8]) -> Result<Self::G2, AlgebraError>;
    fn decode_gt(&self, bytes: &[u8]) -> Result<Self::Gt, AlgebraError>;
}

/// A backend plus a shared pairing counter.
///
/// Clones share the counter. Element operations never touch it; only
/// [`GroupContext::pairing`] does.
#[derive(Debug, Clone)]
pub struct GroupContext<B: Backend> {
    backend: B,
    pairings: Arc<AtomicU64>,
}

impl<B: Backend> GroupContext<B> {
    pub fn new(backend: B) -> Self {
        Self {
            backend,
            pairings: Arc::new(AtomicU64::new(0)),
        }
    }

    pub fn from_descriptor(descriptor: &ContextDescriptor) -> Result<Self, AlgebraError> {
        B::from_descriptor(descriptor).map(Self::new)
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn descriptor(&self) -> ContextDescriptor {
        self.backend.descriptor()
    }

    /// Generator `A` of `G1`.
    pub fn g1(&self) -> B::G1 {
        self.backend.g1_generator()
    }

    /// Generator `B` of `G2`.
    pub fn g2(&self) -> B::G2 {
        self.backend.g2_generator()
    }

    pub fn gt_identity(&self) -> B::Gt {
        self.backend.gt_identity()
    }

    pub fn g1_identity(&self) -> B::G1 {
        self.backend.g1_identity()
    }

    pub fn g2_identity(&self) -> B::G2 {
        self.backend.g2_identity()
    }

    pub fn pairing(&self, a: &B::G1, b: &B::G2) -> B::Gt {
        self.pairings.fetch_add(1, Ordering::Relaxed);
        self.backend.pair(a, b)
    }

    pub fn pairing_count(&self) -> u64 {
        self.pairings.load(Ordering::Relaxed)
    }

    pub fn reset_pairing_count(&self) {
        self.pairings.store(0, Ordering::Relaxed);
    }

    pub fn scalar(&self, v: u64) -> B::Scalar {
        self.backend.scalar_from_u128(v as u128)
    }

    pub fn scalar_u128(&self, v: u128) -> B::Scalar {
        self.backend.scalar_from_u128(v)
    }

    pub fn zero(&self) -> B::Scalar {
        self.scalar(0)
    }

    pub fn one(&self) -> B::Scalar {
        self.scalar(1)
    }

    /// Uniform scalar in `Z_p` (reduction of 16 bytes more than the field width).
    pub fn random_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> B::Scalar {
        let mut buf = vec![0u8; self.backend.scalar_len() + 16];
        rng.fill_bytes(&mut buf);
        self.backend.scalar_from_be_bytes_mod_order(&buf)
    }

    /// Uniform scalar in `Z_p*`.
    pub fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> B::Scalar {
        loop {
            let s = self.random_scalar(rng);
            if !s.is_zero() {
                return s;
            }
        }
    }

    pub fn random_g1<R: RngCore + ?Sized>(&self, rng: &mut R) -> B::G1 {
        self.g1().pow(&self.random_nonzero_scalar(rng))
    }

    pub fn random_g2<R: RngCore + ?Sized>(&self, rng: &mut R) -> B::G2 {
        self.g2().pow(&self.random_nonzero_scalar(rng))
    }

    pub fn random_gt<R: RngCore + ?Sized>(&self, rng: &mut R) -> B::Gt {
        // Uncounted: only used to fabricate corrupted values in tests and harness.
        self.backend
            .pair(&self.g1(), &self.g2())
            .pow(&self.random_nonzero_scalar(rng))
    }

    /// `H_V` / `H_O`: hash onto `G1` under a domain tag.
    pub fn hash_to_g1(&self, domain: HashDomain, msg: &[u8]) -> B::G1 {
        self.backend.map_to_g1(domain.tag(), msg)
    }

    /// `H_R` / `H`: hash onto `Z_p*` under a domain tag.
    pub fn hash_to_zp(&self, domain: HashDomain, msg: &[u8]) -> B::Scalar {
        let width = self.backend.scalar_len() + 16;
        for counter in 0u32.. {
            let wide = expand_message(domain.tag(), counter, msg, width);
            let s = self.backend.scalar_from_be_bytes_mod_order(&wide);
            if !s.is_zero() {
                return s;
            }
        }
        unreachable!("hash_to_zp exhausted the counter space")
    }

    pub fn decode_scalar(&self, bytes: &[u8]) -> Result<B::Scalar, AlgebraError> {
        self.backend.decode_scalar(bytes)
    }

    pub fn decode_g1(&self, bytes: &[u8]) -> Result<B::G1, AlgebraError> {
        self.backend.decode_g1(bytes)
    }

    pub fn decode_g2(&self, bytes: &[u8]) -> Result<B::G2, AlgebraError> {
        self.backend.decode_g2(bytes)
    }

    pub fn decode_gt(&self, bytes: &[u8]) -> Result<B::Gt, AlgebraError> {
        self.backend.decode_gt(bytes)
    }
}

/// Counter-mode SHA-256 expansion:
/// `block_j = SHA256(len(dst) || dst || counter_be32 || j_be8 || msg)`,
/// concatenated and truncated to `len` bytes.
pub(crate) fn expand_message(dst: &[u8], counter: u32, msg: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut block = 0u8;
    while out.len() < len {
        let mut h = Sha256::new();
        h.update([dst.len() as u8]);
        h.update(dst);
        h.update(counter.to_be_bytes());
        h.update([block]);
        h.update(msg);
        out.extend_from_slice(&h.finalize());
        block = block.wrapping_add(1);
    }
    out.truncate(len);
    out
}

/// SHA-256 digest of an element encoding; used as a compact lookup key.
pub fn digest<G: Group>(elem: &G) -> [u8; 32] {
    Sha256::digest(elem.to_bytes()).into()
}

/// Transparent backend over `Z_p` with generators derived from `seed`.
pub fn make_transparent_context(
    seed: u64,
    modulus: u64,
) -> Result<GroupContext<TransparentBackend>, AlgebraError> {
    TransparentBackend::new(seed, modulus).map(GroupContext::new)
}

/// Pairing-friendly curve backend. Only `bls12-381` is supported.
pub fn make_curve_context(curve_id: &str) -> Result<GroupContext<Bls12Backend>, AlgebraError> {
    Bls12Backend::new(curve_id).map(GroupContext::new)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn ctx() -> GroupContext<TransparentBackend> {
        make_transparent_context(7, DEFAULT_MODULUS).unwrap()
    }

    #[test]
    fn pairing_of_powers() {
        let ctx = ctx();
        let (a, b) = (ctx.g1(), ctx.g2());
        let lhs = ctx.pairing(&a.pow(&ctx.scalar(2)), &b.pow(&ctx.scalar(3)));
        let rhs = ctx.pairing(&a, &b).pow(&ctx.scalar(6));
        assert_eq!(lhs, rhs);
        assert!(ctx.pairing(&a.pow(&ctx.zero()), &b).is_identity());
        assert!(!ctx.pairing(&a, &b).is_identity());
    }

    #[test]
    fn bilinearity_against_exponent_products() {
        let ctx = ctx();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let base = ctx.pairing(&ctx.g1(), &ctx.g2());
        for _ in 0..500 {
            let a = ctx.random_scalar(&mut rng);
            let b = ctx.random_scalar(&mut rng);
            let lhs = ctx.pairing(&ctx.g1().pow(&a), &ctx.g2().pow(&b));
            // a*b computed in plain u128 arithmetic, independent of Zp ops
            let p = DEFAULT_MODULUS as u128;
            let ab = (a.value() as u128 * b.value() as u128) % p;
            assert_eq!(lhs, base.pow(&ctx.scalar_u128(ab)));
        }
    }

    #[test]
    fn counter_tracks_and_resets() {
        let ctx = ctx();
        ctx.reset_pairing_count();
        assert_eq!(ctx.pairing_count(), 0);
        ctx.pairing(&ctx.g1(), &ctx.g2());
        assert_eq!(ctx.pairing_count(), 1);
        let shared = ctx.clone();
        shared.pairing(&ctx.g1(), &ctx.g2());
        assert_eq!(ctx.pairing_count(), 2);
        ctx.reset_pairing_count();
        assert_eq!(ctx.pairing_count(), 0);
    }

    #[test]
    fn counter_is_thread_safe() {
        let ctx = ctx();
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    for _ in 0..250 {
                        ctx.pairing(&ctx.g1(), &ctx.g2());
                    }
                });
            }
        });
        assert_eq!(ctx.pairing_count(), 1000);
    }

    #[test]
    fn hash_determinism_and_domains() {
        let ctx = ctx();
        let a = ctx.hash_to_g1(HashDomain::Vehicle, b"car-1");
        assert_eq!(a, ctx.hash_to_g1(HashDomain::Vehicle, b"car-1"));
        assert!(!a.is_identity());
        let mut collisions = 0;
        for i in 0..1000u32 {
            let m = i.to_be_bytes();
            if ctx.hash_to_g1(HashDomain::Vehicle, &m) == ctx.hash_to_g1(HashDomain::Opener, &m) {
                collisions += 1;
            }
        }
        assert_eq!(collisions, 0);
    }

    #[test]
    fn hash_to_zp_lands_in_units() {
        let ctx = ctx();
        for i in 0..2000u32 {
            let s = ctx.hash_to_zp(HashDomain::Challenge, &i.to_le_bytes());
            assert!(s.value() >= 1 && s.value() < DEFAULT_MODULUS);
        }
        assert_eq!(
            ctx.hash_to_zp(HashDomain::Manager, b"gm"),
            ctx.hash_to_zp(HashDomain::Manager, b"gm")
        );
    }

    #[test]
    fn hash_to_zp_chi_square() {
        // 16 buckets, 15 dof; critical value at alpha = 0.01 is 30.578
        let ctx = ctx();
        let n = 10_000u32;
        let mut buckets = [0u32; 16];
        for i in 0..n {
            let s = ctx.hash_to_zp(HashDomain::Challenge, &i.to_be_bytes());
            let b = (s.value() as u128 * 16 / DEFAULT_MODULUS as u128) as usize;
            buckets[b] += 1;
        }
        let expected = n as f64 / 16.0;
        let chi2: f64 = buckets
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 30.578, "chi2 = {chi2}");
    }

    #[test]
    fn descriptor_text_roundtrip() {
        for d in [
            ContextDescriptor::Transparent { modulus: 1_000_003, seed: 9 },
            ContextDescriptor::Curve { curve_id: "bls12-381".into() },
        ] {
            assert_eq!(d.to_string().parse::<ContextDescriptor>().unwrap(), d);
        }
        assert!("backend=quantum".parse::<ContextDescriptor>().is_err());
        assert!("p=7".parse::<ContextDescriptor>().is_err());
    }

    #[test]
    fn rejects_composite_modulus() {
        assert_eq!(
            make_transparent_context(1, 1_000_001).unwrap_err(),
            AlgebraError::NotPrime(1_000_001)
        );
        assert!(make_curve_context("bn254").is_err());
    }
}
