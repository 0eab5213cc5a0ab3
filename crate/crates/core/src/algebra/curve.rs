//! BLS12-381 backend on arkworks.

use ark_bls12_381::{g1, Bls12_381, Fr, G1Affine, G1Projective, G2Affine, G2Projective};
use ark_ec::hashing::curve_maps::wb::WBMap;
use ark_ec::hashing::map_to_curve_hasher::MapToCurveBasedHasher;
use ark_ec::hashing::HashToCurve;
use ark_ec::pairing::{Pairing, PairingOutput};
use ark_ec::short_weierstrass::{Projective, SWCurveConfig};
use ark_ec::{CurveGroup, PrimeGroup};
use ark_ff::field_hashers::DefaultFieldHasher;
use ark_ff::{BigInteger, Field, PrimeField, Zero};
use ark_serialize::{CanonicalDeserialize, CanonicalSerialize};
use sha2::Sha256;

use super::{AlgebraError, Backend, ContextDescriptor, Group, Scalar};

pub type Gt = PairingOutput<Bls12_381>;

type G1Hasher = MapToCurveBasedHasher<G1Projective, DefaultFieldHasher<Sha256, 128>, WBMap<g1::Config>>;

const CURVE_IDS: &[&str] = &["bls12-381", "bls12_381", "BLS12-381"];

impl Scalar for Fr {
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn invert(&self) -> Option<Self> {
        Field::inverse(self)
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        self.into_bigint().to_bytes_be()
    }
}

fn compressed<T: CanonicalSerialize>(v: &T) -> Vec<u8> {
    let mut out = Vec::with_capacity(v.compressed_size());
    v.serialize_compressed(&mut out)
        .expect("writing into a Vec cannot fail");
    out
}

// One impl for both curves: the two projective types are the same generic
// type, which coherence cannot tell apart through the config projection.
impl<P: SWCurveConfig<ScalarField = Fr>> Group for Projective<P> {
    type Scalar = Fr;

    fn mul(&self, rhs: &Self) -> Self {
        *self + rhs
    }

    fn inverse(&self) -> Self {
        -*self
    }

    fn pow(&self, k: &Fr) -> Self {
        *self * k
    }

    fn is_identity(&self) -> bool {
        Zero::is_zero(self)
    }

    fn to_bytes(&self) -> Vec<u8> {
        compressed(&self.into_affine())
    }
}

impl Group for Gt {
    type Scalar = Fr;

    fn mul(&self, rhs: &Self) -> Self {
        *self + rhs
    }

    fn inverse(&self) -> Self {
        -*self
    }

    fn pow(&self, k: &Fr) -> Self {
        *self * k
    }

    fn is_identity(&self) -> bool {
        Zero::is_zero(self)
    }

    fn to_bytes(&self) -> Vec<u8> {
        compressed(self)
    }
}

/// BLS12-381 with the standard generators and a type-3 pairing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bls12Backend {
    curve_id: String,
}

impl Bls12Backend {
    pub fn new(curve_id: &str) -> Result<Self, AlgebraError> {
        if CURVE_IDS.contains(&curve_id) {
            Ok(Self {
                curve_id: "bls12-381".to_string(),
            })
        } else {
            Err(AlgebraError::UnknownCurve(curve_id.to_string()))
        }
    }
}

fn decode<T: CanonicalDeserialize>(what: &'static str, bytes: &[u8]) -> Result<T, AlgebraError> {
    // Validation includes the subgroup check.
    let mut reader = bytes;
    let v = T::deserialize_compressed(&mut reader).map_err(|e| AlgebraError::decode(what, e.to_string()))?;
    if !reader.is_empty() {
        return Err(AlgebraError::decode(what, "trailing bytes"));
    }
    Ok(v)
}

impl Backend for Bls12Backend {
    type Scalar = Fr;
    type G1 = G1Projective;
    type G2 = G2Projective;
    type Gt = Gt;

    const NAME: &'static str = "curve";

    fn descriptor(&self) -> ContextDescriptor {
        ContextDescriptor::Curve {
            curve_id: self.curve_id.clone(),
        }
    }

    fn from_descriptor(descriptor: &ContextDescriptor) -> Result<Self, AlgebraError> {
        match descriptor {
            ContextDescriptor::Curve { curve_id } => Self::new(curve_id),
            other => Err(AlgebraError::BackendMismatch {
                expected: Self::NAME,
                found: other.backend_name().to_string(),
            }),
        }
    }

    fn g1_generator(&self) -> G1Projective {
        G1Projective::generator()
    }

    fn g2_generator(&self) -> G2Projective {
        G2Projective::generator()
    }

    fn g1_identity(&self) -> G1Projective {
        G1Projective::zero()
    }

    fn g2_identity(&self) -> G2Projective {
        G2Projective::zero()
    }

    fn gt_identity(&self) -> Gt {
        Gt::zero()
    }

    fn scalar_from_u128(&self, v: u128) -> Fr {
        Fr::from(v)
    }

    fn scalar_from_be_bytes_mod_order(&self, bytes: &[u8]) -> Fr {
        Fr::from_be_bytes_mod_order(bytes)
    }

    fn scalar_len(&self) -> usize {
        32
    }

    fn pair(&self, a: &G1Projective, b: &G2Projective) -> Gt {
        Bls12_381::pairing(*a, *b)
    }

    fn map_to_g1(&self, dst: &[u8], msg: &[u8]) -> G1Projective {
        let hasher = G1Hasher::new(dst).expect("WB map parameters for BLS12-381 G1 are valid");
        hasher
            .hash(msg)
            .expect("hash-to-curve is total for BLS12-381 G1")
            .into()
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<Fr, AlgebraError> {
        if bytes.len() != 32 {
            return Err(AlgebraError::decode("scalar", format!("expected 32 bytes, got {}", bytes.len())));
        }
        let s = Fr::from_be_bytes_mod_order(bytes);
        if s.to_be_bytes() != bytes {
            return Err(AlgebraError::decode("scalar", "value not below the group order"));
        }
        Ok(s)
    }

    fn decode_g1(&self, bytes: &[u8]) -> Result<G1Projective, AlgebraError> {
        decode::<G1Affine>("G1 element", bytes).map(Into::into)
    }

    fn decode_g2(&self, bytes: &[u8]) -> Result<G2Projective, AlgebraError> {
        decode::<G2Affine>("G2 element", bytes).map(Into::into)
    }

    fn decode_gt(&self, bytes: &[u8]) -> Result<Gt, AlgebraError> {
        decode::<Gt>("Gt element", bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_curve_context, HashDomain};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn generators_pair_nontrivially() {
        let ctx = make_curve_context("bls12-381").unwrap();
        assert!(!ctx.pairing(&ctx.g1(), &ctx.g2()).is_identity());
    }

    #[test]
    fn bilinearity_spot_check() {
        let ctx = make_curve_context("bls12-381").unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let base = ctx.pairing(&ctx.g1(), &ctx.g2());
        for _ in 0..100 {
            let a = ctx.random_scalar(&mut rng);
            let b = ctx.random_scalar(&mut rng);
            let lhs = ctx.pairing(&ctx.g1().pow(&a), &ctx.g2().pow(&b));
            assert_eq!(lhs, base.pow(&(a * b)));
        }
    }

    #[test]
    fn element_roundtrips() {
        let ctx = make_curve_context("bls12-381").unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let g = ctx.random_g1(&mut rng);
        assert_eq!(ctx.decode_g1(&g.to_bytes()).unwrap(), g);
        let h = ctx.random_g2(&mut rng);
        assert_eq!(ctx.decode_g2(&h.to_bytes()).unwrap(), h);
        let t = ctx.pairing(&g, &h);
        assert_eq!(ctx.decode_gt(&t.to_bytes()).unwrap(), t);
        let s = ctx.random_scalar(&mut rng);
        assert_eq!(ctx.decode_scalar(&s.to_be_bytes()).unwrap(), s);
        assert!(ctx.decode_scalar(&[0xff; 32]).is_err());
        assert!(ctx.decode_g1(&[0u8; 5]).is_err());
    }

    #[test]
    fn hash_to_g1_is_deterministic_and_separated() {
        let ctx = make_curve_context("bls12-381").unwrap();
        let v = ctx.hash_to_g1(HashDomain::Vehicle, b"car-7");
        assert_eq!(v, ctx.hash_to_g1(HashDomain::Vehicle, b"car-7"));
        assert_ne!(v, ctx.hash_to_g1(HashDomain::Opener, b"car-7"));
        assert!(!v.is_identity());
        assert!(v.into_affine().is_in_correct_subgroup_assuming_on_curve());
    }
}
