//! Exponent-form groups over `Z_p`.
//!
//! An element of `G1`, `G2` or `Gt` is stored as its exponent over a hidden
//! base of that group, so the group law is addition of exponents and the
//! pairing is multiplication of exponents. Generators are drawn from the
//! seed, which keeps `log_A`, `log_B` and `log_e(A,B)` nontrivial.

use std::ops::{Add, Mul, Neg, Sub};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{expand_message, AlgebraError, Backend, ContextDescriptor, Group, Scalar};

/// `2^31 - 1`.
pub const DEFAULT_MODULUS: u64 = (1 << 31) - 1;

/// Residue modulo a prime. Both operands of a binary op must share the modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Zp {
    value: u64,
    modulus: u64,
}

impl Zp {
    pub fn new(value: u64, modulus: u64) -> Self {
        Self {
            value: value % modulus,
            modulus,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    fn pow_u64(self, mut e: u64) -> Self {
        let mut base = self;
        let mut acc = Zp::new(1, self.modulus);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    fn check(&self, rhs: &Self) {
        debug_assert_eq!(self.modulus, rhs.modulus, "mixed moduli");
    }
}

impl Add for Zp {
    type Output = Zp;
    fn add(self, rhs: Zp) -> Zp {
        self.check(&rhs);
        Zp::new(self.value + rhs.value, self.modulus)
    }
}

impl Sub for Zp {
    type Output = Zp;
    fn sub(self, rhs: Zp) -> Zp {
        self.check(&rhs);
        Zp::new(self.value + self.modulus - rhs.value, self.modulus)
    }
}

impl Mul for Zp {
    type Output = Zp;
    fn mul(self, rhs: Zp) -> Zp {
        self.check(&rhs);
        let v = (self.value as u128 * rhs.value as u128) % self.modulus as u128;
        Zp::new(v as u64, self.modulus)
    }
}

impl Neg for Zp {
    type Output = Zp;
    fn neg(self) -> Zp {
        Zp::new(self.modulus - self.value, self.modulus)
    }
}

fn width(modulus: u64) -> usize {
    let bits = 64 - modulus.leading_zeros() as usize;
    bits.div_ceil(8)
}

impl Scalar for Zp {
    fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn invert(&self) -> Option<Self> {
        if self.value == 0 {
            None
        } else {
            Some(self.pow_u64(self.modulus - 2))
        }
    }

    fn to_be_bytes(&self) -> Vec<u8> {
        let w = width(self.modulus);
        self.value.to_be_bytes()[8 - w..].to_vec()
    }
}

macro_rules! exponent_group {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub struct $name(Zp);

        impl $name {
            /// Exponent over the hidden base of this group.
            pub fn exponent(&self) -> Zp {
                self.0
            }
        }

        impl Group for $name {
            type Scalar = Zp;

            fn mul(&self, rhs: &Self) -> Self {
                $name(self.0 + rhs.0)
            }

            fn inverse(&self) -> Self {
                $name(-self.0)
            }

            fn pow(&self, k: &Zp) -> Self {
                $name(self.0 * *k)
            }

            fn is_identity(&self) -> bool {
                self.0.is_zero()
            }

            fn to_bytes(&self) -> Vec<u8> {
                self.0.to_be_bytes()
            }
        }
    };
}

exponent_group!(TG1, "Transparent `G1` element.");
exponent_group!(TG2, "Transparent `G2` element.");
exponent_group!(TGt, "Transparent `Gt` element.");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransparentBackend {
    modulus: u64,
    seed: u64,
    g1_gen: Zp,
    g2_gen: Zp,
}

impl TransparentBackend {
    pub const MAX_MODULUS: u64 = 1 << 62;

    pub fn new(seed: u64, modulus: u64) -> Result<Self, AlgebraError> {
        if !(3..Self::MAX_MODULUS).contains(&modulus) {
            return Err(AlgebraError::ModulusOutOfRange(modulus));
        }
        if !primal_check::miller_rabin(modulus) {
            return Err(AlgebraError::NotPrime(modulus));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut nonzero = || Zp::new(rng.gen_range(1..modulus), modulus);
        let g1_gen = nonzero();
        let g2_gen = nonzero();
        Ok(Self {
            modulus,
            seed,
            g1_gen,
            g2_gen,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Discrete log base `A`.
    pub fn log_g1(&self, g: &TG1) -> Zp {
        g.0 * self.g1_gen.invert().expect("generator is nonzero")
    }

    /// Discrete log base `B`.
    pub fn log_g2(&self, h: &TG2) -> Zp {
        h.0 * self.g2_gen.invert().expect("generator is nonzero")
    }

    /// Discrete log base `e(A, B)`.
    pub fn log_gt(&self, t: &TGt) -> Zp {
        t.0 * (self.g1_gen * self.g2_gen)
            .invert()
            .expect("generators are nonzero")
    }

    fn zp(&self, v: u64) -> Zp {
        Zp::new(v, self.modulus)
    }

    fn decode_residue(&self, what: &'static str, bytes: &[u8]) -> Result<Zp, AlgebraError> {
        let w = width(self.modulus);
        if bytes.len() != w {
            return Err(AlgebraError::decode(
                what,
                format!("expected {w} bytes, got {}", bytes.len()),
            ));
        }
        let mut buf = [0u8; 8];
        buf[8 - w..].copy_from_slice(bytes);
        let v = u64::from_be_bytes(buf);
        if v >= self.modulus {
            return Err(AlgebraError::decode(what, "value not below the group order"));
        }
        Ok(self.zp(v))
    }
}

impl Backend for TransparentBackend {
    type Scalar = Zp;
    type G1 = TG1;
    type G2 = TG2;
    type Gt = TGt;

    const NAME: &'static str = "transparent";

    fn descriptor(&self) -> ContextDescriptor {
        ContextDescriptor::Transparent {
            modulus: self.modulus,
            seed: self.seed,
        }
    }

    fn from_descriptor(descriptor: &ContextDescriptor) -> Result<Self, AlgebraError> {
        match descriptor {
            ContextDescriptor::Transparent { modulus, seed } => Self::new(*seed, *modulus),
            other => Err(AlgebraError::BackendMismatch {
                expected: Self::NAME,
                found: other.backend_name().to_string(),
            }),
        }
    }

    fn g1_generator(&self) -> TG1 {
        TG1(self.g1_gen)
    }

    fn g2_generator(&self) -> TG2 {
        TG2(self.g2_gen)
    }

    fn g1_identity(&self) -> TG1 {
        TG1(self.zp(0))
    }

    fn g2_identity(&self) -> TG2 {
        TG2(self.zp(0))
    }

    fn gt_identity(&self) -> TGt {
        TGt(self.zp(0))
    }

    fn scalar_from_u128(&self, v: u128) -> Zp {
        self.zp((v % self.modulus as u128) as u64)
    }

    fn scalar_from_be_bytes_mod_order(&self, bytes: &[u8]) -> Zp {
        let m = self.modulus as u128;
        let v = bytes
            .iter()
            .fold(0u128, |acc, &b| ((acc << 8) | b as u128) % m);
        self.zp(v as u64)
    }

    fn scalar_len(&self) -> usize {
        width(self.modulus)
    }

    fn pair(&self, a: &TG1, b: &TG2) -> TGt {
        TGt(a.0 * b.0)
    }

    fn map_to_g1(&self, dst: &[u8], msg: &[u8]) -> TG1 {
        let mut keyed = dst.to_vec();
        keyed.extend_from_slice(&self.seed.to_be_bytes());
        for counter in 0u32.. {
            let wide = expand_message(&keyed, counter, msg, self.scalar_len() + 16);
            let v = self.scalar_from_be_bytes_mod_order(&wide);
            if !v.is_zero() {
                return TG1(v);
            }
        }
        unreachable!()
    }

    fn decode_scalar(&self, bytes: &[u8]) -> Result<Zp, AlgebraError> {
        self.decode_residue("scalar", bytes)
    }

    fn decode_g1(&self, bytes: &[u8]) -> Result<TG1, AlgebraError> {
        self.decode_residue("G1 element", bytes).map(TG1)
    }

    fn decode_g2(&self, bytes: &[u8]) -> Result<TG2, AlgebraError> {
        self.decode_residue("G2 element", bytes).map(TG2)
    }

    fn decode_gt(&self, bytes: &[u8]) -> Result<TGt, AlgebraError> {
        self.decode_residue("Gt element", bytes).map(TGt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: u64 = DEFAULT_MODULUS;

    proptest! {
        #[test]
        fn field_laws(a in 0..P, b in 0..P, c in 0..P) {
            let (a, b, c) = (Zp::new(a, P), Zp::new(b, P), Zp::new(c, P));
            prop_assert_eq!((a + b) + c, a + (b + c));
            prop_assert_eq!(a * (b + c), a * b + a * c);
            prop_assert_eq!(a - a, Zp::new(0, P));
            prop_assert_eq!(a + (-a), Zp::new(0, P));
            if !a.is_zero() {
                prop_assert_eq!(a * a.invert().unwrap(), Zp::new(1, P));
            }
        }

        #[test]
        fn pairing_is_bilinear_in_each_slot(x in 1..P, y in 1..P, z in 1..P) {
            let be = TransparentBackend::new(3, P).unwrap();
            let g = be.g1_generator().pow(&Zp::new(x, P));
            let g2 = be.g1_generator().pow(&Zp::new(y, P));
            let h = be.g2_generator().pow(&Zp::new(z, P));
            prop_assert_eq!(be.pair(&g.mul(&g2), &h), be.pair(&g, &h).mul(&be.pair(&g2, &h)));
            let h2 = be.g2_generator().pow(&Zp::new(x, P));
            prop_assert_eq!(be.pair(&g, &h.mul(&h2)), be.pair(&g, &h).mul(&be.pair(&g, &h2)));
        }

        #[test]
        fn element_codec_roundtrip(v in 0..P) {
            let be = TransparentBackend::new(3, P).unwrap();
            let g = be.g1_generator().pow(&Zp::new(v, P));
            prop_assert_eq!(be.decode_g1(&g.to_bytes()).unwrap(), g);
        }
    }

    #[test]
    fn logs_are_relative_to_generators() {
        let be = TransparentBackend::new(11, P).unwrap();
        let k = Zp::new(12345, P);
        assert_eq!(be.log_g1(&be.g1_generator().pow(&k)), k);
        assert_eq!(be.log_g2(&be.g2_generator().pow(&k)), k);
        let t = be.pair(&be.g1_generator(), &be.g2_generator());
        assert_eq!(be.log_gt(&t.pow(&k)), k);
    }

    #[test]
    fn decode_enforces_membership() {
        let be = TransparentBackend::new(11, P).unwrap();
        assert!(be.decode_g1(&[0xff, 0xff, 0xff, 0xff]).is_err());
        assert!(be.decode_g1(&[0, 1]).is_err());
    }

    #[test]
    fn seeds_change_generators() {
        let a = TransparentBackend::new(1, P).unwrap();
        let b = TransparentBackend::new(2, P).unwrap();
        assert_ne!(a.g1_generator(), b.g1_generator());
        assert_eq!(a, TransparentBackend::new(1, P).unwrap());
    }
}
