use rand::RngCore;

use crate::algebra::{Backend, Group, GroupContext, HashDomain};

use super::MembershipCertificate;

/// Public parameters: the group context, `A1..A5` and `K_T`.
#[derive(Debug, Clone)]
pub struct SystemParams<B: Backend> {
    pub ctx: GroupContext<B>,
    pub a1: B::G1,
    pub a2: B::G1,
    pub a3: B::G1,
    pub a4: B::G1,
    pub a5: B::G1,
    pub master_public: B::G2,
}

impl<B: Backend> SystemParams<B> {
    pub fn h_vehicle(&self, id: &[u8]) -> B::G1 {
        self.ctx.hash_to_g1(HashDomain::Vehicle, id)
    }

    pub fn h_opener(&self, id: &[u8]) -> B::G1 {
        self.ctx.hash_to_g1(HashDomain::Opener, id)
    }

    pub fn bases(&self) -> [B::G1; 5] {
        [self.a1, self.a2, self.a3, self.a4, self.a5]
    }
}

/// Master secret `x_T` of the trusted authority.
#[derive(Debug, PartialEq, Eq)]
pub struct TeaSecret<B: Backend> {
    pub master: B::Scalar,
}

copy_with_backend!(TeaSecret);

/// Group manager key: identity, tag `C = B^r` and secret `x_R`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GmKey<B: Backend> {
    pub id: Vec<u8>,
    pub group_tag: B::G2,
    pub secret: B::Scalar,
}

/// Opening authority key `x_O = H_O(ID_O)^x_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenerKey<B: Backend> {
    pub id: Vec<u8>,
    pub secret: B::G1,
}

/// Vehicle key `x_V = H_V(ID_V)^x_T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VehicleKey<B: Backend> {
    pub id: Vec<u8>,
    pub secret: B::G1,
}

/// Everything a vehicle needs to sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VehicleCredential<B: Backend> {
    pub key: VehicleKey<B>,
    pub certificate: MembershipCertificate<B>,
}

/// Samples `A1..A5` from `G1 \ {1}` and `x_T` from `Z_p*`.
pub fn setup<B: Backend, R: RngCore + ?Sized>(
    ctx: GroupContext<B>,
    rng: &mut R,
) -> (SystemParams<B>, TeaSecret<B>) {
    let mut base = || ctx.random_g1(rng);
    let (a1, a2, a3, a4, a5) = (base(), base(), base(), base(), base());
    let master = ctx.random_nonzero_scalar(rng);
    let master_public = ctx.g2().pow(&master);
    (
        SystemParams {
            ctx,
            a1,
            a2,
            a3,
            a4,
            a5,
            master_public,
        },
        TeaSecret { master },
    )
}

fn manager_hash<B: Backend>(params: &SystemParams<B>, group_tag: &B::G2, manager_id: &[u8]) -> B::Scalar {
    let mut input = group_tag.to_bytes();
    input.extend_from_slice(manager_id);
    params.ctx.hash_to_zp(HashDomain::Manager, &input)
}

/// `S = C · K_T^H_R(C‖ID_R)`.
pub fn group_public_key<B: Backend>(params: &SystemParams<B>, group_tag: &B::G2, manager_id: &[u8]) -> B::G2 {
    let h = manager_hash(params, group_tag, manager_id);
    group_tag.mul(&params.master_public.pow(&h))
}

pub fn keygen_gm<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    tea: &TeaSecret<B>,
    manager_id: &[u8],
    rng: &mut R,
) -> GmKey<B> {
    assert!(!manager_id.is_empty(), "manager identity must be nonempty");
    let r = params.ctx.random_nonzero_scalar(rng);
    let group_tag = params.ctx.g2().pow(&r);
    let secret = r + manager_hash(params, &group_tag, manager_id) * tea.master;
    GmKey {
        id: manager_id.to_vec(),
        group_tag,
        secret,
    }
}

pub fn keygen_tsd<B: Backend>(params: &SystemParams<B>, tea: &TeaSecret<B>, opener_id: &[u8]) -> OpenerKey<B> {
    assert!(!opener_id.is_empty(), "opener identity must be nonempty");
    OpenerKey {
        id: opener_id.to_vec(),
        secret: params.h_opener(opener_id).pow(&tea.master),
    }
}

pub fn keygen_vehicle<B: Backend>(params: &SystemParams<B>, tea: &TeaSecret<B>, vehicle_id: &[u8]) -> VehicleKey<B> {
    assert!(!vehicle_id.is_empty(), "vehicle identity must be nonempty");
    VehicleKey {
        id: vehicle_id.to_vec(),
        secret: params.h_vehicle(vehicle_id).pow(&tea.master),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_transparent_context, Scalar, TransparentBackend, DEFAULT_MODULUS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::collections::HashSet;

    fn fixture(seed: u64) -> (SystemParams<TransparentBackend>, TeaSecret<TransparentBackend>) {
        let ctx = make_transparent_context(1, DEFAULT_MODULUS).unwrap();
        setup(ctx, &mut ChaCha20Rng::seed_from_u64(seed))
    }

    #[test]
    fn setup_publishes_master_key() {
        let (params, tea) = fixture(1);
        assert_eq!(params.master_public, params.ctx.g2().pow(&tea.master));
        assert!(params.bases().iter().all(|a| !a.is_identity()));
    }

    #[test]
    fn distinct_seeds_give_distinct_bases() {
        let firsts: HashSet<_> = (0..100).map(|s| fixture(s).0.a1).collect();
        assert_eq!(firsts.len(), 100);
    }

    #[test]
    fn manager_secret_opens_group_key() {
        let (params, tea) = fixture(2);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let gm = keygen_gm(&params, &tea, b"gm-tokyo", &mut rng);
        assert_eq!(
            params.ctx.g2().pow(&gm.secret),
            group_public_key(&params, &gm.group_tag, b"gm-tokyo")
        );
        assert!(gm.secret.value() < DEFAULT_MODULUS);
        let secrets: HashSet<_> = (0..100u32)
            .map(|i| keygen_gm(&params, &tea, format!("gm-{i}").as_bytes(), &mut rng).secret)
            .collect();
        assert_eq!(secrets.len(), 100);
    }

    #[test]
    fn identity_keys_satisfy_pairing_relation() {
        let (params, tea) = fixture(4);
        let ctx = &params.ctx;
        let vk = keygen_vehicle(&params, &tea, b"car-42");
        assert_eq!(
            ctx.pairing(&vk.secret, &ctx.g2()),
            ctx.pairing(&params.h_vehicle(b"car-42"), &params.master_public)
        );
        assert_eq!(vk, keygen_vehicle(&params, &tea, b"car-42"));
        let ok = keygen_tsd(&params, &tea, b"tsd");
        assert_eq!(
            ctx.pairing(&ok.secret, &ctx.g2()),
            ctx.pairing(&params.h_opener(b"tsd"), &params.master_public)
        );
    }

    #[test]
    fn vehicle_key_exponent_oracle() {
        let (params, tea) = fixture(5);
        let be = params.ctx.backend();
        let vk = keygen_vehicle(&params, &tea, b"car-9");
        let expected = be.log_g1(&params.h_vehicle(b"car-9")) * tea.master;
        assert_eq!(be.log_g1(&vk.secret), expected);
        assert!(!expected.is_zero());
    }
}
