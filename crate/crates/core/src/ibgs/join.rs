//! Group join: a proof of knowledge of `x_V`, certificate issuance, and the
//! vehicle-side certificate check.

use rand::RngCore;
use thiserror::Error;

use crate::algebra::{Backend, Group, HashDomain, Scalar, Writer};
use crate::opener::{RegistrationRecord, RegistrationTable, TableError};

use super::keys::{group_public_key, GmKey, SystemParams, VehicleKey};

#[derive(Debug, Error)]
pub enum JoinError {
    #[error("proof of key knowledge rejected for vehicle {0}")]
    ProofRejected(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Three-move proof for `e(X, B) = e(H_V(ID_V), K_T)` with witness `X = x_V`,
/// made non-interactive by hashing the commitment with the identity and a
/// verifier-chosen nonce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyProof<B: Backend> {
    /// `R = e(U, B)`.
    pub commitment: B::Gt,
    /// `V = U · x_V^c`.
    pub response: B::G1,
    pub nonce: Vec<u8>,
}

/// Membership certificate `(D, t, C)`.
#[derive(Debug, PartialEq, Eq)]
pub struct MembershipCertificate<B: Backend> {
    pub cert: B::G1,
    pub exponent: B::Scalar,
    pub group_tag: B::G2,
}

copy_with_backend!(MembershipCertificate);

fn key_challenge<B: Backend>(params: &SystemParams<B>, commitment: &B::Gt, vehicle_id: &[u8], nonce: &[u8]) -> B::Scalar {
    let mut w = Writer::new();
    w.raw(b"key-proof").elem(commitment).bytes(vehicle_id).bytes(nonce);
    params.ctx.hash_to_zp(HashDomain::Challenge, w.as_slice())
}

pub fn prove_key<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    key: &VehicleKey<B>,
    nonce: &[u8],
    rng: &mut R,
) -> KeyProof<B> {
    let ctx = &params.ctx;
    let mask = ctx.random_g1(rng);
    let commitment = ctx.pairing(&mask, &ctx.g2());
    let c = key_challenge(params, &commitment, &key.id, nonce);
    KeyProof {
        commitment,
        response: mask.mul(&key.secret.pow(&c)),
        nonce: nonce.to_vec(),
    }
}

/// Checks `e(V, B) = R · e(H_V(ID_V), K_T)^c`.
pub fn verify_key_proof<B: Backend>(params: &SystemParams<B>, vehicle_id: &[u8], proof: &KeyProof<B>) -> bool {
    if proof.commitment.is_identity() || proof.response.is_identity() {
        return false;
    }
    let ctx = &params.ctx;
    let c = key_challenge(params, &proof.commitment, vehicle_id, &proof.nonce);
    let lhs = ctx.pairing(&proof.response, &ctx.g2());
    let rhs = proof
        .commitment
        .mul(&ctx.pairing(&params.h_vehicle(vehicle_id), &params.master_public).pow(&c));
    lhs == rhs
}

/// Manager side of the join: checks the key proof, draws `t` with
/// `t + x_R ≠ 0`, computes `D = (A5 / H_V(ID_V))^(1/(t+x_R))`, and records
/// `(ID_V, D, t, W = e(H_V(ID_V), B))` in the registration table.
pub fn join_issue<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    gm: &GmKey<B>,
    vehicle_id: &[u8],
    proof: &KeyProof<B>,
    table: &mut RegistrationTable<B>,
    rng: &mut R,
) -> Result<MembershipCertificate<B>, JoinError> {
    if !verify_key_proof(params, vehicle_id, proof) {
        return Err(JoinError::ProofRejected(String::from_utf8_lossy(vehicle_id).into_owned()));
    }
    let ctx = &params.ctx;
    let (exponent, inv) = loop {
        let t = ctx.random_nonzero_scalar(rng);
        if let Some(inv) = (t + gm.secret).invert() {
            break (t, inv);
        }
    };
    let h_v = params.h_vehicle(vehicle_id);
    let cert = params.a5.div(&h_v).pow(&inv);
    let record = RegistrationRecord {
        id: vehicle_id.to_vec(),
        cert,
        exponent,
        tracing_value: ctx.pairing(&h_v, &ctx.g2()),
    };
    table.insert(record)?;
    Ok(MembershipCertificate {
        cert,
        exponent,
        group_tag: gm.group_tag,
    })
}

/// Vehicle side: `e(A5, B) = e(D, B)^t · e(D, S) · e(H_V(ID_V), B)` with
/// `S` derived from `C` and the manager identity.
pub fn join_verify<B: Backend>(
    params: &SystemParams<B>,
    vehicle_id: &[u8],
    cert: &MembershipCertificate<B>,
    manager_id: &[u8],
) -> bool {
    let ctx = &params.ctx;
    let b = ctx.g2();
    let s = group_public_key(params, &cert.group_tag, manager_id);
    let lhs = ctx.pairing(&params.a5, &b);
    let rhs = ctx
        .pairing(&cert.cert, &b)
        .pow(&cert.exponent)
        .mul(&ctx.pairing(&cert.cert, &s))
        .mul(&ctx.pairing(&params.h_vehicle(vehicle_id), &b));
    lhs == rhs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{make_transparent_context, TransparentBackend, DEFAULT_MODULUS};
    use crate::ibgs::{keygen_gm, keygen_vehicle, setup, TeaSecret};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct World {
        params: SystemParams<TransparentBackend>,
        tea: TeaSecret<TransparentBackend>,
        gm: GmKey<TransparentBackend>,
        rng: ChaCha20Rng,
    }

    fn world(seed: u64) -> World {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let ctx = make_transparent_context(seed, DEFAULT_MODULUS).unwrap();
        let (params, tea) = setup(ctx, &mut rng);
        let gm = keygen_gm(&params, &tea, b"gm", &mut rng);
        World { params, tea, gm, rng }
    }

    #[test]
    fn honest_key_proof_verifies() {
        let mut w = world(1);
        let vk = keygen_vehicle(&w.params, &w.tea, b"car-1");
        let proof = prove_key(&w.params, &vk, b"nonce", &mut w.rng);
        assert!(verify_key_proof(&w.params, b"car-1", &proof));
        assert!(!verify_key_proof(&w.params, b"car-2", &proof));
    }

    #[test]
    fn tampered_key_proof_rejected() {
        let mut w = world(2);
        let vk = keygen_vehicle(&w.params, &w.tea, b"car-1");
        let proof = prove_key(&w.params, &vk, b"n", &mut w.rng);
        for _ in 0..50 {
            let mut bad = proof.clone();
            bad.response = bad.response.mul(&w.params.ctx.random_g1(&mut w.rng));
            assert!(!verify_key_proof(&w.params, b"car-1", &bad));
        }
        let mut bad = proof.clone();
        bad.nonce = b"m".to_vec();
        assert!(!verify_key_proof(&w.params, b"car-1", &bad));
        let mut bad = proof;
        bad.commitment = w.params.ctx.gt_identity();
        assert!(!verify_key_proof(&w.params, b"car-1", &bad));
    }

    #[test]
    fn issued_certificate_verifies_and_is_recorded() {
        let mut w = world(3);
        let mut table = RegistrationTable::new();
        for i in 0..5 {
            let id = format!("car-{i}");
            let vk = keygen_vehicle(&w.params, &w.tea, id.as_bytes());
            let proof = prove_key(&w.params, &vk, b"n", &mut w.rng);
            let cert = join_issue(&w.params, &w.gm, id.as_bytes(), &proof, &mut table, &mut w.rng).unwrap();
            assert!(join_verify(&w.params, id.as_bytes(), &cert, b"gm"));
            assert_eq!(table.len(), i + 1);
        }
    }

    #[test]
    fn certificate_exponent_oracle() {
        let mut w = world(4);
        let mut table = RegistrationTable::new();
        let vk = keygen_vehicle(&w.params, &w.tea, b"car");
        let proof = prove_key(&w.params, &vk, b"n", &mut w.rng);
        let cert = join_issue(&w.params, &w.gm, b"car", &proof, &mut table, &mut w.rng).unwrap();
        let be = w.params.ctx.backend();
        let lhs = be.log_g1(&cert.cert) * (cert.exponent + w.gm.secret);
        let rhs = be.log_g1(&w.params.a5) - be.log_g1(&w.params.h_vehicle(b"car"));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn bad_proof_refused_without_record() {
        let mut w = world(5);
        let mut table = RegistrationTable::new();
        let vk = keygen_vehicle(&w.params, &w.tea, b"car");
        let proof = prove_key(&w.params, &vk, b"n", &mut w.rng);
        let err = join_issue(&w.params, &w.gm, b"other", &proof, &mut table, &mut w.rng).unwrap_err();
        assert!(matches!(err, JoinError::ProofRejected(_)));
        assert!(table.is_empty());
    }

    #[test]
    fn rejoin_of_same_identity_is_refused() {
        let mut w = world(6);
        let mut table = RegistrationTable::new();
        let vk = keygen_vehicle(&w.params, &w.tea, b"car");
        let proof = prove_key(&w.params, &vk, b"n", &mut w.rng);
        join_issue(&w.params, &w.gm, b"car", &proof, &mut table, &mut w.rng).unwrap();
        assert!(matches!(
            join_issue(&w.params, &w.gm, b"car", &proof, &mut table, &mut w.rng),
            Err(JoinError::Table(TableError::Duplicate(_)))
        ));
    }

    #[test]
    fn corrupted_certificates_fail_verification() {
        let mut w = world(7);
        let mut table = RegistrationTable::new();
        let vk = keygen_vehicle(&w.params, &w.tea, b"car");
        let proof = prove_key(&w.params, &vk, b"n", &mut w.rng);
        let cert = join_issue(&w.params, &w.gm, b"car", &proof, &mut table, &mut w.rng).unwrap();
        for _ in 0..100 {
            let mut bad = cert;
            bad.cert = w.params.ctx.random_g1(&mut w.rng);
            assert!(!join_verify(&w.params, b"car", &bad, b"gm"));
        }
        let mut bad = cert;
        bad.exponent = bad.exponent + w.params.ctx.one();
        assert!(!join_verify(&w.params, b"car", &bad, b"gm"));
        assert!(!join_verify(&w.params, b"car", &cert, b"other-gm"));
    }
}
