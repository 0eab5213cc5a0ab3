//! Individual verification of full and trimmed signatures.

use thiserror::Error;

use crate::algebra::{Backend, Group, HashDomain};

use super::keys::{group_public_key, SystemParams};
use super::{
    challenge_input, Blinded, Commitments, ModifiedSignature, PairingCommitments, Responses, Signature, TraceCipher,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("signature carries an identity element where a generator-like value is required")]
    Degenerate,
    #[error("transmitted group key does not match the manager's tag")]
    GroupKeyMismatch,
    #[error("challenge hash mismatch")]
    HashMismatch,
    #[error("transmitted commitments differ from the recomputed ones")]
    CommitmentMismatch,
    #[error("key-link pairing equation fails")]
    KeyLink,
    #[error("certificate-link pairing equation fails")]
    CertLink,
    #[error("trace-link pairing equation fails")]
    TraceLink,
}

fn degenerate<B: Backend>(blinded: &Blinded<B>, group_tag: &B::G2, trace: &TraceCipher<B>) -> bool {
    [blinded.anchor, blinded.key, blinded.identity, blinded.cert, blinded.cert_power]
        .iter()
        .any(Group::is_identity)
        || group_tag.is_identity()
        || trace.ephemeral.is_identity()
}

/// Rebuilds `(β0, β1, β2, β3, β5, β7)` from responses and blinded values:
///
/// `β0 = A^z0·Γ0^f`, `β1 = Z1·A1^z0·Γ1^f`, `β2 = Z2·A2^z0·Γ2^f`,
/// `β3 = Z3·A3^z0·Γ3^f`, `β5 = Γ3^z1·A4^z0·Γ5^f`, `β7 = B^z3·V2^f`.
///
/// No pairings.
pub fn reconstruct_commitments<B: Backend>(
    params: &SystemParams<B>,
    blinded: &Blinded<B>,
    responses: &Responses<B>,
    challenge: &B::Scalar,
    trace: &TraceCipher<B>,
) -> Commitments<B> {
    let ctx = &params.ctx;
    let (z0, f) = (&responses.anchor, challenge);
    Commitments {
        anchor: ctx.g1().pow(z0).mul(&blinded.anchor.pow(f)),
        key: responses.key.mul(&params.a1.pow(z0)).mul(&blinded.key.pow(f)),
        identity: responses
            .identity
            .mul(&params.a2.pow(z0))
            .mul(&blinded.identity.pow(f)),
        cert: responses.cert.mul(&params.a3.pow(z0)).mul(&blinded.cert.pow(f)),
        cert_power: blinded
            .cert
            .pow(&responses.cert_exponent)
            .mul(&params.a4.pow(z0))
            .mul(&blinded.cert_power.pow(f)),
        trace: ctx.g2().pow(&responses.trace).mul(&trace.ephemeral.pow(f)),
    }
}

/// The values `(β4, β6, β8)` must take for a valid signature:
///
/// * `β4 = [e(A1,B)^-1·e(A2,K_T)]^z0 · Γ4^f`, `Γ4 = e(Γ1,B)^-1·e(Γ2,K_T)`
/// * `β6 = e(A3,B)^z2·[e(A3,S)·e(A2A4,B)]^z0 · Γ6^f`,
///   `Γ6 = e(A5,B)^-1·e(Γ3,S)·e(Γ2Γ5,B)`
/// * `β8 = e(H_O(ID_O),K_T)^z3·e(A2,B)^-z0 · Γ8^f`, `Γ8 = v1·e(Γ2,B)^-1`
///
/// Thirteen pairings.
fn expected_pairing_commitments<B: Backend>(
    params: &SystemParams<B>,
    blinded: &Blinded<B>,
    responses: &Responses<B>,
    challenge: &B::Scalar,
    trace: &TraceCipher<B>,
    group_key: &B::G2,
    opener_id: &[u8],
) -> PairingCommitments<B> {
    let ctx = &params.ctx;
    let (b, kt) = (ctx.g2(), params.master_public);
    let (z0, f) = (&responses.anchor, challenge);

    let key_aux = ctx
        .pairing(&blinded.key, &b)
        .inverse()
        .mul(&ctx.pairing(&blinded.identity, &kt));
    let cert_aux = ctx
        .pairing(&params.a5, &b)
        .inverse()
        .mul(&ctx.pairing(&blinded.cert, group_key))
        .mul(&ctx.pairing(&blinded.identity.mul(&blinded.cert_power), &b));
    let trace_aux = trace.cipher.div(&ctx.pairing(&blinded.identity, &b));

    let key_link = ctx
        .pairing(&params.a1, &b)
        .inverse()
        .mul(&ctx.pairing(&params.a2, &kt))
        .pow(z0)
        .mul(&key_aux.pow(f));
    let cert_link = ctx
        .pairing(&params.a3, &b)
        .pow(&responses.product)
        .mul(
            &ctx.pairing(&params.a3, group_key)
                .mul(&ctx.pairing(&params.a2.mul(&params.a4), &b))
                .pow(z0),
        )
        .mul(&cert_aux.pow(f));
    let trace_link = ctx
        .pairing(&params.h_opener(opener_id), &kt)
        .pow(&responses.trace)
        .mul(&ctx.pairing(&params.a2, &b).pow(z0).inverse())
        .mul(&trace_aux.pow(f));

    PairingCommitments {
        key_link,
        cert_link,
        trace_link,
    }
}

fn recompute_challenge<B: Backend>(
    params: &SystemParams<B>,
    blinded: &Blinded<B>,
    group_tag: &B::G2,
    trace: &TraceCipher<B>,
    msg: &[u8],
    commitments: &Commitments<B>,
    pairing: &PairingCommitments<B>,
) -> B::Scalar {
    params.ctx.hash_to_zp(
        HashDomain::Challenge,
        &challenge_input(blinded, group_tag, trace, msg, commitments, pairing),
    )
}

/// Verifies a full signature by recomputing every commitment and the
/// challenge. Transmitted redundant values (`S` and all `β`) must also match
/// what the verifier recomputes.
pub fn check_individual_original<B: Backend>(
    params: &SystemParams<B>,
    sig: &Signature<B>,
    msg: &[u8],
    opener_id: &[u8],
    manager_id: &[u8],
) -> Result<(), Rejection> {
    if degenerate(&sig.blinded, &sig.group_tag, &sig.trace) {
        return Err(Rejection::Degenerate);
    }
    let group_key = group_public_key(params, &sig.group_tag, manager_id);
    let commitments = reconstruct_commitments(params, &sig.blinded, &sig.responses, &sig.challenge, &sig.trace);
    let pairing = expected_pairing_commitments(
        params,
        &sig.blinded,
        &sig.responses,
        &sig.challenge,
        &sig.trace,
        &group_key,
        opener_id,
    );
    let f = recompute_challenge(params, &sig.blinded, &sig.group_tag, &sig.trace, msg, &commitments, &pairing);
    if f != sig.challenge {
        return Err(Rejection::HashMismatch);
    }
    if group_key != sig.group_key {
        return Err(Rejection::GroupKeyMismatch);
    }
    if commitments != sig.commitments || pairing != sig.pairing_commitments {
        return Err(Rejection::CommitmentMismatch);
    }
    Ok(())
}

pub fn verify_individual_original<B: Backend>(
    params: &SystemParams<B>,
    sig: &Signature<B>,
    msg: &[u8],
    opener_id: &[u8],
    manager_id: &[u8],
) -> bool {
    check_individual_original(params, sig, msg, opener_id, manager_id).is_ok()
}

/// Verifies a trimmed signature: hash check over rebuilt `(β0..β3, β5, β7)`
/// and transmitted `(β4, β6, β8)`, then the three pairing equations.
pub fn check_individual_modified<B: Backend>(
    params: &SystemParams<B>,
    sig: &ModifiedSignature<B>,
    msg: &[u8],
    opener_id: &[u8],
    manager_id: &[u8],
) -> Result<(), Rejection> {
    if degenerate(&sig.blinded, &sig.group_tag, &sig.trace) {
        return Err(Rejection::Degenerate);
    }
    let group_key = group_public_key(params, &sig.group_tag, manager_id);
    let commitments = reconstruct_commitments(params, &sig.blinded, &sig.responses, &sig.challenge, &sig.trace);
    let f = recompute_challenge(
        params,
        &sig.blinded,
        &sig.group_tag,
        &sig.trace,
        msg,
        &commitments,
        &sig.pairing_commitments,
    );
    if f != sig.challenge {
        return Err(Rejection::HashMismatch);
    }
    let expected = expected_pairing_commitments(
        params,
        &sig.blinded,
        &sig.responses,
        &sig.challenge,
        &sig.trace,
        &group_key,
        opener_id,
    );
    let got = &sig.pairing_commitments;
    if got.key_link != expected.key_link {
        return Err(Rejection::KeyLink);
    }
    if got.cert_link != expected.cert_link {
        return Err(Rejection::CertLink);
    }
    if got.trace_link != expected.trace_link {
        return Err(Rejection::TraceLink);
    }
    Ok(())
}

pub fn verify_individual_modified<B: Backend>(
    params: &SystemParams<B>,
    sig: &ModifiedSignature<B>,
    msg: &[u8],
    opener_id: &[u8],
    manager_id: &[u8],
) -> bool {
    check_individual_modified(params, sig, msg, opener_id, manager_id).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibgs::testkit::transparent_world;

    #[test]
    fn honest_signatures_verify_in_both_forms() {
        let mut w = transparent_world(31);
        for i in 0..4 {
            for m in 0..10u8 {
                let msg = [b'm', m];
                let sig = w.sign(i, &msg);
                let (o, g) = w.ids(i);
                assert_eq!(check_individual_original(&w.params, &sig, &msg, &o, &g), Ok(()));
                assert_eq!(check_individual_modified(&w.params, &sig.to_modified(), &msg, &o, &g), Ok(()));
            }
        }
    }

    #[test]
    fn individual_paths_cost_thirteen_pairings() {
        let mut w = transparent_world(32);
        let sig = w.sign(0, b"m");
        let (o, g) = w.ids(0);
        w.params.ctx.reset_pairing_count();
        assert!(verify_individual_original(&w.params, &sig, b"m", &o, &g));
        assert_eq!(w.params.ctx.pairing_count(), 13);
        w.params.ctx.reset_pairing_count();
        assert!(verify_individual_modified(&w.params, &sig.to_modified(), b"m", &o, &g));
        assert_eq!(w.params.ctx.pairing_count(), 13);
    }

    #[test]
    fn corrupted_certificate_fails_cert_link() {
        let mut w = transparent_world(33);
        let (o, g) = w.ids(1);
        for _ in 0..20 {
            let sig = w.forge(1, b"m");
            assert_eq!(
                check_individual_modified(&w.params, &sig.to_modified(), b"m", &o, &g),
                Err(Rejection::CertLink)
            );
            assert_eq!(
                check_individual_original(&w.params, &sig, b"m", &o, &g),
                Err(Rejection::HashMismatch)
            );
        }
    }

    #[test]
    fn wrong_message_or_authority_rejected() {
        let mut w = transparent_world(34);
        let sig = w.sign(0, b"m");
        let (o, g) = w.ids(0);
        let short = sig.to_modified();
        assert_eq!(check_individual_modified(&w.params, &short, b"n", &o, &g), Err(Rejection::HashMismatch));
        assert_eq!(check_individual_original(&w.params, &sig, b"n", &o, &g), Err(Rejection::HashMismatch));
        assert!(!verify_individual_modified(&w.params, &short, b"m", b"tsd-x", &g));
        assert!(!verify_individual_modified(&w.params, &short, b"m", &o, b"gm-x"));
        assert!(!verify_individual_original(&w.params, &sig, b"m", &o, b"gm-x"));
    }

    #[test]
    fn every_field_is_bound() {
        let mut w = transparent_world(35);
        let sig = w.sign(2, b"m");
        let (o, g) = w.ids(2);
        let ctx = w.params.ctx.clone();
        let x1 = ctx.g1();
        let x2 = ctx.g2();
        let xt = ctx.pairing(&x1, &x2);
        let one = ctx.one();
        type Mutation<'a> = Box<dyn Fn(&mut ModifiedSignature<crate::algebra::TransparentBackend>) + 'a>;
        let mut variants: Vec<Mutation> = vec![
            Box::new(|s| s.blinded.anchor = s.blinded.anchor.mul(&x1)),
            Box::new(|s| s.blinded.key = s.blinded.key.mul(&x1)),
            Box::new(|s| s.blinded.identity = s.blinded.identity.mul(&x1)),
            Box::new(|s| s.blinded.cert = s.blinded.cert.mul(&x1)),
            Box::new(|s| s.blinded.cert_power = s.blinded.cert_power.mul(&x1)),
            Box::new(|s| s.responses.anchor = s.responses.anchor + one),
            Box::new(|s| s.responses.cert_exponent = s.responses.cert_exponent + one),
            Box::new(|s| s.responses.product = s.responses.product + one),
            Box::new(|s| s.responses.trace = s.responses.trace + one),
            Box::new(|s| s.responses.key = s.responses.key.mul(&x1)),
            Box::new(|s| s.responses.identity = s.responses.identity.mul(&x1)),
            Box::new(|s| s.responses.cert = s.responses.cert.mul(&x1)),
            Box::new(|s| s.challenge = s.challenge + one),
            Box::new(|s| s.group_tag = s.group_tag.mul(&x2)),
            Box::new(|s| s.trace.cipher = s.trace.cipher.mul(&xt)),
            Box::new(|s| s.trace.ephemeral = s.trace.ephemeral.mul(&x2)),
            Box::new(|s| s.pairing_commitments.key_link = s.pairing_commitments.key_link.mul(&xt)),
            Box::new(|s| s.pairing_commitments.cert_link = s.pairing_commitments.cert_link.mul(&xt)),
            Box::new(|s| s.pairing_commitments.trace_link = s.pairing_commitments.trace_link.mul(&xt)),
        ];
        assert_eq!(variants.len(), crate::ibgs::MODIFIED_SIGNATURE_ELEMENTS);
        for (i, tamper) in variants.drain(..).enumerate() {
            let mut bad = sig.to_modified();
            tamper(&mut bad);
            assert!(
                !verify_individual_modified(&w.params, &bad, b"m", &o, &g),
                "tampering field {i} went unnoticed"
            );
        }
    }

    #[test]
    fn original_rejects_resampled_redundant_fields() {
        let mut w = transparent_world(36);
        let sig = w.sign(0, b"m");
        let (o, g) = w.ids(0);
        let x1 = w.params.ctx.g1();
        let mut bad = sig;
        bad.commitments.cert_power = bad.commitments.cert_power.mul(&x1);
        assert_eq!(check_individual_original(&w.params, &bad, b"m", &o, &g), Err(Rejection::CommitmentMismatch));
        let mut bad = sig;
        bad.group_key = bad.group_key.mul(&w.params.ctx.g2());
        assert_eq!(check_individual_original(&w.params, &bad, b"m", &o, &g), Err(Rejection::GroupKeyMismatch));
        // the trimmed form never looks at either field
        assert!(verify_individual_modified(&w.params, &bad.to_modified(), b"m", &o, &g));
    }

    #[test]
    fn degenerate_elements_rejected_before_pairings() {
        let mut w = transparent_world(37);
        let sig = w.sign(0, b"m");
        let (o, g) = w.ids(0);
        let mut bad = sig.to_modified();
        bad.blinded.anchor = w.params.ctx.g1_identity();
        w.params.ctx.reset_pairing_count();
        assert_eq!(check_individual_modified(&w.params, &bad, b"m", &o, &g), Err(Rejection::Degenerate));
        assert_eq!(w.params.ctx.pairing_count(), 0);
    }

    #[test]
    fn signatures_do_not_repeat_linkable_values() {
        let mut w = transparent_world(38);
        let (a, b) = (w.sign(0, b"m"), w.sign(0, b"m"));
        assert_ne!(a.blinded.identity, b.blinded.identity);
        assert_ne!(a.blinded.cert, b.blinded.cert);
        assert_ne!(a.trace.cipher, b.trace.cipher);
        assert_ne!(a.blinded.identity, w.params.h_vehicle(&w.deployment.vehicles[0].key.id));
    }

    #[test]
    fn reconstruction_matches_signer_commitments() {
        let mut w = transparent_world(39);
        let sig = w.sign(3, b"m");
        let rebuilt = reconstruct_commitments(&w.params, &sig.blinded, &sig.responses, &sig.challenge, &sig.trace);
        assert_eq!(rebuilt, sig.commitments);
    }
}
