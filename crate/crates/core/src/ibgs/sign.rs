use rand::RngCore;

use crate::algebra::{Backend, Group, HashDomain};

use super::keys::{group_public_key, SystemParams, VehicleCredential};
use super::{
    challenge_input, Blinded, Commitments, PairingCommitments, Responses, Signature, TraceCipher,
};

/// Signs `msg` anonymously on behalf of the group certified in `cred`,
/// encrypting the signer's tracing value to the opener `opener_id`.
pub fn sign<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    cred: &VehicleCredential<B>,
    opener_id: &[u8],
    manager_id: &[u8],
    msg: &[u8],
    rng: &mut R,
) -> Signature<B> {
    let ctx = &params.ctx;
    let (a, b, kt) = (ctx.g1(), ctx.g2(), params.master_public);
    let cert = &cred.certificate;
    let t = cert.exponent;
    let h_v = params.h_vehicle(&cred.key.id);
    let h_o = params.h_opener(opener_id);
    let group_key = group_public_key(params, &cert.group_tag, manager_id);

    // blinding
    let s1 = ctx.random_nonzero_scalar(rng);
    let cert_blind = cert.cert.mul(&params.a3.pow(&s1));
    let blinded = Blinded::<B> {
        anchor: a.pow(&s1),
        key: cred.key.secret.mul(&params.a1.pow(&s1)),
        identity: h_v.mul(&params.a2.pow(&s1)),
        cert: cert_blind,
        cert_power: cert_blind.pow(&t).mul(&params.a4.pow(&s1)),
    };
    let s2 = t * s1;

    // tracing ciphertext
    let d = ctx.random_nonzero_scalar(rng);
    let trace = TraceCipher::<B> {
        cipher: ctx.pairing(&h_v, &b).mul(&ctx.pairing(&h_o, &kt).pow(&d)),
        ephemeral: b.pow(&d),
    };

    // commitments
    let (r1, r2, r3, r4) = (
        ctx.random_nonzero_scalar(rng),
        ctx.random_nonzero_scalar(rng),
        ctx.random_nonzero_scalar(rng),
        ctx.random_nonzero_scalar(rng),
    );
    let (m1, m2, m3) = (ctx.random_g1(rng), ctx.random_g1(rng), ctx.random_g1(rng));
    let commitments = Commitments::<B> {
        anchor: a.pow(&r1),
        key: m1.mul(&params.a1.pow(&r1)),
        identity: m2.mul(&params.a2.pow(&r1)),
        cert: m3.mul(&params.a3.pow(&r1)),
        cert_power: blinded.cert.pow(&r3).mul(&params.a4.pow(&r1)),
        trace: b.pow(&r4),
    };
    let pairing_commitments = PairingCommitments::<B> {
        key_link: ctx
            .pairing(&params.a1, &b)
            .inverse()
            .mul(&ctx.pairing(&params.a2, &kt))
            .pow(&r1),
        cert_link: ctx.pairing(&params.a3, &b).pow(&r2).mul(
            &ctx.pairing(&params.a3, &group_key)
                .mul(&ctx.pairing(&params.a2.mul(&params.a4), &b))
                .pow(&r1),
        ),
        trace_link: ctx
            .pairing(&h_o, &kt)
            .pow(&r4)
            .mul(&ctx.pairing(&params.a2, &b).pow(&r1).inverse()),
    };

    let f = ctx.hash_to_zp(
        HashDomain::Challenge,
        &challenge_input(&blinded, &cert.group_tag, &trace, msg, &commitments, &pairing_commitments),
    );

    let responses = Responses::<B> {
        anchor: r1 - f * s1,
        cert_exponent: r3 - f * t,
        product: r2 - f * s2,
        trace: r4 - f * d,
        key: m1.mul(&cred.key.secret.pow(&f).inverse()),
        identity: m2.mul(&h_v.pow(&f).inverse()),
        cert: m3.mul(&cert.cert.pow(&f).inverse()),
    };

    Signature {
        blinded,
        responses,
        challenge: f,
        group_tag: cert.group_tag,
        trace,
        commitments,
        pairing_commitments,
        group_key,
    }
}
