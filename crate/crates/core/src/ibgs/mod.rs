//! Identity-based group signatures.
//!
//! Roles: a trusted authority holding the master scalar `x_T`, group
//! managers that certify vehicles, an opening authority able to trace
//! signatures, and vehicles that sign anonymously on behalf of a group.
//!
//! Notation used throughout the docs of this module (`A`, `B` generate `G1`
//! and `G2`, `e` is the pairing):
//!
//! | symbol | meaning |
//! |---|---|
//! | `A1..A5` | public `G1` bases |
//! | `K_T = B^x_T` | authority public key |
//! | `C = B^r`, `x_R = r + H_R(C‖ID_R)·x_T` | manager tag and secret |
//! | `S = C·K_T^H_R(C‖ID_R) = B^x_R` | group public key |
//! | `x_V = H_V(ID_V)^x_T`, `x_O = H_O(ID_O)^x_T` | vehicle and opener secrets |
//! | `(D, t, C)`, `D = (A5 / H_V(ID_V))^(1/(t+x_R))` | membership certificate |
//!
//! Signature components map onto struct fields as follows:
//!
//! | field | value |
//! |---|---|
//! | `blinded.anchor` | `Γ0 = A^s1` |
//! | `blinded.key` | `Γ1 = x_V·A1^s1` |
//! | `blinded.identity` | `Γ2 = H_V(ID_V)·A2^s1` |
//! | `blinded.cert` | `Γ3 = D·A3^s1` |
//! | `blinded.cert_power` | `Γ5 = Γ3^t·A4^s1` |
//! | `trace.cipher`, `trace.ephemeral` | `v1 = e(H_V(ID_V),B)·e(H_O(ID_O),K_T)^d`, `V2 = B^d` |
//! | `commitments.{anchor,key,identity,cert,cert_power,trace}` | `β0, β1, β2, β3, β5, β7` |
//! | `pairing_commitments.{key_link,cert_link,trace_link}` | `β4, β6, β8` |
//! | `challenge` | `f` |
//! | `responses.{anchor,cert_exponent,product,trace}` | `z0 = r1−f·s1`, `z1 = r3−f·t`, `z2 = r2−f·s2`, `z3 = r4−f·d` |
//! | `responses.{key,identity,cert}` | `Z1 = R1·x_V^−f`, `Z2 = R2·H_V^−f`, `Z3 = R3·D^−f` |
//!
//! The verifier equations consume the responses as `z4 := z1`, `z5 := z2`,
//! `z6 := z3`; this is the only assignment under which every commitment
//! reconstructs.

mod deployment;
mod join;
mod keys;
mod sign;
mod verify;
mod wire;

#[cfg(test)]
pub(crate) mod testkit;

pub use deployment::Deployment;
pub use join::{join_issue, join_verify, prove_key, verify_key_proof, JoinError, KeyProof, MembershipCertificate};
pub use keys::{
    group_public_key, keygen_gm, keygen_tsd, keygen_vehicle, setup, GmKey, OpenerKey, SystemParams, TeaSecret,
    VehicleCredential, VehicleKey,
};
pub use sign::sign;
pub use verify::{
    check_individual_modified, check_individual_original, reconstruct_commitments, verify_individual_modified,
    verify_individual_original, Rejection,
};
pub use wire::{SignatureForm, FULL_SIGNATURE_ELEMENTS, MODIFIED_SIGNATURE_ELEMENTS, WIRE_VERSION};

use crate::algebra::{Backend, Writer};

/// `(Γ0, Γ1, Γ2, Γ3, Γ5)`.
#[derive(Debug, PartialEq, Eq)]
pub struct Blinded<B: Backend> {
    pub anchor: B::G1,
    pub key: B::G1,
    pub identity: B::G1,
    pub cert: B::G1,
    pub cert_power: B::G1,
}

copy_with_backend!(Blinded);

/// `(z0, z1, z2, z3)` and `(Z1, Z2, Z3)`.
#[derive(Debug, PartialEq, Eq)]
pub struct Responses<B: Backend> {
    pub anchor: B::Scalar,
    pub cert_exponent: B::Scalar,
    pub product: B::Scalar,
    pub trace: B::Scalar,
    pub key: B::G1,
    pub identity: B::G1,
    pub cert: B::G1,
}

copy_with_backend!(Responses);

/// `(v1, V2)`: the identity value `e(H_V(ID_V), B)` encrypted to the opener.
#[derive(Debug, PartialEq, Eq)]
pub struct TraceCipher<B: Backend> {
    pub cipher: B::Gt,
    pub ephemeral: B::G2,
}

copy_with_backend!(TraceCipher);

/// Non-pairing commitments `(β0, β1, β2, β3, β5, β7)`.
#[derive(Debug, PartialEq, Eq)]
pub struct Commitments<B: Backend> {
    pub anchor: B::G1,
    pub key: B::G1,
    pub identity: B::G1,
    pub cert: B::G1,
    pub cert_power: B::G1,
    pub trace: B::G2,
}

copy_with_backend!(Commitments);

/// Pairing commitments `(β4, β6, β8)`.
#[derive(Debug, PartialEq, Eq)]
pub struct PairingCommitments<B: Backend> {
    pub key_link: B::Gt,
    pub cert_link: B::Gt,
    pub trace_link: B::Gt,
}

copy_with_backend!(PairingCommitments);

impl<B: Backend> PairingCommitments<B> {
    pub fn product(&self) -> B::Gt {
        use crate::algebra::Group;
        self.key_link.mul(&self.cert_link).mul(&self.trace_link)
    }
}

/// Full signature as produced by the signer, carrying every commitment and
/// the group public key.
#[derive(Debug, PartialEq, Eq)]
pub struct Signature<B: Backend> {
    pub blinded: Blinded<B>,
    pub responses: Responses<B>,
    pub challenge: B::Scalar,
    pub group_tag: B::G2,
    pub trace: TraceCipher<B>,
    pub commitments: Commitments<B>,
    pub pairing_commitments: PairingCommitments<B>,
    pub group_key: B::G2,
}

copy_with_backend!(Signature);

/// Trimmed signature: drops `S` and every commitment the verifier can
/// rebuild without pairings, keeping `(β4, β6, β8)`.
#[derive(Debug, PartialEq, Eq)]
pub struct ModifiedSignature<B: Backend> {
    pub blinded: Blinded<B>,
    pub responses: Responses<B>,
    pub pairing_commitments: PairingCommitments<B>,
    pub challenge: B::Scalar,
    pub group_tag: B::G2,
    pub trace: TraceCipher<B>,
}

copy_with_backend!(ModifiedSignature);

impl<B: Backend> Signature<B> {
    pub fn to_modified(&self) -> ModifiedSignature<B> {
        ModifiedSignature {
            blinded: self.blinded,
            responses: self.responses,
            pairing_commitments: self.pairing_commitments,
            challenge: self.challenge,
            group_tag: self.group_tag,
            trace: self.trace,
        }
    }
}

impl<B: Backend> From<&Signature<B>> for ModifiedSignature<B> {
    fn from(sig: &Signature<B>) -> Self {
        sig.to_modified()
    }
}

/// Free-function form of [`Signature::to_modified`].
pub fn to_modified<B: Backend>(sig: &Signature<B>) -> ModifiedSignature<B> {
    sig.to_modified()
}

/// Bytes hashed into the challenge `f`:
/// `Γ0‖Γ1‖Γ2‖Γ3‖Γ5 ‖ C ‖ v1 ‖ V2 ‖ M ‖ β0‖β1‖β2‖β3‖β4‖β5‖β6‖β7‖β8`.
pub(crate) fn challenge_input<B: Backend>(
    blinded: &Blinded<B>,
    group_tag: &B::G2,
    trace: &TraceCipher<B>,
    msg: &[u8],
    commitments: &Commitments<B>,
    pairing: &PairingCommitments<B>,
) -> Vec<u8> {
    let mut w = Writer::new();
    w.elem(&blinded.anchor)
        .elem(&blinded.key)
        .elem(&blinded.identity)
        .elem(&blinded.cert)
        .elem(&blinded.cert_power)
        .elem(group_tag)
        .elem(&trace.cipher)
        .elem(&trace.ephemeral)
        .bytes(msg)
        .elem(&commitments.anchor)
        .elem(&commitments.key)
        .elem(&commitments.identity)
        .elem(&commitments.cert)
        .elem(&pairing.key_link)
        .elem(&commitments.cert_power)
        .elem(&pairing.cert_link)
        .elem(&commitments.trace)
        .elem(&pairing.trace_link);
    w.finish()
}
