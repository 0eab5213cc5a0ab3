//! Byte encodings for both signature forms.
//!
//! Layout: version byte, form byte, then the elements in a fixed order, each
//! with a `u16` length prefix.

use crate::algebra::{AlgebraError, Backend, GroupContext, Reader, Writer};

use super::{Blinded, Commitments, ModifiedSignature, PairingCommitments, Responses, Signature, TraceCipher};

pub const WIRE_VERSION: u8 = 1;

/// `Γ0,Γ1,Γ2,Γ3,Γ5`, `z0..z3`, `Z1..Z3`, `f`, `C`, `v1`, `V2`, `β0..β8`, `S`.
pub const FULL_SIGNATURE_ELEMENTS: usize = 26;
/// Same minus `S` and the six non-pairing commitments.
pub const MODIFIED_SIGNATURE_ELEMENTS: usize = 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum SignatureForm {
    Full = 0,
    Modified = 1,
}

impl SignatureForm {
    /// Reads the form from an encoded signature's header.
    pub fn of(bytes: &[u8]) -> Result<Self, AlgebraError> {
        match bytes {
            [WIRE_VERSION, 0, ..] => Ok(Self::Full),
            [WIRE_VERSION, 1, ..] => Ok(Self::Modified),
            [WIRE_VERSION, tag, ..] => Err(AlgebraError::decode("signature", format!("unknown form tag {tag}"))),
            [v, _, ..] => Err(AlgebraError::decode("signature", format!("unsupported version {v}"))),
            _ => Err(AlgebraError::decode("signature", "missing header")),
        }
    }
}

fn write_core<B: Backend>(w: &mut Writer, blinded: &Blinded<B>, responses: &Responses<B>) {
    w.elem(&blinded.anchor)
        .elem(&blinded.key)
        .elem(&blinded.identity)
        .elem(&blinded.cert)
        .elem(&blinded.cert_power)
        .scalar(&responses.anchor)
        .scalar(&responses.cert_exponent)
        .scalar(&responses.product)
        .scalar(&responses.trace)
        .elem(&responses.key)
        .elem(&responses.identity)
        .elem(&responses.cert);
}

fn read_core<B: Backend>(r: &mut Reader<'_, B>) -> Result<(Blinded<B>, Responses<B>), AlgebraError> {
    let blinded = Blinded::<B> {
        anchor: r.g1()?,
        key: r.g1()?,
        identity: r.g1()?,
        cert: r.g1()?,
        cert_power: r.g1()?,
    };
    let responses = Responses::<B> {
        anchor: r.scalar()?,
        cert_exponent: r.scalar()?,
        product: r.scalar()?,
        trace: r.scalar()?,
        key: r.g1()?,
        identity: r.g1()?,
        cert: r.g1()?,
    };
    Ok((blinded, responses))
}

fn header<B: Backend>(r: &mut Reader<'_, B>, expect: SignatureForm) -> Result<(), AlgebraError> {
    let version = r.byte("version")?;
    if version != WIRE_VERSION {
        return Err(AlgebraError::decode("signature", format!("unsupported version {version}")));
    }
    let form = r.byte("form")?;
    if form != expect as u8 {
        return Err(AlgebraError::decode(
            "signature",
            format!("form tag {form}, expected {}", expect as u8),
        ));
    }
    Ok(())
}

impl<B: Backend> Signature<B> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(&[WIRE_VERSION, SignatureForm::Full as u8]);
        write_core(&mut w, &self.blinded, &self.responses);
        w.scalar(&self.challenge)
            .elem(&self.group_tag)
            .elem(&self.trace.cipher)
            .elem(&self.trace.ephemeral)
            .elem(&self.commitments.anchor)
            .elem(&self.commitments.key)
            .elem(&self.commitments.identity)
            .elem(&self.commitments.cert)
            .elem(&self.pairing_commitments.key_link)
            .elem(&self.commitments.cert_power)
            .elem(&self.pairing_commitments.cert_link)
            .elem(&self.commitments.trace)
            .elem(&self.pairing_commitments.trace_link)
            .elem(&self.group_key);
        debug_assert_eq!(w.field_count(), FULL_SIGNATURE_ELEMENTS);
        w.finish()
    }

    pub fn from_bytes(ctx: &GroupContext<B>, bytes: &[u8]) -> Result<Self, AlgebraError> {
        let mut r = Reader::new(ctx, bytes);
        header(&mut r, SignatureForm::Full)?;
        let (blinded, responses) = read_core(&mut r)?;
        let challenge = r.scalar()?;
        let group_tag = r.g2()?;
        let trace = TraceCipher::<B> {
            cipher: r.gt()?,
            ephemeral: r.g2()?,
        };
        let (anchor, key, identity, cert) = (r.g1()?, r.g1()?, r.g1()?, r.g1()?);
        let key_link = r.gt()?;
        let cert_power = r.g1()?;
        let cert_link = r.gt()?;
        let trace_commit = r.g2()?;
        let trace_link = r.gt()?;
        let group_key = r.g2()?;
        r.finish()?;
        Ok(Self {
            blinded,
            responses,
            challenge,
            group_tag,
            trace,
            commitments: Commitments {
                anchor,
                key,
                identity,
                cert,
                cert_power,
                trace: trace_commit,
            },
            pairing_commitments: PairingCommitments {
                key_link,
                cert_link,
                trace_link,
            },
            group_key,
        })
    }
}

impl<B: Backend> ModifiedSignature<B> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.raw(&[WIRE_VERSION, SignatureForm::Modified as u8]);
        write_core(&mut w, &self.blinded, &self.responses);
        w.scalar(&self.challenge)
            .elem(&self.group_tag)
            .elem(&self.trace.cipher)
            .elem(&self.trace.ephemeral)
            .elem(&self.pairing_commitments.key_link)
            .elem(&self.pairing_commitments.cert_link)
            .elem(&self.pairing_commitments.trace_link);
        debug_assert_eq!(w.field_count(), MODIFIED_SIGNATURE_ELEMENTS);
        w.finish()
    }

    pub fn from_bytes(ctx: &GroupContext<B>, bytes: &[u8]) -> Result<Self, AlgebraError> {
        let mut r = Reader::new(ctx, bytes);
        header(&mut r, SignatureForm::Modified)?;
        let (blinded, responses) = read_core(&mut r)?;
        let challenge = r.scalar()?;
        let group_tag = r.g2()?;
        let trace = TraceCipher::<B> {
            cipher: r.gt()?,
            ephemeral: r.g2()?,
        };
        let pairing_commitments = PairingCommitments::<B> {
            key_link: r.gt()?,
            cert_link: r.gt()?,
            trace_link: r.gt()?,
        };
        r.finish()?;
        Ok(Self {
            blinded,
            responses,
            pairing_commitments,
            challenge,
            group_tag,
            trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use crate::ibgs::testkit::{transparent_world, World};

    use super::*;

    #[test]
    fn full_roundtrip() {
        let mut w: World<_> = transparent_world(11);
        let sig = w.sign(0, b"hello");
        let bytes = sig.to_bytes();
        assert_eq!(SignatureForm::of(&bytes).unwrap(), SignatureForm::Full);
        assert_eq!(Signature::from_bytes(&w.params.ctx, &bytes).unwrap(), sig);
    }

    #[test]
    fn modified_roundtrip_and_is_shorter() {
        let mut w = transparent_world(12);
        let sig = w.sign(0, b"hello");
        let full = sig.to_bytes();
        let short = sig.to_modified().to_bytes();
        assert_eq!(SignatureForm::of(&short).unwrap(), SignatureForm::Modified);
        assert_eq!(ModifiedSignature::from_bytes(&w.params.ctx, &short).unwrap(), sig.to_modified());
        assert!(short.len() < full.len());
    }

    #[test]
    fn wrong_form_or_version_rejected() {
        let mut w = transparent_world(13);
        let sig = w.sign(0, b"m");
        let full = sig.to_bytes();
        assert!(ModifiedSignature::from_bytes(&w.params.ctx, &full).is_err());
        let mut bad = full.clone();
        bad[0] = 9;
        assert!(Signature::from_bytes(&w.params.ctx, &bad).is_err());
        assert!(SignatureForm::of(&bad).is_err());
        let mut bad = full.clone();
        bad[1] = 7;
        assert!(SignatureForm::of(&bad).is_err());
        assert!(SignatureForm::of(&[1]).is_err());
    }

    #[test]
    fn truncation_and_trailing_bytes_rejected() {
        let mut w = transparent_world(14);
        let bytes = w.sign(0, b"m").to_modified().to_bytes();
        for cut in [2, 10, bytes.len() - 1] {
            assert!(ModifiedSignature::from_bytes(&w.params.ctx, &bytes[..cut]).is_err());
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(ModifiedSignature::from_bytes(&w.params.ctx, &long).is_err());
    }
}
