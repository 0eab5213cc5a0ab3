//! Opening authority: the registration table, tracing a signature back to a
//! vehicle, a publicly checkable proof of correct opening, and revocation.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::RngCore;
use thiserror::Error;

use crate::algebra::{digest, AlgebraError, Backend, Group, HashDomain, Writer};
use crate::ibgs::{OpenerKey, SystemParams, TraceCipher};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("vehicle {0} is already registered")]
    Duplicate(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: stored digest does not match the vehicle identity")]
    DigestMismatch { line: usize },
}

/// One row: `(ID_V, D, t, W = e(H_V(ID_V), B))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrationRecord<B: Backend> {
    pub id: Vec<u8>,
    pub cert: B::G1,
    pub exponent: B::Scalar,
    pub tracing_value: B::Gt,
}

/// Registration records keyed by the SHA-256 digest of `W`.
#[derive(Debug, Clone)]
pub struct RegistrationTable<B: Backend> {
    by_digest: BTreeMap<[u8; 32], RegistrationRecord<B>>,
}

impl<B: Backend> Default for RegistrationTable<B> {
    fn default() -> Self {
        Self::new()
    }
}

impl<B: Backend> RegistrationTable<B> {
    pub fn new() -> Self {
        Self {
            by_digest: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.by_digest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_digest.is_empty()
    }

    pub fn insert(&mut self, record: RegistrationRecord<B>) -> Result<(), TableError> {
        let key = digest(&record.tracing_value);
        if self.by_digest.contains_key(&key) {
            return Err(TableError::Duplicate(String::from_utf8_lossy(&record.id).into_owned()));
        }
        self.by_digest.insert(key, record);
        Ok(())
    }

    pub fn lookup(&self, tracing_value: &B::Gt) -> Option<&RegistrationRecord<B>> {
        self.by_digest.get(&digest(tracing_value))
    }

    pub fn lookup_digest(&self, key: &[u8; 32]) -> Option<&RegistrationRecord<B>> {
        self.by_digest.get(key)
    }

    pub fn records(&self) -> impl Iterator<Item = &RegistrationRecord<B>> {
        self.by_digest.values()
    }

    /// One line per record: `digest_hex id_hex cert_hex exponent_hex`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, rec) in &self.by_digest {
            let _ = writeln!(
                out,
                "{} {} {} {}",
                hex::encode(key),
                hex::encode(&rec.id),
                hex::encode(rec.cert.to_bytes()),
                hex::encode(crate::algebra::Scalar::to_be_bytes(&rec.exponent)),
            );
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output, recomputing each `W` from
    /// the stored identity and checking it against the stored digest.
    pub fn from_text(params: &SystemParams<B>, text: &str) -> Result<Self, TableError> {
        let mut table = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let parse = |reason: String| TableError::Parse { line, reason };
            let cols: Vec<&str> = raw.split_whitespace().collect();
            let [key_hex, id_hex, cert_hex, exp_hex] = cols[..] else {
                return Err(parse(format!("expected 4 columns, found {}", cols.len())));
            };
            let unhex = |s: &str| hex::decode(s).map_err(|e| parse(e.to_string()));
            let key: [u8; 32] = unhex(key_hex)?
                .try_into()
                .map_err(|_| parse("digest must be 32 bytes".into()))?;
            let id = unhex(id_hex)?;
            let cert = params
                .ctx
                .decode_g1(&unhex(cert_hex)?)
                .map_err(|e| parse(e.to_string()))?;
            let exponent = params
                .ctx
                .decode_scalar(&unhex(exp_hex)?)
                .map_err(|e| parse(e.to_string()))?;
            let tracing_value = tracing_value(params, &id);
            if digest(&tracing_value) != key {
                return Err(TableError::DigestMismatch { line });
            }
            table.insert(RegistrationRecord {
                id,
                cert,
                exponent,
                tracing_value,
            })?;
        }
        Ok(table)
    }
}

/// `W = e(H_V(ID_V), B)`.
pub fn tracing_value<B: Backend>(params: &SystemParams<B>, vehicle_id: &[u8]) -> B::Gt {
    params.ctx.pairing(&params.h_vehicle(vehicle_id), &params.ctx.g2())
}

/// Proof that `υ` was decrypted with the opener's key:
/// knowledge of `x_O` with `e(x_O, V2) = v1/υ` and `e(x_O, B) = e(H_O, K_T)`.
#[derive(Debug, PartialEq, Eq)]
pub struct OpeningProof<B: Backend> {
    /// `Γ0' = x_O · A^s0'`.
    pub blinded_key: B::G1,
    pub challenge: B::Scalar,
    /// `z0' = r0' − f'·s0'`.
    pub scalar_response: B::Scalar,
    /// `z1' = H_O^r1' · x_O^−f'`.
    pub key_response: B::G1,
}

copy_with_backend!(OpeningProof);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opening<B: Backend> {
    pub vehicle_id: Vec<u8>,
    /// `υ = v1 / e(x_O, V2)`.
    pub tracing_value: B::Gt,
    pub proof: OpeningProof<B>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OpenError {
    #[error("decrypted tracing value is not in the registration table")]
    NotRegistered,
}

/// `υ = v1 / e(x_O, V2)`; one pairing.
pub fn decrypt_trace<B: Backend>(params: &SystemParams<B>, opener: &OpenerKey<B>, trace: &TraceCipher<B>) -> B::Gt {
    trace.cipher.div(&params.ctx.pairing(&opener.secret, &trace.ephemeral))
}

#[allow(clippy::too_many_arguments)]
fn opening_challenge<B: Backend>(
    params: &SystemParams<B>,
    blinded_key: &B::G1,
    v_link: &B::Gt,
    b_link: &B::Gt,
    commitments: (&B::G1, &B::Gt, &B::Gt),
    trace: &TraceCipher<B>,
    tracing_value: &B::Gt,
) -> B::Scalar {
    let mut w = Writer::new();
    w.raw(b"opening")
        .elem(blinded_key)
        .elem(v_link)
        .elem(b_link)
        .elem(commitments.0)
        .elem(commitments.1)
        .elem(commitments.2)
        .elem(&trace.cipher)
        .elem(&trace.ephemeral)
        .elem(tracing_value);
    params.ctx.hash_to_zp(HashDomain::Challenge, w.as_slice())
}

/// Decrypts the trace, finds the signer, and proves the decryption.
pub fn open<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    opener: &OpenerKey<B>,
    trace: &TraceCipher<B>,
    table: &RegistrationTable<B>,
    rng: &mut R,
) -> Result<Opening<B>, OpenError> {
    let ctx = &params.ctx;
    let tracing_value = decrypt_trace(params, opener, trace);
    let record = table.lookup(&tracing_value).ok_or(OpenError::NotRegistered)?;

    let (a, b) = (ctx.g1(), ctx.g2());
    let e_av = ctx.pairing(&a, &trace.ephemeral);
    let e_ab = ctx.pairing(&a, &b);
    let h_o = params.h_opener(&opener.id);

    let s0 = ctx.random_nonzero_scalar(rng);
    let (r0, r1) = (ctx.random_nonzero_scalar(rng), ctx.random_nonzero_scalar(rng));
    let blinded_key = opener.secret.mul(&a.pow(&s0));
    let v_link = e_av.pow(&s0);
    let b_link = e_ab.pow(&s0);
    let mask = h_o.pow(&r1);
    let c0 = mask.mul(&a.pow(&r0));
    let (c1, c2) = (e_av.pow(&r0), e_ab.pow(&r0));

    let f = opening_challenge(params, &blinded_key, &v_link, &b_link, (&c0, &c1, &c2), trace, &tracing_value);
    Ok(Opening {
        vehicle_id: record.id.clone(),
        tracing_value,
        proof: OpeningProof {
            blinded_key,
            challenge: f,
            scalar_response: r0 - f * s0,
            key_response: mask.mul(&opener.secret.pow(&f).inverse()),
        },
    })
}

/// Public check of an opening. Needs only public data: the claimed identity
/// must hash to the disclosed `υ`, and the proof must show `υ` came from
/// decrypting `trace` under the opener identity `opener_id`.
pub fn judge<B: Backend>(
    params: &SystemParams<B>,
    opener_id: &[u8],
    trace: &TraceCipher<B>,
    opening: &Opening<B>,
) -> bool {
    let ctx = &params.ctx;
    let p = &opening.proof;
    if p.blinded_key.is_identity() || p.key_response.is_identity() {
        return false;
    }
    if tracing_value(params, &opening.vehicle_id) != opening.tracing_value {
        return false;
    }
    let (a, b) = (ctx.g1(), ctx.g2());
    let blinded_share = trace.cipher.div(&opening.tracing_value);
    let v_link = ctx.pairing(&p.blinded_key, &trace.ephemeral).div(&blinded_share);
    let b_link = ctx
        .pairing(&p.blinded_key, &b)
        .div(&ctx.pairing(&params.h_opener(opener_id), &params.master_public));
    let f = &p.challenge;
    let z0 = &p.scalar_response;
    let c0 = p.key_response.mul(&p.blinded_key.pow(f)).mul(&a.pow(z0));
    let c1 = ctx.pairing(&a, &trace.ephemeral).pow(z0).mul(&v_link.pow(f));
    let c2 = ctx.pairing(&a, &b).pow(z0).mul(&b_link.pow(f));
    opening_challenge(params, &p.blinded_key, &v_link, &b_link, (&c0, &c1, &c2), trace, &opening.tracing_value) == *f
}

impl<B: Backend> Opening<B> {
    /// Text record: `vehicle=`, `tracing=`, `proof.*=` lines with hex values.
    pub fn to_text(&self) -> String {
        use crate::algebra::Scalar;
        let p = &self.proof;
        format!(
            "vehicle={}\ntracing={}\nproof.blinded_key={}\nproof.challenge={}\nproof.scalar_response={}\nproof.key_response={}\n",
            hex::encode(&self.vehicle_id),
            hex::encode(self.tracing_value.to_bytes()),
            hex::encode(p.blinded_key.to_bytes()),
            hex::encode(p.challenge.to_be_bytes()),
            hex::encode(p.scalar_response.to_be_bytes()),
            hex::encode(p.key_response.to_bytes()),
        )
    }

    pub fn from_text(params: &SystemParams<B>, text: &str) -> Result<Self, AlgebraError> {
        let ctx = &params.ctx;
        let mut fields = HashMap::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| AlgebraError::decode("opening", format!("`{line}` is not key=value")))?;
            let bytes = hex::decode(v.trim()).map_err(|e| AlgebraError::decode("opening", e.to_string()))?;
            fields.insert(k.trim().to_string(), bytes);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .map(Vec::as_slice)
                .ok_or_else(|| AlgebraError::decode("opening", format!("missing `{k}`")))
        };
        Ok(Self {
            vehicle_id: get("vehicle")?.to_vec(),
            tracing_value: ctx.decode_gt(get("tracing")?)?,
            proof: OpeningProof {
                blinded_key: ctx.decode_g1(get("proof.blinded_key")?)?,
                challenge: ctx.decode_scalar(get("proof.challenge")?)?,
                scalar_response: ctx.decode_scalar(get("proof.scalar_response")?)?,
                key_response: ctx.decode_g1(get("proof.key_response")?)?,
            },
        })
    }
}

/// Revoked tracing-value digests with the time of revocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RevocationList {
    entries: BTreeMap<[u8; 32], u64>,
}

impl RevocationList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revoke(&mut self, key: [u8; 32], unix_time: u64) {
        self.entries.entry(key).or_insert(unix_time);
    }

    pub fn revoke_vehicle<B: Backend>(&mut self, params: &SystemParams<B>, vehicle_id: &[u8], unix_time: u64) {
        self.revoke(digest(&tracing_value(params, vehicle_id)), unix_time);
    }

    pub fn contains(&self, key: &[u8; 32]) -> bool {
        self.entries.contains_key(key)
    }

    pub fn revoked_at(&self, key: &[u8; 32]) -> Option<u64> {
        self.entries.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One `digest_hex unix_time` line per entry.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, t) in &self.entries {
            let _ = writeln!(out, "{} {t}", hex::encode(k));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TableError> {
        let mut list = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let parse = |reason: String| TableError::Parse { line: i + 1, reason };
            let (k, t) = raw
                .split_once(char::is_whitespace)
                .ok_or_else(|| parse("expected `digest_hex unix_time`".into()))?;
            let key: [u8; 32] = hex::decode(k)
                .map_err(|e| parse(e.to_string()))?
                .try_into()
                .map_err(|_| parse("digest must be 32 bytes".into()))?;
            let t = t.trim().parse().map_err(|e: std::num::ParseIntError| parse(e.to_string()))?;
            list.revoke(key, t);
        }
        Ok(list)
    }
}

/// Revocation check backed by the opener: decrypts the trace (one pairing)
/// and looks the tracing value up in the revocation list.
#[derive(Debug, Clone)]
pub struct OpenerRevocation<'a, B: Backend> {
    pub params: &'a SystemParams<B>,
    pub opener: &'a OpenerKey<B>,
    pub list: &'a RevocationList,
}

impl<B: Backend> crate::batchverify::RevocationCheck<B> for OpenerRevocation<'_, B> {
    fn is_revoked(&self, trace: &TraceCipher<B>) -> bool {
        self.list.contains(&digest(&decrypt_trace(self.params, self.opener, trace)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batchverify::RevocationCheck;
    use crate::ibgs::testkit::transparent_world;

    #[test]
    fn open_finds_signer_and_judge_accepts() {
        let mut w = transparent_world(21);
        for i in 0..w.deployment.vehicles.len() {
            let sig = w.sign(i, b"brake");
            let opening = w.open(&sig.trace).unwrap();
            assert_eq!(opening.vehicle_id, w.deployment.vehicles[i].key.id);
            assert!(judge(&w.params, &w.deployment.opener.id, &sig.trace, &opening));
        }
    }

    #[test]
    fn judge_rejects_swapped_identity() {
        let mut w = transparent_world(22);
        let sig = w.sign(0, b"m");
        let mut opening = w.open(&sig.trace).unwrap();
        opening.vehicle_id = w.deployment.vehicles[1].key.id.clone();
        assert!(!judge(&w.params, &w.deployment.opener.id, &sig.trace, &opening));
        opening.tracing_value = tracing_value(&w.params, &opening.vehicle_id);
        assert!(!judge(&w.params, &w.deployment.opener.id, &sig.trace, &opening));
    }

    #[test]
    fn judge_rejects_tampered_proof_or_wrong_opener() {
        let mut w = transparent_world(23);
        let sig = w.sign(0, b"m");
        let opening = w.open(&sig.trace).unwrap();
        assert!(!judge(&w.params, b"someone-else", &sig.trace, &opening));
        let one = w.params.ctx.one();
        let mut bad = opening.clone();
        bad.proof.scalar_response = bad.proof.scalar_response + one;
        assert!(!judge(&w.params, &w.deployment.opener.id, &sig.trace, &bad));
        let mut bad = opening.clone();
        bad.proof.key_response = bad.proof.key_response.mul(&w.params.ctx.g1());
        assert!(!judge(&w.params, &w.deployment.opener.id, &sig.trace, &bad));
        let other = w.sign(1, b"m");
        assert!(!judge(&w.params, &w.deployment.opener.id, &other.trace, &opening));
    }

    #[test]
    fn unregistered_signer_not_opened() {
        let mut w = transparent_world(24);
        let sig = w.sign(0, b"m");
        let empty = RegistrationTable::new();
        let mut rng = rand::thread_rng();
        assert_eq!(
            open(&w.params, &w.deployment.opener, &sig.trace, &empty, &mut rng).unwrap_err(),
            OpenError::NotRegistered
        );
    }

    #[test]
    fn table_text_roundtrip_and_tamper_detection() {
        let w = transparent_world(25);
        let text = w.deployment.table.to_text();
        let back = RegistrationTable::from_text(&w.params, &text).unwrap();
        assert_eq!(back.len(), w.deployment.table.len());
        for rec in w.deployment.table.records() {
            assert_eq!(back.lookup(&rec.tracing_value), Some(rec));
        }
        let first = text.lines().next().unwrap();
        let cols: Vec<&str> = first.split(' ').collect();
        let swapped = format!("{} {} {} {}\n", cols[0], hex::encode(b"intruder"), cols[2], cols[3]);
        assert!(matches!(
            RegistrationTable::from_text(&w.params, &swapped),
            Err(TableError::DigestMismatch { line: 1 })
        ));
        assert!(matches!(
            RegistrationTable::from_text(&w.params, "zz 00"),
            Err(TableError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn opening_text_roundtrip() {
        let mut w = transparent_world(26);
        let sig = w.sign(2, b"m");
        let opening = w.open(&sig.trace).unwrap();
        assert_eq!(Opening::from_text(&w.params, &opening.to_text()).unwrap(), opening);
    }

    #[test]
    fn revocation_via_opener() {
        let mut w = transparent_world(27);
        let mut list = RevocationList::new();
        list.revoke_vehicle(&w.params, &w.deployment.vehicles[1].key.id, 1_700_000_000);
        let back = RevocationList::from_text(&list.to_text()).unwrap();
        assert_eq!(back, list);
        let (s0, s1) = (w.sign(0, b"m"), w.sign(1, b"m"));
        let check = OpenerRevocation {
            params: &w.params,
            opener: &w.deployment.opener,
            list: &back,
        };
        assert!(!check.is_revoked(&s0.trace));
        assert!(check.is_revoked(&s1.trace));
    }
}
