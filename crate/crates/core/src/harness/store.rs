//! On-disk state for the command-line tool.
//!
//! Every file is plain text with one `key=value` pair per line; binary
//! values are lowercase hex. Layout of a state directory:
//!
//! ```text
//! context.txt          backend descriptor
//! params.txt           A1..A5, K_T and the opener identity
//! tea.secret           master secret
//! opener.secret        opener key
//! groups.txt           one `manager_id_hex group_tag_hex` line per group
//! gm/<id>.secret       group manager keys
//! vehicles/<id>.key    vehicle keys
//! vehicles/<id>.cred   vehicle keys with membership certificates
//! registration.tbl     the opener's registration table
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::algebra::{AlgebraError, Backend, ContextDescriptor, Group, GroupContext, Scalar};
use crate::batchverify::GroupDirectory;
use crate::ibgs::{GmKey, MembershipCertificate, OpenerKey, SystemParams, TeaSecret, VehicleCredential, VehicleKey};
use crate::opener::{RegistrationTable, TableError};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

/// `key=value` text record with hex-encoded binary values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvRecord {
    fields: BTreeMap<String, String>,
}

impl KvRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put_str(&mut self, key: &str, value: &str) -> &mut Self {
        self.fields.insert(key.to_string(), value.to_string());
        self
    }

    pub fn put_bytes(&mut self, key: &str, value: &[u8]) -> &mut Self {
        self.put_str(key, &hex::encode(value))
    }

    pub fn put_elem<G: Group>(&mut self, key: &str, value: &G) -> &mut Self {
        self.put_bytes(key, &value.to_bytes())
    }

    pub fn put_scalar<S: Scalar>(&mut self, key: &str, value: &S) -> &mut Self {
        self.put_bytes(key, &value.to_be_bytes())
    }

    pub fn str(&self, key: &str) -> Result<&str, String> {
        self.fields.get(key).map(String::as_str).ok_or_else(|| format!("missing `{key}`"))
    }

    pub fn bytes(&self, key: &str) -> Result<Vec<u8>, String> {
        hex::decode(self.str(key)?).map_err(|e| format!("{key}: {e}"))
    }

    pub fn g1<B: Backend>(&self, ctx: &GroupContext<B>, key: &str) -> Result<B::G1, String> {
        ctx.decode_g1(&self.bytes(key)?).map_err(|e| format!("{key}: {e}"))
    }

    pub fn g2<B: Backend>(&self, ctx: &GroupContext<B>, key: &str) -> Result<B::G2, String> {
        ctx.decode_g2(&self.bytes(key)?).map_err(|e| format!("{key}: {e}"))
    }

    pub fn scalar<B: Backend>(&self, ctx: &GroupContext<B>, key: &str) -> Result<B::Scalar, String> {
        ctx.decode_scalar(&self.bytes(key)?).map_err(|e| format!("{key}: {e}"))
    }

    pub fn to_text(&self) -> String {
        self.fields.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut fields = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key=value", i + 1))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { fields })
    }
}

/// A message and its encoded signature, in either form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedMessage {
    pub message: Vec<u8>,
    pub signature: Vec<u8>,
}

impl SignedMessage {
    pub fn to_text(&self) -> String {
        KvRecord::new()
            .put_bytes("message", &self.message)
            .put_bytes("signature", &self.signature)
            .to_text()
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let rec = KvRecord::parse(text)?;
        Ok(Self {
            message: rec.bytes("message")?,
            signature: rec.bytes("signature")?,
        })
    }
}

pub fn read_text(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), StoreError> {
    let io = |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, text).map_err(io)
}

fn file_name_for(id: &str) -> Result<&str, String> {
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.')) || id.starts_with('.') {
        return Err(format!("identity `{id}` must be nonempty ASCII letters, digits, `-`, `_` or `.`"));
    }
    Ok(id)
}

/// A state directory, see the module docs for its layout.
#[derive(Debug, Clone)]
pub struct StateDir {
    root: PathBuf,
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn load_record(&self, rel: &str) -> Result<(PathBuf, KvRecord), StoreError> {
        let path = self.path(rel);
        let text = read_text(&path)?;
        let rec = KvRecord::parse(&text).map_err(|reason| StoreError::Format {
            path: path.clone(),
            reason,
        })?;
        Ok((path, rec))
    }

    fn save_record(&self, rel: &str, rec: &KvRecord) -> Result<(), StoreError> {
        write_text(&self.path(rel), &rec.to_text())
    }

    fn decode<T>(path: &Path, value: Result<T, String>) -> Result<T, StoreError> {
        value.map_err(|reason| StoreError::Format {
            path: path.to_path_buf(),
            reason,
        })
    }

    fn checked_id(&self, id: &str) -> Result<String, StoreError> {
        file_name_for(id).map(str::to_string).map_err(|reason| StoreError::Format {
            path: self.root.clone(),
            reason,
        })
    }

    pub fn save_context(&self, descriptor: &ContextDescriptor) -> Result<(), StoreError> {
        write_text(&self.path("context.txt"), &descriptor.to_string())
    }

    pub fn load_context(&self) -> Result<ContextDescriptor, StoreError> {
        let path = self.path("context.txt");
        let text = read_text(&path)?;
        text.parse().map_err(|e: AlgebraError| StoreError::Format {
            path,
            reason: e.to_string(),
        })
    }

    pub fn save_params<B: Backend>(&self, params: &SystemParams<B>, opener_id: &[u8]) -> Result<(), StoreError> {
        let mut rec = KvRecord::new();
        for (i, a) in params.bases().iter().enumerate() {
            rec.put_elem(&format!("a{}", i + 1), a);
        }
        rec.put_elem("master_public", &params.master_public)
            .put_bytes("opener_id", opener_id);
        self.save_record("params.txt", &rec)
    }

    /// Returns the parameters and the opener identity.
    pub fn load_params<B: Backend>(&self, ctx: &GroupContext<B>) -> Result<(SystemParams<B>, Vec<u8>), StoreError> {
        let (path, rec) = self.load_record("params.txt")?;
        let parsed = (|| {
            Ok((
                SystemParams {
                    ctx: ctx.clone(),
                    a1: rec.g1(ctx, "a1")?,
                    a2: rec.g1(ctx, "a2")?,
                    a3: rec.g1(ctx, "a3")?,
                    a4: rec.g1(ctx, "a4")?,
                    a5: rec.g1(ctx, "a5")?,
                    master_public: rec.g2(ctx, "master_public")?,
                },
                rec.bytes("opener_id")?,
            ))
        })();
        Self::decode(&path, parsed)
    }

    pub fn save_tea<B: Backend>(&self, tea: &TeaSecret<B>) -> Result<(), StoreError> {
        self.save_record("tea.secret", KvRecord::new().put_scalar("master", &tea.master))
    }

    pub fn load_tea<B: Backend>(&self, ctx: &GroupContext<B>) -> Result<TeaSecret<B>, StoreError> {
        let (path, rec) = self.load_record("tea.secret")?;
        Self::decode(&path, rec.scalar(ctx, "master").map(|master| TeaSecret { master }))
    }

    pub fn save_opener<B: Backend>(&self, key: &OpenerKey<B>) -> Result<(), StoreError> {
        self.save_record(
            "opener.secret",
            KvRecord::new().put_bytes("id", &key.id).put_elem("secret", &key.secret),
        )
    }

    pub fn load_opener<B: Backend>(&self, ctx: &GroupContext<B>) -> Result<OpenerKey<B>, StoreError> {
        let (path, rec) = self.load_record("opener.secret")?;
        let parsed = (|| {
            Ok(OpenerKey {
                id: rec.bytes("id")?,
                secret: rec.g1(ctx, "secret")?,
            })
        })();
        Self::decode(&path, parsed)
    }

    /// Saves the manager key and adds its public tag to `groups.txt`.
    pub fn save_manager<B: Backend>(&self, gm: &GmKey<B>) -> Result<(), StoreError> {
        let name = self.checked_id(&String::from_utf8_lossy(&gm.id))?;
        self.save_record(
            &format!("gm/{name}.secret"),
            KvRecord::new()
                .put_bytes("id", &gm.id)
                .put_elem("group_tag", &gm.group_tag)
                .put_scalar("secret", &gm.secret),
        )?;
        let path = self.path("groups.txt");
        let mut text = if path.exists() { read_text(&path)? } else { String::new() };
        let id_hex = hex::encode(&gm.id);
        let mut lines: Vec<String> = text
            .lines()
            .filter(|l| l.split_whitespace().next() != Some(id_hex.as_str()))
            .map(str::to_string)
            .collect();
        lines.push(format!("{id_hex} {}", hex::encode(gm.group_tag.to_bytes())));
        text = lines.join("\n") + "\n";
        write_text(&path, &text)
    }

    pub fn load_manager<B: Backend>(&self, ctx: &GroupContext<B>, id: &str) -> Result<GmKey<B>, StoreError> {
        let name = self.checked_id(id)?;
        let (path, rec) = self.load_record(&format!("gm/{name}.secret"))?;
        let parsed = (|| {
            Ok(GmKey {
                id: rec.bytes("id")?,
                group_tag: rec.g2(ctx, "group_tag")?,
                secret: rec.scalar(ctx, "secret")?,
            })
        })();
        Self::decode(&path, parsed)
    }

    /// Public directory of all managers set up so far.
    pub fn load_directory<B: Backend>(&self, ctx: &GroupContext<B>) -> Result<GroupDirectory<B>, StoreError> {
        let path = self.path("groups.txt");
        let mut dir = GroupDirectory::new();
        if !path.exists() {
            return Ok(dir);
        }
        for (i, line) in read_text(&path)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed = (|| {
                let mut parts = line.split_whitespace();
                let (Some(id), Some(tag), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(format!("line {}: expected `manager_id_hex group_tag_hex`", i + 1));
                };
                let id = hex::decode(id).map_err(|e| format!("line {}: {e}", i + 1))?;
                let tag = hex::decode(tag).map_err(|e| format!("line {}: {e}", i + 1))?;
                let tag = ctx.decode_g2(&tag).map_err(|e| format!("line {}: {e}", i + 1))?;
                Ok((id, tag))
            })();
            let (id, tag) = Self::decode(&path, parsed)?;
            dir.insert(&tag, &id);
        }
        Ok(dir)
    }

    fn vehicle_record<B: Backend>(key: &VehicleKey<B>) -> KvRecord {
        let mut rec = KvRecord::new();
        rec.put_bytes("id", &key.id).put_elem("secret", &key.secret);
        rec
    }

    pub fn save_vehicle_key<B: Backend>(&self, key: &VehicleKey<B>) -> Result<(), StoreError> {
        let name = self.checked_id(&String::from_utf8_lossy(&key.id))?;
        self.save_record(&format!("vehicles/{name}.key"), &Self::vehicle_record(key))
    }

    pub fn load_vehicle_key<B: Backend>(&self, ctx: &GroupContext<B>, id: &str) -> Result<VehicleKey<B>, StoreError> {
        let name = self.checked_id(id)?;
        let (path, rec) = self.load_record(&format!("vehicles/{name}.key"))?;
        let parsed = (|| {
            Ok(VehicleKey {
                id: rec.bytes("id")?,
                secret: rec.g1(ctx, "secret")?,
            })
        })();
        Self::decode(&path, parsed)
    }

    /// Also records the manager identity so signing needs only the vehicle id.
    pub fn save_credential<B: Backend>(&self, cred: &VehicleCredential<B>, manager_id: &[u8]) -> Result<(), StoreError> {
        let name = self.checked_id(&String::from_utf8_lossy(&cred.key.id))?;
        let mut rec = Self::vehicle_record(&cred.key);
        rec.put_elem("cert", &cred.certificate.cert)
            .put_scalar("exponent", &cred.certificate.exponent)
            .put_elem("group_tag", &cred.certificate.group_tag)
            .put_bytes("manager_id", manager_id);
        self.save_record(&format!("vehicles/{name}.cred"), &rec)
    }

    /// Returns the credential and the manager identity.
    pub fn load_credential<B: Backend>(
        &self,
        ctx: &GroupContext<B>,
        id: &str,
    ) -> Result<(VehicleCredential<B>, Vec<u8>), StoreError> {
        let name = self.checked_id(id)?;
        let (path, rec) = self.load_record(&format!("vehicles/{name}.cred"))?;
        let parsed = (|| {
            let cred = VehicleCredential {
                key: VehicleKey {
                    id: rec.bytes("id")?,
                    secret: rec.g1(ctx, "secret")?,
                },
                certificate: MembershipCertificate {
                    cert: rec.g1(ctx, "cert")?,
                    exponent: rec.scalar(ctx, "exponent")?,
                    group_tag: rec.g2(ctx, "group_tag")?,
                },
            };
            Ok((cred, rec.bytes("manager_id")?))
        })();
        Self::decode(&path, parsed)
    }

    /// An absent table reads as empty.
    pub fn load_table<B: Backend>(&self, params: &SystemParams<B>) -> Result<RegistrationTable<B>, StoreError> {
        let path = self.path("registration.tbl");
        if !path.exists() {
            return Ok(RegistrationTable::new());
        }
        let text = read_text(&path)?;
        RegistrationTable::from_text(params, &text).map_err(|e: TableError| StoreError::Format {
            path,
            reason: e.to_string(),
        })
    }

    pub fn save_table<B: Backend>(&self, table: &RegistrationTable<B>) -> Result<(), StoreError> {
        write_text(&self.path("registration.tbl"), &table.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibgs::testkit::transparent_world;

    #[test]
    fn kv_record_roundtrip_and_errors() {
        let mut rec = KvRecord::new();
        rec.put_str("name", "x").put_bytes("blob", &[0, 1, 255]);
        let back = KvRecord::parse(&rec.to_text()).unwrap();
        assert_eq!(back, rec);
        assert_eq!(back.bytes("blob").unwrap(), vec![0, 1, 255]);
        assert!(back.bytes("nope").is_err());
        assert!(KvRecord::parse("# c\n\nok=1\nbroken").unwrap_err().contains("line 4"));
    }

    #[test]
    fn state_roundtrip() {
        let w = transparent_world(21);
        let dep = &w.deployment;
        let ctx = &dep.params.ctx;
        let tmp = tempfile::tempdir().unwrap();
        let store = StateDir::new(tmp.path());

        store.save_context(&ctx.descriptor()).unwrap();
        assert_eq!(store.load_context().unwrap(), ctx.descriptor());
        store.save_params(&dep.params, &dep.opener.id).unwrap();
        let (params, opener_id) = store.load_params(ctx).unwrap();
        assert_eq!(params.bases(), dep.params.bases());
        assert_eq!(params.master_public, dep.params.master_public);
        assert_eq!(opener_id, dep.opener.id);
        store.save_tea(&dep.tea).unwrap();
        assert_eq!(store.load_tea(ctx).unwrap(), dep.tea);
        store.save_opener(&dep.opener).unwrap();
        assert_eq!(store.load_opener(ctx).unwrap(), dep.opener);

        for gm in &dep.managers {
            store.save_manager(gm).unwrap();
        }
        store.save_manager(&dep.managers[0]).unwrap();
        assert_eq!(store.load_manager(ctx, "gm-1").unwrap(), dep.managers[1]);
        let dir = store.load_directory(ctx).unwrap();
        assert_eq!(dir.len(), dep.managers.len());
        assert_eq!(dir.manager_id(&dep.managers[0].group_tag), Some(&b"gm-0"[..]));

        let cred = &dep.vehicles[1];
        store.save_vehicle_key(&cred.key).unwrap();
        assert_eq!(store.load_vehicle_key(ctx, "veh-0001").unwrap(), cred.key);
        store.save_credential(cred, b"gm-1").unwrap();
        let (back, manager) = store.load_credential(ctx, "veh-0001").unwrap();
        assert_eq!((&back, manager.as_slice()), (cred, &b"gm-1"[..]));

        assert!(store.load_table(&params).unwrap().is_empty());
        store.save_table(&dep.table).unwrap();
        assert_eq!(store.load_table(&params).unwrap().len(), dep.table.len());
    }

    #[test]
    fn bad_ids_and_missing_files() {
        let tmp = tempfile::tempdir().unwrap();
        let store = StateDir::new(tmp.path());
        let w = transparent_world(22);
        let ctx = &w.params.ctx;
        assert!(matches!(store.load_vehicle_key(ctx, "../etc"), Err(StoreError::Format { .. })));
        assert!(matches!(store.load_opener(ctx), Err(StoreError::Io { .. })));
        write_text(&tmp.path().join("opener.secret"), "id=zz\n").unwrap();
        assert!(matches!(store.load_opener(ctx), Err(StoreError::Format { .. })));
    }

    #[test]
    fn signed_message_roundtrip() {
        let m = SignedMessage {
            message: b"brake".to_vec(),
            signature: vec![1, 1, 7],
        };
        assert_eq!(SignedMessage::parse(&m.to_text()).unwrap(), m);
        assert!(SignedMessage::parse("message=00").is_err());
    }
}
