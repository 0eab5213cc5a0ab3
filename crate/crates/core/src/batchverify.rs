//! Batch verification of trimmed signatures with a constant number of
//! pairings per batch.
//!
//! Each signature contributes three pairing equations. Rearranged so that
//! every pairing has `B`, `K_T` or the group key `S` on the right, they read
//!
//! ```text
//! β4        = e(A1^-z0 · Γ1^-f, B) · e(A2^z0 · Γ2^f, K_T)
//! β6        = e(A3^z2 · (A2A4)^z0 · A5^-f · (Γ2Γ5)^f, B) · e(A3^z0 · Γ3^f, S)
//! β8 · v1^-f = e(A2^-z0 · Γ2^-f, B) · e(H_O(ID_O)^z3, K_T)
//! ```
//!
//! Raising every equation to its own small random exponent and multiplying
//! everything together leaves three pairings for the whole batch, one per
//! right-hand base. A batch that fails is bisected to find the bad items.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, RngCore};
use thiserror::Error;

use crate::algebra::{digest, Backend, Group, HashDomain};
use crate::ibgs::{
    challenge_input, group_public_key, reconstruct_commitments, ModifiedSignature, SystemParams, TraceCipher,
};

pub const DEFAULT_SECURITY_BITS: u32 = 20;

/// Maps group tags `C` to manager identities.
#[derive(Debug, Clone)]
pub struct GroupDirectory<B: Backend> {
    by_tag: HashMap<[u8; 32], Vec<u8>>,
    _backend: std::marker::PhantomData<B>,
}

impl<B: Backend> Default for GroupDirectory<B> {
    fn default() -> Self {
        Self::new()
    }
}

impl<B: Backend> GroupDirectory<B> {
    pub fn new() -> Self {
        Self {
            by_tag: HashMap::new(),
            _backend: std::marker::PhantomData,
        }
    }

    pub fn insert(&mut self, group_tag: &B::G2, manager_id: &[u8]) {
        self.by_tag.insert(digest(group_tag), manager_id.to_vec());
    }

    pub fn manager_id(&self, group_tag: &B::G2) -> Option<&[u8]> {
        self.by_tag.get(&digest(group_tag)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_tag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_tag.is_empty()
    }
}

pub trait RevocationCheck<B: Backend> {
    fn is_revoked(&self, trace: &TraceCipher<B>) -> bool;
}

/// Accepts every signer.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoRevocation;

impl<B: Backend> RevocationCheck<B> for NoRevocation {
    fn is_revoked(&self, _trace: &TraceCipher<B>) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchItem<B: Backend> {
    pub msg: Vec<u8>,
    pub sig: ModifiedSignature<B>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchPolicy {
    /// Small exponents are drawn from `[0, 2^security_bits)`.
    pub security_bits: u32,
    /// Bisect failing batches to find the bad items. Without it every item
    /// of a failing batch is rejected.
    pub isolate: bool,
    /// Largest number of items finalized together.
    pub max_batch: Option<usize>,
}

impl Default for BatchPolicy {
    fn default() -> Self {
        Self {
            security_bits: DEFAULT_SECURITY_BITS,
            isolate: true,
            max_batch: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RejectReason {
    /// Identity element where none may appear.
    Malformed,
    UnknownGroup,
    HashFail,
    Revoked,
    BatchFail,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Malformed => "malformed",
            RejectReason::UnknownGroup => "unknown_group",
            RejectReason::HashFail => "hash_fail",
            RejectReason::Revoked => "revoked",
            RejectReason::BatchFail => "batch_fail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject(RejectReason),
}

impl Verdict {
    pub fn is_accept(self) -> bool {
        self == Verdict::Accept
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BatchStats {
    /// Pairings spent on verification, including bisection.
    pub pairings: u64,
    /// Pairings spent by the revocation check.
    pub revocation_pairings: u64,
    pub finalizations: u64,
    pub group_key_derivations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchReport {
    pub verdicts: Vec<Verdict>,
    pub stats: BatchStats,
}

impl BatchReport {
    pub fn accepted(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_accept()).count()
    }

    pub fn rejected(&self) -> usize {
        self.verdicts.len() - self.accepted()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BatchError {
    #[error("items from different groups cannot share one finalization")]
    MixedGroups,
}

/// One rearranged pairing equation:
/// `target = e(on_b, B) · e(on_master, K_T) · e(on_group, S) · extra`.
#[derive(Debug, PartialEq, Eq)]
struct Equation<B: Backend> {
    on_b: B::G1,
    on_master: B::G1,
    on_group: B::G1,
    target: B::Gt,
    extra: B::Gt,
}

copy_with_backend!(Equation);

/// Per-item work that needs no pairings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedItem<B: Backend> {
    group: [u8; 32],
    group_key: B::G2,
    equations: [Equation<B>; 3],
}

impl<B: Backend> PreparedItem<B> {
    pub fn group_digest(&self) -> &[u8; 32] {
        &self.group
    }

    pub fn group_key(&self) -> &B::G2 {
        &self.group_key
    }
}

/// Checks the challenge hash and rearranges the three pairing equations.
/// `group_key` is `S` for the signer's group; `opener_base` is `H_O(ID_O)`.
pub fn precompute_item<B: Backend>(
    params: &SystemParams<B>,
    opener_base: &B::G1,
    group_key: &B::G2,
    item: &BatchItem<B>,
) -> Result<PreparedItem<B>, RejectReason> {
    let sig = &item.sig;
    let bl = &sig.blinded;
    if [bl.anchor, bl.key, bl.identity, bl.cert, bl.cert_power]
        .iter()
        .any(Group::is_identity)
        || sig.group_tag.is_identity()
        || sig.trace.ephemeral.is_identity()
    {
        return Err(RejectReason::Malformed);
    }
    let ctx = &params.ctx;
    let r = &sig.responses;
    let f = &sig.challenge;
    let commitments = reconstruct_commitments(params, bl, r, f, &sig.trace);
    let expected = ctx.hash_to_zp(
        HashDomain::Challenge,
        &challenge_input(bl, &sig.group_tag, &sig.trace, &item.msg, &commitments, &sig.pairing_commitments),
    );
    if expected != *f {
        return Err(RejectReason::HashFail);
    }

    Ok(PreparedItem {
        group: digest(&sig.group_tag),
        group_key: *group_key,
        equations: rearrange(params, opener_base, sig),
    })
}

fn rearrange<B: Backend>(params: &SystemParams<B>, opener_base: &B::G1, sig: &ModifiedSignature<B>) -> [Equation<B>; 3] {
    let (bl, r, f) = (&sig.blinded, &sig.responses, &sig.challenge);
    let ctx = &params.ctx;
    let z0 = &r.anchor;
    let one = ctx.g1_identity();
    let none = ctx.gt_identity();
    let key_eq = Equation {
        on_b: params.a1.pow(z0).mul(&bl.key.pow(f)).inverse(),
        on_master: params.a2.pow(z0).mul(&bl.identity.pow(f)),
        on_group: one,
        target: sig.pairing_commitments.key_link,
        extra: none,
    };
    let cert_eq = Equation {
        on_b: params
            .a3
            .pow(&r.product)
            .mul(&params.a2.mul(&params.a4).pow(z0))
            .mul(&bl.identity.mul(&bl.cert_power).div(&params.a5).pow(f)),
        on_master: one,
        on_group: params.a3.pow(z0).mul(&bl.cert.pow(f)),
        target: sig.pairing_commitments.cert_link,
        extra: none,
    };
    let trace_eq = Equation {
        on_b: params.a2.pow(z0).mul(&bl.identity.pow(f)).inverse(),
        on_master: opener_base.pow(&r.trace),
        on_group: one,
        target: sig.pairing_commitments.trace_link,
        extra: sig.trace.cipher.pow(f),
    };
    [key_eq, cert_eq, trace_eq]
}

fn small_exponent<B: Backend, R: RngCore + ?Sized>(params: &SystemParams<B>, bits: u32, rng: &mut R) -> B::Scalar {
    let upper = 1u128 << bits.clamp(1, 127);
    params.ctx.scalar_u128(rng.gen_range(0..upper))
}

/// Per-item aggregates with the small exponents already applied:
/// `B_i`, `K_i`, `Q_i` collect the `G1` sides paired with `B`, `K_T` and `S`,
/// `M_i` the transmitted commitments and `ν_i` the `v1^f` factor. A window
/// of items is valid when `ΠM_i = e(ΠB_i,B)·e(ΠK_i,K_T)·e(ΠQ_i,S)·Πν_i`.
#[derive(Debug, PartialEq, Eq)]
pub struct ItemAggregate<B: Backend> {
    pub on_b: B::G1,
    pub on_master: B::G1,
    pub on_group: B::G1,
    pub commitments: B::Gt,
    pub cipher: B::Gt,
}

copy_with_backend!(ItemAggregate);

impl<B: Backend> ItemAggregate<B> {
    pub fn identity(params: &SystemParams<B>) -> Self {
        let ctx = &params.ctx;
        Self {
            on_b: ctx.g1_identity(),
            on_master: ctx.g1_identity(),
            on_group: ctx.g1_identity(),
            commitments: ctx.gt_identity(),
            cipher: ctx.gt_identity(),
        }
    }

    pub fn combine(&self, other: &Self) -> Self {
        Self {
            on_b: self.on_b.mul(&other.on_b),
            on_master: self.on_master.mul(&other.on_master),
            on_group: self.on_group.mul(&other.on_group),
            commitments: self.commitments.mul(&other.commitments),
            cipher: self.cipher.mul(&other.cipher),
        }
    }

    /// Three pairings.
    pub fn holds(&self, params: &SystemParams<B>, group_key: &B::G2) -> bool {
        let ctx = &params.ctx;
        let eta = ctx
            .pairing(&self.on_b, &ctx.g2())
            .mul(&ctx.pairing(&self.on_master, &params.master_public))
            .mul(&ctx.pairing(&self.on_group, group_key))
            .mul(&self.cipher);
        eta == self.commitments
    }
}

/// Raises each of the item's equations to a fresh exponent from
/// `[0, 2^security_bits)` and folds them into one aggregate. Any set of
/// bad equations survives with probability at most `2^-security_bits`.
pub fn aggregate_item<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    item: &PreparedItem<B>,
    security_bits: u32,
    rng: &mut R,
) -> ItemAggregate<B> {
    let mut acc = ItemAggregate::identity(params);
    for eq in &item.equations {
        let delta = small_exponent(params, security_bits, rng);
        acc = acc.combine(&ItemAggregate {
            on_b: eq.on_b.pow(&delta),
            on_master: eq.on_master.pow(&delta),
            on_group: eq.on_group.pow(&delta),
            commitments: eq.target.pow(&delta),
            cipher: eq.extra.pow(&delta),
        });
    }
    acc
}

/// Finalizes a set of prepared items from one group with exactly three
/// pairings (none for an empty set).
pub fn batch_finalize<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    items: &[&PreparedItem<B>],
    security_bits: u32,
    rng: &mut R,
) -> Result<bool, BatchError> {
    let Some(first) = items.first() else {
        return Ok(true);
    };
    if items.iter().any(|it| it.group != first.group) {
        return Err(BatchError::MixedGroups);
    }
    let total = items.iter().fold(ItemAggregate::identity(params), |acc, item| {
        acc.combine(&aggregate_item(params, item, security_bits, rng))
    });
    Ok(total.holds(params, &first.group_key))
}

/// The textbook small-exponent test on claimed equalities `lhs[i] = rhs[i]`
/// with exponents drawn from `[0, 2^bits)`. A single false claim passes with
/// probability about `2^-bits`.
pub fn small_exponent_test<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    claims: &[(B::Gt, B::Gt)],
    bits: u32,
    rng: &mut R,
) -> bool {
    let ctx = &params.ctx;
    let (mut l, mut r) = (ctx.gt_identity(), ctx.gt_identity());
    for (a, b) in claims {
        let delta = small_exponent(params, bits, rng);
        l = l.mul(&a.pow(&delta));
        r = r.mul(&b.pow(&delta));
    }
    l == r
}

/// Splits item indices by group digest, preserving order within a group.
pub fn bucket_by_group<B: Backend>(prepared: &[(usize, PreparedItem<B>)]) -> BTreeMap<[u8; 32], Vec<usize>> {
    let mut buckets: BTreeMap<[u8; 32], Vec<usize>> = BTreeMap::new();
    for (pos, (_, item)) in prepared.iter().enumerate() {
        buckets.entry(item.group).or_default().push(pos);
    }
    buckets
}

/// Batch verifier bound to one opener and a directory of group managers.
pub struct BatchVerifier<'a, B: Backend> {
    pub params: &'a SystemParams<B>,
    pub opener_id: &'a [u8],
    pub directory: &'a GroupDirectory<B>,
    pub revocation: &'a dyn RevocationCheck<B>,
    pub policy: BatchPolicy,
}

impl<'a, B: Backend> BatchVerifier<'a, B> {
    pub fn new(params: &'a SystemParams<B>, opener_id: &'a [u8], directory: &'a GroupDirectory<B>) -> Self {
        Self {
            params,
            opener_id,
            directory,
            revocation: &NoRevocation,
            policy: BatchPolicy::default(),
        }
    }

    pub fn with_policy(mut self, policy: BatchPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_revocation(mut self, revocation: &'a dyn RevocationCheck<B>) -> Self {
        self.revocation = revocation;
        self
    }

    /// Verifies `items`, returning one verdict per item in input order.
    pub fn verify<R: RngCore + ?Sized>(&self, items: &[BatchItem<B>], rng: &mut R) -> BatchReport {
        let ctx = &self.params.ctx;
        let start = ctx.pairing_count();
        let mut stats = BatchStats::default();
        let mut verdicts = vec![Verdict::Accept; items.len()];
        let opener_base = self.params.h_opener(self.opener_id);

        let mut group_keys: HashMap<[u8; 32], B::G2> = HashMap::new();
        let mut prepared = Vec::with_capacity(items.len());
        for (i, item) in items.iter().enumerate() {
            let tag = item.sig.group_tag;
            let key = digest(&tag);
            let group_key = match group_keys.get(&key) {
                Some(s) => *s,
                None => match self.directory.manager_id(&tag) {
                    Some(id) => {
                        stats.group_key_derivations += 1;
                        let s = group_public_key(self.params, &tag, id);
                        group_keys.insert(key, s);
                        s
                    }
                    None => {
                        verdicts[i] = Verdict::Reject(RejectReason::UnknownGroup);
                        continue;
                    }
                },
            };
            match precompute_item(self.params, &opener_base, &group_key, item) {
                Ok(p) => prepared.push((i, p)),
                Err(reason) => verdicts[i] = Verdict::Reject(reason),
            }
        }

        let before_revocation = ctx.pairing_count();
        prepared.retain(|(i, _)| {
            if self.revocation.is_revoked(&items[*i].sig.trace) {
                verdicts[*i] = Verdict::Reject(RejectReason::Revoked);
                false
            } else {
                true
            }
        });
        stats.revocation_pairings = ctx.pairing_count() - before_revocation;

        for positions in bucket_by_group(&prepared).into_values() {
            let chunk = self.policy.max_batch.unwrap_or(usize::MAX).max(1);
            for window in positions.chunks(chunk) {
                let refs: Vec<&PreparedItem<B>> = window.iter().map(|&p| &prepared[p].1).collect();
                let flags = settle(self.params, &refs, &self.policy, &mut stats, rng)
                    .expect("buckets hold a single group");
                for (&p, good) in window.iter().zip(flags) {
                    if !good {
                        verdicts[prepared[p].0] = Verdict::Reject(RejectReason::BatchFail);
                    }
                }
            }
        }

        stats.pairings = ctx.pairing_count() - start - stats.revocation_pairings;
        BatchReport { verdicts, stats }
    }
}

/// Finalizes `items` (one group) and, if the check fails and the policy
/// allows, bisects to find the failing ones. Returns one flag per item.
pub fn settle<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    items: &[&PreparedItem<B>],
    policy: &BatchPolicy,
    stats: &mut BatchStats,
    rng: &mut R,
) -> Result<Vec<bool>, BatchError> {
    let mut ok = vec![true; items.len()];
    settle_range(params, items, 0, policy, stats, &mut ok, rng)?;
    Ok(ok)
}

fn settle_range<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    items: &[&PreparedItem<B>],
    offset: usize,
    policy: &BatchPolicy,
    stats: &mut BatchStats,
    ok: &mut [bool],
    rng: &mut R,
) -> Result<(), BatchError> {
    if items.is_empty() {
        return Ok(());
    }
    stats.finalizations += 1;
    if batch_finalize(params, items, policy.security_bits, rng)? {
        return Ok(());
    }
    if items.len() == 1 || !policy.isolate {
        ok[offset..offset + items.len()].fill(false);
        return Ok(());
    }
    let mid = items.len() / 2;
    settle_range(params, &items[..mid], offset, policy, stats, ok, rng)?;
    settle_range(params, &items[mid..], offset + mid, policy, stats, ok, rng)
}

/// Convenience wrapper around [`BatchVerifier`].
pub fn verify_batch<B: Backend, R: RngCore + ?Sized>(
    params: &SystemParams<B>,
    opener_id: &[u8],
    directory: &GroupDirectory<B>,
    items: &[BatchItem<B>],
    policy: BatchPolicy,
    rng: &mut R,
) -> BatchReport {
    BatchVerifier::new(params, opener_id, directory)
        .with_policy(policy)
        .verify(items, rng)
}
