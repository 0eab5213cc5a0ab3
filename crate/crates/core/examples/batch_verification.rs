//! Batch-verifies a mix of honest and forged signatures from two groups and
//! compares the pairing cost with one-by-one verification.
//!
//! cargo run --example batch_verification

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vanet_ibgs::algebra::{make_transparent_context, DEFAULT_MODULUS};
use vanet_ibgs::batchverify::{BatchItem, BatchPolicy, BatchVerifier, Verdict};
use vanet_ibgs::ibgs::{verify_individual_modified, Deployment};

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let ctx = make_transparent_context(2, DEFAULT_MODULUS).expect("valid modulus");
    let dep = Deployment::new(ctx, 2, 10, &mut rng);
    let forged = [7, 31];

    let items: Vec<_> = (0..60)
        .map(|i| {
            let vehicle = i % 10;
            let msg = format!("beacon {i}").into_bytes();
            let sig = if forged.contains(&i) {
                dep.forge(vehicle, &msg, &mut rng)
            } else {
                dep.sign(vehicle, &msg, &mut rng)
            };
            BatchItem { msg, sig: sig.to_modified() }
        })
        .collect();

    let directory = dep.directory();
    let report = BatchVerifier::new(&dep.params, &dep.opener.id, &directory)
        .with_policy(BatchPolicy { security_bits: 20, ..BatchPolicy::default() })
        .verify(&items, &mut rng);

    for (i, v) in report.verdicts.iter().enumerate() {
        if let Verdict::Reject(reason) = v {
            println!("item {i}: rejected ({})", reason.as_str());
        }
    }
    println!(
        "batch: {} accepted, {} rejected, {} pairings in {} finalizations",
        report.accepted(),
        report.rejected(),
        report.stats.pairings,
        report.stats.finalizations
    );

    let ctx = &dep.params.ctx;
    ctx.reset_pairing_count();
    let accepted = items
        .iter()
        .filter(|it| {
            let manager = directory.manager_id(&it.sig.group_tag).expect("known group");
            verify_individual_modified(&dep.params, &it.sig, &it.msg, &dep.opener.id, manager)
        })
        .count();
    println!("individual: {accepted} accepted, {} pairings", ctx.pairing_count());
}
