//! The same flow on BLS12-381: sign, batch-verify, open.
//!
//! cargo run --release --example curve_backend

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vanet_ibgs::algebra::make_curve_context;
use vanet_ibgs::batchverify::{verify_batch, BatchItem, BatchPolicy};
use vanet_ibgs::ibgs::{verify_individual_modified, Deployment};
use vanet_ibgs::opener::judge;

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let ctx = make_curve_context("bls12-381").expect("supported curve");
    let dep = Deployment::new(ctx, 1, 4, &mut rng);
    let params = &dep.params;

    let items: Vec<_> = (0..16)
        .map(|i| {
            let msg = format!("lane change {i}").into_bytes();
            BatchItem { sig: dep.sign(i % 4, &msg, &mut rng).to_modified(), msg }
        })
        .collect();
    println!("modified signature: {} bytes", items[0].sig.to_bytes().len());

    let directory = dep.directory();
    let t = Instant::now();
    let report = verify_batch(params, &dep.opener.id, &directory, &items, BatchPolicy::default(), &mut rng);
    println!("batch: {} accepted, {} pairings, {:?}", report.accepted(), report.stats.pairings, t.elapsed());

    let t = Instant::now();
    params.ctx.reset_pairing_count();
    let manager = &dep.managers[0].id;
    let ok = items
        .iter()
        .all(|it| verify_individual_modified(params, &it.sig, &it.msg, &dep.opener.id, manager));
    println!("individual: all valid = {ok}, {} pairings, {:?}", params.ctx.pairing_count(), t.elapsed());

    let opening = dep.open(&items[5].sig.trace, &mut rng).expect("registered signer");
    println!(
        "opened item 5: {} (judge: {})",
        String::from_utf8_lossy(&opening.vehicle_id),
        judge(params, &dep.opener.id, &items[5].sig.trace, &opening)
    );
}
