//! Sweeps the stage-two batch size over a simulated stream, with and
//! without a forged signature in it, and picks `b` under a lateness budget.
//!
//! cargo run --example batch_size_sweep

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vanet_ibgs::algebra::{make_transparent_context, DEFAULT_MODULUS};
use vanet_ibgs::batchverify::{aggregate_item, precompute_item, BatchItem};
use vanet_ibgs::ibgs::{group_public_key, Deployment};
use vanet_ibgs::scheduler::{
    batch_size_sweep, choose_batch_size, write_records_csv, CostModel, SweepQueues, TimedAggregate,
};

fn run(dep: &Deployment<vanet_ibgs::algebra::TransparentBackend>, forged_at: Option<usize>, rng: &mut ChaCha20Rng) {
    let params = &dep.params;
    let gm = &dep.managers[0];
    let group_key = group_public_key(params, &gm.group_tag, &gm.id);
    let opener_base = params.h_opener(&dep.opener.id);

    // Eight messages arriving 5 ticks apart, each due 40 ticks later.
    let queues: SweepQueues<_> = (0..8)
        .map(|i| {
            let msg = format!("warning {i}").into_bytes();
            let sig = if Some(i + 1) == forged_at { dep.forge(0, &msg, rng) } else { dep.sign(0, &msg, rng) };
            let item = BatchItem { msg, sig: sig.to_modified() };
            let prepared = precompute_item(params, &opener_base, &group_key, &item).expect("hash checks out");
            let arrival = 5 * i as i64;
            TimedAggregate {
                aggregate: aggregate_item(params, &prepared, 20, rng),
                completion: arrival + 2,
                due: arrival + 40,
            }
        })
        .collect();
    let mut queues = queues;
    let records = batch_size_sweep(params, &group_key, &mut queues, 1, CostModel::Synthetic { fixed: 4, per_item: 1 });
    write_records_csv(&records, std::io::stdout()).expect("stdout");
    if let Some(choice) = choose_batch_size(&records, Some(0)) {
        println!("# with no lateness allowed: b = {} (C_max {}, L_max {})", choice.b, choice.c_max, choice.l_max);
    }
}

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let ctx = make_transparent_context(4, DEFAULT_MODULUS).expect("valid modulus");
    let dep = Deployment::new(ctx, 1, 1, &mut rng);
    println!("# honest stream");
    run(&dep, None, &mut rng);
    println!("# forgery at position 3");
    run(&dep, Some(3), &mut rng);
}
