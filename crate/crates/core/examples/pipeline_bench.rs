//! Runs a traffic scenario through the two-stage pipeline and compares the
//! three verification modes.
//!
//! cargo run --release --example pipeline_bench

use vanet_ibgs::harness::pipeline::run_scenario;
use vanet_ibgs::harness::report::{run_bench, write_bench_csv};
use vanet_ibgs::harness::scenario::Scenario;

const SCENARIO: &str = "
vehicles = 40
groups = 3
rate_per_vehicle = 5      # one beacon every 200 ms
horizon_ms = 2000
jitter_ms = 3
forgery_rate = 0.02
seed = 9
batch_size = auto
max_batch = 24
lateness_budget = 30
class.ambulance = 10, 20, 0.05
class.car = 1, 100, 0.95
";

fn main() {
    let sc = Scenario::parse(SCENARIO).expect("valid scenario");
    let rows = run_bench(&sc).expect("transparent backend");
    write_bench_csv(&rows, std::io::stdout()).expect("stdout");

    let out = run_scenario(&sc, true).expect("transparent backend");
    println!(
        "\npipeline: b = {}, {} batches, {} pairings, {} rejected, {} false accepts, {} audit disagreements",
        out.batch_size,
        out.batches,
        out.pairings,
        out.rejected(),
        out.false_accepts(),
        out.audit_discrepancies.unwrap_or(0)
    );
    println!("max lateness {} ticks, on-time weight {}", out.max_lateness(), out.on_time_weight());
}
