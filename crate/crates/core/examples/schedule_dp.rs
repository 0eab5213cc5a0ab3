//! Evaluates a fixed processing order and then finds the order that
//! maximizes the on-time weight.
//!
//! cargo run --example schedule_dp

use vanet_ibgs::scheduler::{brute_force_oracle, dp_max_weight, schedule_metrics, InfeasiblePolicy, Job};

fn main() {
    let jobs = [Job::new(1, 1, 3, 2), Job::new(2, 2, 6, 2), Job::new(3, 3, 4, 2), Job::new(4, 8, 11, 2)];
    let result = schedule_metrics(&jobs, &[1, 3, 2, 4]).expect("known ids");
    println!("job  C  L  U");
    for e in &result.entries {
        println!("{:>3} {:>2} {:>2} {:>2}", e.id, e.completion, e.lateness, u8::from(e.late));
    }
    println!("C_max = {}, L_max = {}", result.c_max, result.l_max);

    // Emergency vehicles carry more weight; a job whose window is too short
    // to fit p is dropped up front.
    let weighted = [
        Job::new(1, 0, 6, 3).weighted(1),
        Job::new(2, 1, 5, 3).weighted(5),
        Job::new(3, 2, 9, 3).weighted(1),
        Job::new(4, 4, 10, 3).weighted(2),
        Job::new(5, 6, 8, 3).weighted(9),
    ];
    let sol = dp_max_weight(&weighted, InfeasiblePolicy::Filter).expect("uniform p");
    println!(
        "on-time weight {} with jobs {:?} ({} time points, {} inner evaluations)",
        sol.weight, sol.selected, sol.stats.time_points, sol.stats.inner_evaluations
    );
    for e in &sol.schedule.entries {
        println!("  job {} runs {}..{}", e.id, e.start, e.completion);
    }
    println!("exhaustive search agrees: {}", brute_force_oracle(&weighted).expect("small") == sol.weight);
}
