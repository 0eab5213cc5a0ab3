//! Side-by-side cost of individual and batch verification on one stream.

use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::algebra::{make_curve_context, make_transparent_context, Backend, DEFAULT_MODULUS};
use crate::ibgs::{verify_individual_modified, verify_individual_original, Deployment};

use super::pipeline::{build_world, run_pipeline, PipelineConfig, PipelineError, SignedArrival, CURVE_ID};
use super::scenario::{BackendChoice, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mode: String,
    pub n: usize,
    pub pairings: u64,
    pub wall_us: u128,
    pub accepted: usize,
    pub rejected: usize,
    pub false_accepts: usize,
    /// Empty for the individual modes.
    pub batch_size: Option<usize>,
}

pub const MODE_ORIGINAL: &str = "individual-original";
pub const MODE_MODIFIED: &str = "individual-modified";
pub const MODE_BATCH: &str = "batch";

fn individual<B: Backend>(
    dep: &Deployment<B>,
    signed: &[SignedArrival<B>],
    mode: &str,
    check: impl Fn(&SignedArrival<B>, &[u8]) -> bool,
) -> BenchRow {
    let ctx = &dep.params.ctx;
    let directory = dep.directory();
    let before = ctx.pairing_count();
    let started = Instant::now();
    let verdicts: Vec<bool> = signed
        .iter()
        .map(|s| directory.manager_id(&s.sig.group_tag).is_some_and(|m| check(s, m)))
        .collect();
    let wall_us = started.elapsed().as_micros();
    let accepted = verdicts.iter().filter(|v| **v).count();
    BenchRow {
        mode: mode.to_string(),
        n: signed.len(),
        pairings: ctx.pairing_count() - before,
        wall_us,
        accepted,
        rejected: signed.len() - accepted,
        false_accepts: signed.iter().zip(&verdicts).filter(|(s, v)| **v && s.arrival.forged).count(),
        batch_size: None,
    }
}

/// Verifies `signed` three ways and returns one row per mode.
pub fn bench_modes<B: Backend>(
    dep: &Deployment<B>,
    signed: &[SignedArrival<B>],
    cfg: &PipelineConfig,
    seed: u64,
) -> Vec<BenchRow> {
    let params = &dep.params;
    let opener = &dep.opener.id;
    let original = individual(dep, signed, MODE_ORIGINAL, |s, m| {
        verify_individual_original(params, &s.sig, &s.arrival.message, opener, m)
    });
    let modified = individual(dep, signed, MODE_MODIFIED, |s, m| {
        verify_individual_modified(params, &s.sig.to_modified(), &s.arrival.message, opener, m)
    });
    let out = run_pipeline(dep, signed, cfg, seed);
    let batch = BenchRow {
        mode: MODE_BATCH.to_string(),
        n: signed.len(),
        pairings: out.pairings,
        wall_us: out.wall.as_micros(),
        accepted: out.accepted(),
        rejected: out.rejected(),
        false_accepts: out.false_accepts(),
        batch_size: Some(out.batch_size),
    };
    vec![original, modified, batch]
}

pub fn run_bench(sc: &Scenario) -> Result<Vec<BenchRow>, PipelineError> {
    let cfg = PipelineConfig::from_scenario(sc, false);
    Ok(match sc.backend {
        BackendChoice::Transparent => {
            let (dep, signed) = build_world(make_transparent_context(sc.seed, DEFAULT_MODULUS)?, sc);
            bench_modes(&dep, &signed, &cfg, sc.seed)
        }
        BackendChoice::Curve => {
            let (dep, signed) = build_world(make_curve_context(CURVE_ID)?, sc);
            bench_modes(&dep, &signed, &cfg, sc.seed)
        }
    })
}

/// CSV with header `mode,n,pairings,wall_us,accepted,rejected,false_accepts,batch_size`.
pub fn write_bench_csv<W: io::Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bench_csv<R: io::Read>(input: R) -> csv::Result<Vec<BenchRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
