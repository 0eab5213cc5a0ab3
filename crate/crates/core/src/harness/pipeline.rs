//! Two-stage verification pipeline over a simulated arrival stream.
//!
//! Stage one runs on its own thread: it checks each signature's challenge
//! hash and rearranges its pairing equations (no pairings). Stage two
//! buffers the prepared items per group and settles a buffer with three
//! pairings once it holds `b` items, bisecting on failure.

use std::collections::{BTreeMap, HashMap};
use std::sync::mpsc::sync_channel;
use std::thread;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::algebra::{digest, make_curve_context, make_transparent_context, AlgebraError, Backend, GroupContext, DEFAULT_MODULUS};
use crate::batchverify::{
    aggregate_item, precompute_item, settle, BatchItem, BatchPolicy, BatchStats, GroupDirectory, PreparedItem,
    RejectReason,
};
use crate::ibgs::{group_public_key, verify_individual_modified, Deployment, Signature, SystemParams};
use crate::scheduler::{
    batch_size_sweep, choose_batch_size, schedule_metrics, BatchSizeRecord, CostModel, Job, JobId, SweepQueues,
    TimedAggregate,
};

use super::scenario::{gen_arrivals, Arrival, BackendChoice, BatchSize, Scenario};

pub const CURVE_ID: &str = "bls12-381";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub security_bits: u32,
    pub batch_size: BatchSize,
    pub max_batch: usize,
    pub processing_ticks: i64,
    pub setup_ticks: i64,
    pub cost: CostModel,
    pub lateness_budget: Option<i64>,
    /// Re-verify every item individually and count disagreements.
    pub audit: bool,
}

impl PipelineConfig {
    pub fn from_scenario(sc: &Scenario, audit: bool) -> Self {
        Self {
            security_bits: sc.security_bits,
            batch_size: sc.batch_size,
            max_batch: sc.max_batch,
            processing_ticks: sc.processing_ticks,
            setup_ticks: sc.setup_ticks,
            cost: CostModel::Synthetic {
                fixed: sc.batch_fixed_ticks,
                per_item: sc.batch_item_ticks,
            },
            lateness_budget: sc.lateness_budget,
            audit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SignedArrival<B: Backend> {
    pub arrival: Arrival,
    pub sig: Signature<B>,
}

/// Signs every arrival with its vehicle's credential, or forges it when
/// the arrival is marked forged.
pub fn sign_arrivals<B: Backend, R: RngCore + ?Sized>(
    dep: &Deployment<B>,
    arrivals: Vec<Arrival>,
    rng: &mut R,
) -> Vec<SignedArrival<B>> {
    arrivals
        .into_iter()
        .map(|arrival| {
            let sig = if arrival.forged {
                dep.forge(arrival.vehicle, &arrival.message, rng)
            } else {
                dep.sign(arrival.vehicle, &arrival.message, rng)
            };
            SignedArrival { arrival, sig }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemOutcome {
    pub accepted: bool,
    pub reason: Option<RejectReason>,
    /// End of stage one for this item.
    pub prepared_at: i64,
    /// End of the stage-two batch that settled it.
    pub verified_at: i64,
    pub due: i64,
    pub weight: u64,
    pub forged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    /// One entry per arrival, in arrival order.
    pub items: Vec<ItemOutcome>,
    pub batch_size: usize,
    /// Calibration records when the batch size was chosen automatically.
    pub sweep: Vec<BatchSizeRecord>,
    pub batches: usize,
    pub stats: BatchStats,
    pub pairings: u64,
    pub wall: Duration,
    /// `Some` in audit mode.
    pub audit_discrepancies: Option<usize>,
}

impl PipelineOutcome {
    pub fn accepted(&self) -> usize {
        self.items.iter().filter(|i| i.accepted).count()
    }

    pub fn rejected(&self) -> usize {
        self.items.len() - self.accepted()
    }

    pub fn false_accepts(&self) -> usize {
        self.items.iter().filter(|i| i.accepted && i.forged).count()
    }

    pub fn false_rejects(&self) -> usize {
        self.items.iter().filter(|i| !i.accepted && !i.forged).count()
    }

    /// Largest `verified_at − due`; 0 when empty.
    pub fn max_lateness(&self) -> i64 {
        self.items.iter().map(|i| i.verified_at - i.due).max().unwrap_or(0)
    }

    pub fn on_time_weight(&self) -> u64 {
        self.items.iter().filter(|i| i.verified_at <= i.due).map(|i| i.weight).sum()
    }
}

/// Stage-one completion times with items processed in arrival order.
fn stage_one_times(signed: &[SignedArrival<impl Backend>], processing: i64) -> Vec<i64> {
    let jobs: Vec<Job> = signed
        .iter()
        .enumerate()
        .map(|(i, s)| Job::new(i as JobId, s.arrival.tick, s.arrival.due, processing).weighted(s.arrival.weight))
        .collect();
    let order: Vec<JobId> = (0..jobs.len() as JobId).collect();
    let result = schedule_metrics(&jobs, &order).expect("ids are distinct and known");
    result.entries.iter().map(|e| e.completion).collect()
}

struct GroupKeys<'a, B: Backend> {
    params: &'a SystemParams<B>,
    directory: &'a GroupDirectory<B>,
    cache: HashMap<[u8; 32], B::G2>,
}

impl<B: Backend> GroupKeys<'_, B> {
    fn get(&mut self, tag: &B::G2) -> Option<B::G2> {
        let key = digest(tag);
        if let Some(s) = self.cache.get(&key) {
            return Some(*s);
        }
        let id = self.directory.manager_id(tag)?;
        let s = group_public_key(self.params, tag, id);
        self.cache.insert(key, s);
        Some(s)
    }
}

fn prepare<B: Backend>(
    params: &SystemParams<B>,
    opener_base: &B::G1,
    keys: &mut GroupKeys<'_, B>,
    s: &SignedArrival<B>,
) -> Result<PreparedItem<B>, RejectReason> {
    let item = BatchItem {
        msg: s.arrival.message.clone(),
        sig: s.sig.to_modified(),
    };
    let group_key = keys.get(&item.sig.group_tag).ok_or(RejectReason::UnknownGroup)?;
    precompute_item(params, opener_base, &group_key, &item)
}

/// Runs the batch-size sweep over the first `max_batch` prepared items of
/// the first group in the stream.
pub fn calibration_sweep<B: Backend, R: RngCore + ?Sized>(
    dep: &Deployment<B>,
    signed: &[SignedArrival<B>],
    cfg: &PipelineConfig,
    rng: &mut R,
) -> Vec<BatchSizeRecord> {
    let prepared_at = stage_one_times(signed, cfg.processing_ticks);
    let params = &dep.params;
    let directory = dep.directory();
    let mut keys = GroupKeys {
        params,
        directory: &directory,
        cache: HashMap::new(),
    };
    let opener_base = params.h_opener(&dep.opener.id);
    let mut group: Option<[u8; 32]> = None;
    let mut group_key = params.ctx.g2_identity();
    let mut queues = SweepQueues::new();
    for (i, s) in signed.iter().enumerate() {
        if queues.len() == cfg.max_batch {
            break;
        }
        let Ok(item) = prepare(params, &opener_base, &mut keys, s) else {
            continue;
        };
        if *group.get_or_insert(*item.group_digest()) != *item.group_digest() {
            continue;
        }
        group_key = *item.group_key();
        queues.push(TimedAggregate {
            aggregate: aggregate_item(params, &item, cfg.security_bits, rng),
            completion: prepared_at[i],
            due: s.arrival.due,
        });
    }
    batch_size_sweep(params, &group_key, &mut queues, cfg.setup_ticks, cfg.cost)
}

/// Runs both stages over `signed` and reports per-item verdicts.
pub fn run_pipeline<B: Backend>(
    dep: &Deployment<B>,
    signed: &[SignedArrival<B>],
    cfg: &PipelineConfig,
    seed: u64,
) -> PipelineOutcome {
    let params = &dep.params;
    let ctx = &params.ctx;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let prepared_at = stage_one_times(signed, cfg.processing_ticks);

    let (batch_size, sweep) = match cfg.batch_size {
        BatchSize::Fixed(b) => (b, Vec::new()),
        BatchSize::Auto => {
            let records = calibration_sweep(dep, signed, cfg, &mut rng);
            // Nothing usable in the calibration window: fall back to pairs.
            let b = choose_batch_size(&records, cfg.lateness_budget).map_or(2, |c| c.b);
            (b, records)
        }
    };
    log::info!("pipeline batch size {batch_size}");

    let policy = BatchPolicy {
        security_bits: cfg.security_bits,
        isolate: true,
        max_batch: None,
    };
    let directory = dep.directory();
    let opener_base = params.h_opener(&dep.opener.id);
    let mut items: Vec<ItemOutcome> = signed
        .iter()
        .zip(&prepared_at)
        .map(|(s, &t)| ItemOutcome {
            accepted: false,
            reason: None,
            prepared_at: t,
            verified_at: t,
            due: s.arrival.due,
            weight: s.arrival.weight,
            forged: s.arrival.forged,
        })
        .collect();
    let mut stats = BatchStats::default();
    let mut batches = 0;
    let mut stage_two_free = i64::MIN;

    let started = Instant::now();
    let pairings_before = ctx.pairing_count();
    let (tx, rx) = sync_channel::<(usize, Result<PreparedItem<B>, RejectReason>)>(batch_size.max(1) * 2);
    thread::scope(|scope| {
        scope.spawn(|| {
            let mut keys = GroupKeys {
                params,
                directory: &directory,
                cache: HashMap::new(),
            };
            for (i, s) in signed.iter().enumerate() {
                if tx.send((i, prepare(params, &opener_base, &mut keys, s))).is_err() {
                    break;
                }
            }
            drop(tx);
        });

        let mut buffers: BTreeMap<[u8; 32], Vec<(usize, PreparedItem<B>)>> = BTreeMap::new();
        let mut flush = |buffer: Vec<(usize, PreparedItem<B>)>, items: &mut Vec<ItemOutcome>| {
            let t0 = Instant::now();
            let refs: Vec<&PreparedItem<B>> = buffer.iter().map(|(_, p)| p).collect();
            let flags =
                settle(params, &refs, &policy, &mut stats, &mut rng).expect("buffers are keyed by group");
            let ready = buffer.iter().map(|(i, _)| items[*i].prepared_at).max().unwrap_or(0);
            let start = stage_two_free.max(ready);
            let end = start + cfg.setup_ticks + cfg.cost.ticks(buffer.len(), t0.elapsed());
            stage_two_free = end;
            batches += 1;
            for ((i, _), ok) in buffer.iter().zip(flags) {
                let out = &mut items[*i];
                out.accepted = ok;
                out.reason = (!ok).then_some(RejectReason::BatchFail);
                out.verified_at = end;
            }
        };
        for (i, result) in rx {
            match result {
                Ok(item) => {
                    let buffer = buffers.entry(*item.group_digest()).or_default();
                    buffer.push((i, item));
                    if buffer.len() >= batch_size {
                        let full = std::mem::take(buffer);
                        flush(full, &mut items);
                    }
                }
                Err(reason) => items[i].reason = Some(reason),
            }
        }
        for buffer in std::mem::take(&mut buffers).into_values().filter(|b| !b.is_empty()) {
            flush(buffer, &mut items);
        }
    });
    let wall = started.elapsed();
    let pairings = ctx.pairing_count() - pairings_before;
    stats.pairings = pairings;

    let audit_discrepancies = cfg.audit.then(|| {
        let mut disagreements = 0;
        for (s, out) in signed.iter().zip(&items) {
            let individual = directory.manager_id(&s.sig.group_tag).is_some_and(|manager| {
                verify_individual_modified(params, &s.sig.to_modified(), &s.arrival.message, &dep.opener.id, manager)
            });
            if individual != out.accepted {
                log::warn!("audit: batch says {} but individual check says {individual}", out.accepted);
                disagreements += 1;
            }
        }
        disagreements
    });

    PipelineOutcome {
        items,
        batch_size,
        sweep,
        batches,
        stats,
        pairings,
        wall,
        audit_discrepancies,
    }
}

/// A deployment with the scenario's vehicles and its signed arrival stream.
pub fn build_world<B: Backend>(ctx: GroupContext<B>, sc: &Scenario) -> (Deployment<B>, Vec<SignedArrival<B>>) {
    let mut rng = ChaCha20Rng::seed_from_u64(sc.seed ^ 0x5eed);
    let dep = Deployment::new(ctx, sc.groups, sc.vehicles, &mut rng);
    let signed = sign_arrivals(&dep, gen_arrivals(sc), &mut rng);
    (dep, signed)
}

/// Builds the scenario on its configured backend and runs only the sweep.
pub fn run_sweep(sc: &Scenario) -> Result<Vec<BatchSizeRecord>, PipelineError> {
    let cfg = PipelineConfig::from_scenario(sc, false);
    let mut rng = ChaCha20Rng::seed_from_u64(sc.seed);
    Ok(match sc.backend {
        BackendChoice::Transparent => {
            let (dep, signed) = build_world(make_transparent_context(sc.seed, DEFAULT_MODULUS)?, sc);
            calibration_sweep(&dep, &signed, &cfg, &mut rng)
        }
        BackendChoice::Curve => {
            let (dep, signed) = build_world(make_curve_context(CURVE_ID)?, sc);
            calibration_sweep(&dep, &signed, &cfg, &mut rng)
        }
    })
}

/// Builds the scenario on its configured backend and runs the pipeline.
pub fn run_scenario(sc: &Scenario, audit: bool) -> Result<PipelineOutcome, PipelineError> {
    let cfg = PipelineConfig::from_scenario(sc, audit);
    Ok(match sc.backend {
        BackendChoice::Transparent => {
            let (dep, signed) = build_world(make_transparent_context(sc.seed, DEFAULT_MODULUS)?, sc);
            run_pipeline(&dep, &signed, &cfg, sc.seed)
        }
        BackendChoice::Curve => {
            let (dep, signed) = build_world(make_curve_context(CURVE_ID)?, sc);
            run_pipeline(&dep, &signed, &cfg, sc.seed)
        }
    })
}
