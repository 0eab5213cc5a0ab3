//! Batch-size sweep for the pairing stage.
//!
//! The first verification stage leaves one aggregate per signature in five
//! queues (`M`, `B`, `K`, `Q`, `V`). The sweep grows a window from the front
//! of those queues one item at a time, finalizes the window with three
//! pairings, and records what a batch of that size would cost in completion
//! time and lateness. Successful results go to a sixth queue `P`.

use std::collections::VecDeque;
use std::io;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::algebra::{Backend, Group};
use crate::batchverify::ItemAggregate;
use crate::ibgs::SystemParams;

/// An aggregate together with its stage-one completion time and due time.
#[derive(Debug, PartialEq, Eq)]
pub struct TimedAggregate<B: Backend> {
    pub aggregate: ItemAggregate<B>,
    pub completion: i64,
    pub due: i64,
}

copy_with_backend!(TimedAggregate);

#[derive(Debug, Clone)]
pub struct SweepQueues<B: Backend> {
    pub m: VecDeque<B::Gt>,
    pub b: VecDeque<B::G1>,
    pub k: VecDeque<B::G1>,
    pub q: VecDeque<B::G1>,
    pub v: VecDeque<B::Gt>,
    /// Accepted window results `η`.
    pub p: Vec<B::Gt>,
    timing: VecDeque<(i64, i64)>,
}

impl<B: Backend> Default for SweepQueues<B> {
    fn default() -> Self {
        Self {
            m: VecDeque::new(),
            b: VecDeque::new(),
            k: VecDeque::new(),
            q: VecDeque::new(),
            v: VecDeque::new(),
            p: Vec::new(),
            timing: VecDeque::new(),
        }
    }
}

impl<B: Backend> SweepQueues<B> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, item: TimedAggregate<B>) {
        let a = item.aggregate;
        self.m.push_back(a.commitments);
        self.b.push_back(a.on_b);
        self.k.push_back(a.on_master);
        self.q.push_back(a.on_group);
        self.v.push_back(a.cipher);
        self.timing.push_back((item.completion, item.due));
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    fn pop(&mut self) -> Option<TimedAggregate<B>> {
        let (completion, due) = self.timing.pop_front()?;
        Some(TimedAggregate {
            aggregate: ItemAggregate {
                commitments: self.m.pop_front()?,
                on_b: self.b.pop_front()?,
                on_master: self.k.pop_front()?,
                on_group: self.q.pop_front()?,
                cipher: self.v.pop_front()?,
            },
            completion,
            due,
        })
    }
}

impl<B: Backend> FromIterator<TimedAggregate<B>> for SweepQueues<B> {
    fn from_iter<I: IntoIterator<Item = TimedAggregate<B>>>(iter: I) -> Self {
        let mut q = Self::new();
        for item in iter {
            q.push(item);
        }
        q
    }
}

/// How the operation time `b_t` of a window is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostModel {
    /// Wall-clock time of the finalization, in units of `tick` (rounded up).
    Measured { tick: Duration },
    /// `fixed + per_item · b` ticks.
    Synthetic { fixed: i64, per_item: i64 },
}

impl CostModel {
    pub fn ticks(&self, b: usize, elapsed: Duration) -> i64 {
        match *self {
            CostModel::Measured { tick } => {
                let tick = tick.as_nanos().max(1);
                elapsed.as_nanos().div_ceil(tick) as i64
            }
            CostModel::Synthetic { fixed, per_item } => fixed + per_item * b as i64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepStatus {
    Ok,
    BatchError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchSizeRecord {
    pub b: usize,
    pub b_t: i64,
    #[serde(rename = "C_max_b")]
    pub c_max: i64,
    #[serde(rename = "L_max_b")]
    pub l_max: i64,
    pub status: SweepStatus,
    #[serde(skip)]
    pub setup: i64,
}

/// For `b = 2, 3, ...` pops items until the window holds `b` of them and
/// checks `ΠM_i = e(ΠB_i,B)·e(ΠK_i,K_T)·e(ΠQ_i,S)·ΠV_i`. Records
/// `C_max_b = s_b + b_t + max C_i` and `L_max_b = C_max_b − min d_i` over the
/// window. Stops at the first failing window, recording it as an error.
pub fn batch_size_sweep<B: Backend>(
    params: &SystemParams<B>,
    group_key: &B::G2,
    queues: &mut SweepQueues<B>,
    setup: i64,
    cost: CostModel,
) -> Vec<BatchSizeRecord> {
    let ctx = &params.ctx;
    let mut window: Vec<TimedAggregate<B>> = Vec::new();
    let mut records = Vec::new();
    let mut b = 2;
    loop {
        while window.len() < b {
            match queues.pop() {
                Some(item) => window.push(item),
                None => return records,
            }
        }
        let started = Instant::now();
        let total = window
            .iter()
            .fold(ItemAggregate::identity(params), |acc, it| acc.combine(&it.aggregate));
        let eta = ctx
            .pairing(&total.on_b, &ctx.g2())
            .mul(&ctx.pairing(&total.on_master, &params.master_public))
            .mul(&ctx.pairing(&total.on_group, group_key))
            .mul(&total.cipher);
        let ok = eta == total.commitments;
        let b_t = cost.ticks(b, started.elapsed());

        let c_window = window.iter().map(|it| it.completion).max().unwrap_or(0);
        let d_first = window.iter().map(|it| it.due).min().unwrap_or(0);
        let c_max = setup + b_t + c_window;
        records.push(BatchSizeRecord {
            b,
            b_t,
            c_max,
            l_max: c_max - d_first,
            status: if ok { SweepStatus::Ok } else { SweepStatus::BatchError },
            setup,
        });
        if !ok {
            log::warn!("batch error in window of size {b}");
            return records;
        }
        queues.p.push(eta);
        b += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchChoice {
    pub b: usize,
    pub c_max: i64,
    pub l_max: i64,
    /// False when no record met the budget and the smallest size was taken.
    pub within_budget: bool,
}

/// Largest `b` whose `L_max_b` fits `budget` (`None` = unbounded), ties
/// toward smaller `C_max_b`. Falls back to the smallest `b` when nothing
/// fits. Only successful records are considered.
pub fn choose_batch_size(records: &[BatchSizeRecord], budget: Option<i64>) -> Option<BatchChoice> {
    let ok = records.iter().filter(|r| r.status == SweepStatus::Ok);
    let fits = ok
        .clone()
        .filter(|r| budget.is_none_or(|limit| r.l_max <= limit))
        .max_by(|x, y| x.b.cmp(&y.b).then(y.c_max.cmp(&x.c_max)));
    if let Some(r) = fits {
        return Some(BatchChoice {
            b: r.b,
            c_max: r.c_max,
            l_max: r.l_max,
            within_budget: true,
        });
    }
    let r = ok.min_by(|x, y| x.b.cmp(&y.b).then(x.c_max.cmp(&y.c_max)))?;
    log::warn!("no batch size meets the lateness budget; using b = {}", r.b);
    Some(BatchChoice {
        b: r.b,
        c_max: r.c_max,
        l_max: r.l_max,
        within_budget: false,
    })
}

/// CSV with header `b,b_t,C_max_b,L_max_b,status`.
pub fn write_records_csv<W: io::Write>(records: &[BatchSizeRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: io::Read>(input: R) -> csv::Result<Vec<BatchSizeRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batchverify::{aggregate_item, precompute_item, BatchItem};
    use crate::ibgs::group_public_key;
    use crate::ibgs::testkit::transparent_world;

    const SYNTH: CostModel = CostModel::Synthetic { fixed: 3, per_item: 1 };

    fn stream(n: usize, forged: Option<usize>, seed: u64) -> (crate::ibgs::testkit::World<crate::algebra::TransparentBackend>, SweepQueues<crate::algebra::TransparentBackend>) {
        let mut w = transparent_world(seed);
        let (o, g) = w.ids(0);
        let s = group_public_key(&w.params, &w.deployment.managers[0].group_tag, &g);
        let h_o = w.params.h_opener(&o);
        let mut queues = SweepQueues::new();
        for i in 0..n {
            let msg = vec![i as u8];
            let sig = if forged == Some(i + 1) { w.forge(0, &msg) } else { w.sign(0, &msg) };
            let item = BatchItem { msg, sig: sig.to_modified() };
            let prepared = precompute_item(&w.params, &h_o, &s, &item).unwrap();
            queues.push(TimedAggregate {
                aggregate: aggregate_item(&w.params, &prepared, 20, &mut w.rng),
                completion: 2 * (i as i64 + 1),
                due: 10 + 2 * i as i64,
            });
        }
        (w, queues)
    }

    fn group_key(w: &crate::ibgs::testkit::World<crate::algebra::TransparentBackend>) -> <crate::algebra::TransparentBackend as Backend>::G2 {
        group_public_key(&w.params, &w.deployment.managers[0].group_tag, &w.deployment.managers[0].id)
    }

    #[test]
    fn honest_stream_all_sizes_ok() {
        let (w, mut q) = stream(8, None, 61);
        let recs = batch_size_sweep(&w.params, &group_key(&w), &mut q, 1, SYNTH);
        assert_eq!(recs.iter().map(|r| r.b).collect::<Vec<_>>(), (2..=8).collect::<Vec<_>>());
        assert!(recs.iter().all(|r| r.status == SweepStatus::Ok));
        assert!(recs.windows(2).all(|p| p[0].b_t <= p[1].b_t));
        assert_eq!(q.p.len(), 7);
        // b = 4: window C = 2..8, d from 10; 1 + (3 + 4) + 8 = 16
        assert_eq!((recs[2].c_max, recs[2].l_max), (16, 6));
    }

    #[test]
    fn forgery_stops_sweep() {
        let (w, mut q) = stream(8, Some(3), 62);
        let recs = batch_size_sweep(&w.params, &group_key(&w), &mut q, 0, SYNTH);
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].status, SweepStatus::Ok);
        assert_eq!((recs[1].b, recs[1].status), (3, SweepStatus::BatchError));
    }

    #[test]
    fn short_streams() {
        let (w, mut q) = stream(2, None, 63);
        assert_eq!(batch_size_sweep(&w.params, &group_key(&w), &mut q, 0, SYNTH).len(), 1);
        let (w, mut q) = stream(1, None, 64);
        assert!(batch_size_sweep(&w.params, &group_key(&w), &mut q, 0, SYNTH).is_empty());
    }

    #[test]
    fn each_window_costs_three_pairings() {
        let (w, mut q) = stream(5, None, 65);
        w.params.ctx.reset_pairing_count();
        let recs = batch_size_sweep(&w.params, &group_key(&w), &mut q, 0, SYNTH);
        assert_eq!(w.params.ctx.pairing_count(), 3 * recs.len() as u64);
    }

    fn rec(b: usize, c_max: i64, l_max: i64) -> BatchSizeRecord {
        BatchSizeRecord {
            b,
            b_t: 1,
            c_max,
            l_max,
            status: SweepStatus::Ok,
            setup: 0,
        }
    }

    #[test]
    fn choice_rules() {
        let recs = [rec(2, 5, -1), rec(3, 6, 0), rec(4, 8, 2)];
        assert_eq!(choose_batch_size(&recs, Some(0)).unwrap().b, 3);
        assert_eq!(choose_batch_size(&recs, None).unwrap().b, 4);
        let low = choose_batch_size(&recs, Some(-5)).unwrap();
        assert_eq!((low.b, low.within_budget), (2, false));
        assert!(choose_batch_size(&[], None).is_none());
        let mut bad = rec(5, 1, -9);
        bad.status = SweepStatus::BatchError;
        assert_eq!(choose_batch_size(&[rec(2, 5, 0), bad], None).unwrap().b, 2);
        let tie = [rec(3, 9, 0), rec(3, 7, 0)];
        assert_eq!(choose_batch_size(&tie, None).unwrap().c_max, 7);
    }

    #[test]
    fn csv_roundtrip() {
        let recs = vec![rec(2, 5, -1), BatchSizeRecord { status: SweepStatus::BatchError, ..rec(3, 6, 0) }];
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "b,b_t,C_max_b,L_max_b,status");
        assert_eq!(text.lines().nth(2).unwrap(), "3,1,6,0,batch_error");
        assert_eq!(read_records_csv(buf.as_slice()).unwrap(), recs);
    }
}
