//! Maximum-weight on-time scheduling with identical processing times.
//!
//! Jobs are numbered by nondecreasing due time. `W_k(s, e)` is the largest
//! weight of a subset of jobs `1..k` released in `[s, e)` that can run
//! within `[s + p, e]` with every start in `T`. Either job `k` is left out,
//! or it starts at some `s'` and splits the window:
//!
//! ```text
//! W_k(s,e) = max( W_{k-1}(s,e),
//!                 max_{s'} w_k + W_{k-1}(s,s') + W_{k-1}(s',e) )   if r_k ∈ [s,e)
//!          = W_{k-1}(s,e)                                          otherwise
//! s' ∈ T,  max(r_k, s+p) ≤ s' ≤ min(d_k, e) − p
//! ```
//!
//! Windows range over `T` plus two sentinels, `min T − p` and `max T + p`,
//! so the full instance is the window between the sentinels.

use std::collections::HashMap;

use super::{build_result, Job, JobId, ScheduleError, ScheduleResult};

/// Largest instance [`brute_force_oracle`] accepts.
pub const ORACLE_MAX_JOBS: usize = 10;

/// `T = {r_i + l·p | i = 1..n, l = 0..n−1}`, sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimePointSet {
    points: Vec<i64>,
}

impl TimePointSet {
    pub fn new(jobs: &[Job], p: i64) -> Self {
        let n = jobs.len() as i64;
        let mut points: Vec<i64> = jobs
            .iter()
            .flat_map(|j| (0..n).map(move |l| j.r + l * p))
            .collect();
        points.sort_unstable();
        points.dedup();
        Self { points }
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, t: i64) -> bool {
        self.points.binary_search(&t).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasiblePolicy {
    /// Refuse instances containing a job with `r + p > d`.
    Reject,
    /// Drop such jobs before solving; they can never be on time.
    Filter,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DpStats {
    /// `|T|`.
    pub time_points: usize,
    /// Candidate starts `s'` examined across all `k, s, e`.
    pub inner_evaluations: u64,
    pub filtered_jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DpSolution {
    pub weight: u64,
    /// Selected job ids in execution order.
    pub selected: Vec<JobId>,
    pub schedule: ScheduleResult,
    pub stats: DpStats,
}

const SKIP: u32 = u32::MAX;

fn check_uniform(jobs: &[Job]) -> Result<Option<i64>, ScheduleError> {
    let Some(first) = jobs.first() else {
        return Ok(None);
    };
    for j in jobs {
        if j.p < 1 {
            return Err(ScheduleError::InvalidJob {
                id: j.id,
                reason: "processing time must be positive",
            });
        }
        if j.p != first.p {
            return Err(ScheduleError::MixedProcessing {
                first: first.id,
                p_first: first.p,
                other: j.id,
                p_other: j.p,
            });
        }
    }
    Ok(Some(first.p))
}

/// Solves `1 | r_i; p_j = p | Σ w_i U_i` exactly and returns a witness
/// schedule in which every selected job is on time.
pub fn dp_max_weight(jobs: &[Job], policy: InfeasiblePolicy) -> Result<DpSolution, ScheduleError> {
    let mut stats = DpStats::default();
    let Some(p) = check_uniform(jobs)? else {
        return Ok(DpSolution {
            weight: 0,
            selected: vec![],
            schedule: ScheduleResult::default(),
            stats,
        });
    };
    let mut admitted = Vec::with_capacity(jobs.len());
    for j in jobs {
        if j.admissible() {
            admitted.push(*j);
        } else if policy == InfeasiblePolicy::Reject {
            return Err(ScheduleError::Infeasible {
                id: j.id,
                r: j.r,
                p: j.p,
                d: j.d,
            });
        }
    }
    stats.filtered_jobs = jobs.len() - admitted.len();
    admitted.sort_by_key(|j| (j.d, j.id));
    let jobs = admitted;
    let n = jobs.len();

    let tset = TimePointSet::new(&jobs, p);
    stats.time_points = tset.len();
    if n == 0 {
        return Ok(DpSolution {
            weight: 0,
            selected: vec![],
            schedule: ScheduleResult::default(),
            stats,
        });
    }

    // window endpoints: sentinel, T, sentinel
    let t = tset.as_slice();
    let mut ends = Vec::with_capacity(t.len() + 2);
    ends.push(t[0] - p);
    ends.extend_from_slice(t);
    ends.push(t[t.len() - 1] + p);
    let m = ends.len();
    let idx = |s: usize, e: usize| s * m + e;

    let mut prev = vec![0u64; m * m];
    let mut cur = vec![0u64; m * m];
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(n);

    for job in &jobs {
        let mut pick = vec![SKIP; m * m];
        for s in 0..m {
            for e in s..m {
                let (ts, te) = (ends[s], ends[e]);
                let mut best = prev[idx(s, e)];
                if ts <= job.r && job.r < te {
                    let lo = job.r.max(ts + p);
                    let hi = job.d.min(te) - p;
                    // candidate starts are the inner points of `ends`
                    for mid in 1..m - 1 {
                        let tm = ends[mid];
                        if tm < lo {
                            continue;
                        }
                        if tm > hi {
                            break;
                        }
                        stats.inner_evaluations += 1;
                        let cand = job.w + prev[idx(s, mid)] + prev[idx(mid, e)];
                        if cand > best {
                            best = cand;
                            pick[idx(s, e)] = mid as u32;
                        }
                    }
                }
                cur[idx(s, e)] = best;
            }
        }
        choice.push(pick);
        std::mem::swap(&mut prev, &mut cur);
    }

    let weight = prev[idx(0, m - 1)];
    let mut starts = Vec::new();
    let mut stack = vec![(n, 0usize, m - 1)];
    while let Some((k, s, e)) = stack.pop() {
        if k == 0 {
            continue;
        }
        match choice[k - 1][idx(s, e)] {
            SKIP => stack.push((k - 1, s, e)),
            mid => {
                let mid = mid as usize;
                starts.push((jobs[k - 1], ends[mid]));
                stack.push((k - 1, s, mid));
                stack.push((k - 1, mid, e));
            }
        }
    }
    starts.sort_by_key(|&(_, start)| start);
    let schedule = build_result(starts);
    debug_assert_eq!(schedule.on_time_weight, weight);
    Ok(DpSolution {
        weight,
        selected: schedule.order(),
        schedule,
        stats,
    })
}

/// Exhaustive search over job sequences, each run as early as possible.
/// Jobs that cannot be on time are never chosen.
pub fn brute_force_oracle(jobs: &[Job]) -> Result<u64, ScheduleError> {
    if jobs.len() > ORACLE_MAX_JOBS {
        return Err(ScheduleError::TooManyJobs {
            n: jobs.len(),
            max: ORACLE_MAX_JOBS,
        });
    }
    fn best(jobs: &[Job], mask: u32, clock: i64, memo: &mut HashMap<(u32, i64), u64>) -> u64 {
        if let Some(&v) = memo.get(&(mask, clock)) {
            return v;
        }
        let mut out = 0;
        for (i, j) in jobs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                continue;
            }
            let start = clock.max(j.r);
            if start + j.p <= j.d {
                out = out.max(j.w + best(jobs, mask | 1 << i, start + j.p, memo));
            }
        }
        memo.insert((mask, clock), out);
        out
    }
    Ok(best(jobs, 0, i64::MIN, &mut HashMap::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_job() {
        let sol = dp_max_weight(&[Job::new(1, 0, 1, 1).weighted(5)], InfeasiblePolicy::Reject).unwrap();
        assert_eq!(sol.weight, 5);
        assert_eq!(sol.schedule.entries[0].start, 0);
    }

    #[test]
    fn three_jobs_all_on_time() {
        let jobs = [Job::new(1, 1, 3, 2), Job::new(2, 2, 6, 2), Job::new(3, 8, 11, 2)];
        let sol = dp_max_weight(&jobs, InfeasiblePolicy::Reject).unwrap();
        assert_eq!(sol.weight, brute_force_oracle(&jobs).unwrap());
        assert_eq!(sol.weight, 3);
        // 1, 4, 8 and 1, 3, 8 are both optimal; the DP settles on the latter
        let starts: Vec<i64> = sol.schedule.entries.iter().map(|e| e.start).collect();
        assert_eq!(starts, vec![1, 3, 8]);
        assert!(sol.schedule.is_feasible(&jobs) && sol.schedule.entries.iter().all(|e| !e.late));
        let alt = super::super::schedule_metrics(&jobs, &[1, 2, 3]).unwrap();
        assert_eq!(alt.on_time_weight, 3);
    }

    #[test]
    fn infeasible_job_policy() {
        let jobs = [Job::new(1, 1, 3, 2), Job::new(3, 3, 4, 2)];
        assert_eq!(
            dp_max_weight(&jobs, InfeasiblePolicy::Reject).unwrap_err(),
            ScheduleError::Infeasible { id: 3, r: 3, p: 2, d: 4 }
        );
        let sol = dp_max_weight(&jobs, InfeasiblePolicy::Filter).unwrap();
        assert_eq!((sol.weight, sol.stats.filtered_jobs), (1, 1));
        assert_eq!(brute_force_oracle(&[Job::new(3, 3, 4, 2)]).unwrap(), 0);
    }

    #[test]
    fn mixed_processing_rejected() {
        let jobs = [Job::new(1, 0, 9, 2), Job::new(2, 0, 9, 3)];
        assert!(matches!(
            dp_max_weight(&jobs, InfeasiblePolicy::Reject),
            Err(ScheduleError::MixedProcessing { .. })
        ));
    }

    #[test]
    fn empty_and_oracle_limit() {
        assert_eq!(dp_max_weight(&[], InfeasiblePolicy::Reject).unwrap().weight, 0);
        assert_eq!(brute_force_oracle(&[]).unwrap(), 0);
        let many: Vec<Job> = (0..11).map(|i| Job::new(i, 0, 100, 1)).collect();
        assert!(matches!(brute_force_oracle(&many), Err(ScheduleError::TooManyJobs { .. })));
    }

    #[test]
    fn time_points() {
        let jobs = [Job::new(1, 0, 9, 2), Job::new(2, 1, 9, 2), Job::new(3, 2, 9, 2)];
        let t = TimePointSet::new(&jobs, 2);
        assert_eq!(t.as_slice(), &[0, 1, 2, 3, 4, 5, 6]);
        assert!(t.len() <= jobs.len() * jobs.len());
    }

    #[test]
    fn heavy_job_displaces_light_ones() {
        // both light jobs fit only in [0, 4]; the heavy one needs [1, 3]
        let jobs = [
            Job::new(1, 0, 2, 2),
            Job::new(2, 2, 4, 2),
            Job::new(3, 1, 3, 2).weighted(5),
        ];
        let sol = dp_max_weight(&jobs, InfeasiblePolicy::Reject).unwrap();
        assert_eq!(sol.weight, 5);
        assert_eq!(sol.selected, vec![3]);
    }

    fn instance() -> impl Strategy<Value = Vec<Job>> {
        (1i64..=4, prop::collection::vec((0i64..=12, 0i64..=10, 0u64..=9), 0..=7)).prop_map(|(p, raw)| {
            raw.into_iter()
                .enumerate()
                .map(|(i, (r, slack, w))| Job::new(i as u32, r, r + p + slack, p).weighted(w))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_oracle_and_is_feasible(jobs in instance()) {
            let sol = dp_max_weight(&jobs, InfeasiblePolicy::Reject).unwrap();
            prop_assert_eq!(sol.weight, brute_force_oracle(&jobs).unwrap());
            prop_assert!(sol.schedule.is_feasible(&jobs));
            prop_assert!(sol.schedule.entries.iter().all(|e| !e.late));
            let t = TimePointSet::new(&jobs, jobs.first().map_or(1, |j| j.p));
            prop_assert!(sol.schedule.entries.iter().all(|e| t.contains(e.start)));
        }
    }
}
