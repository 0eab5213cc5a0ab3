//! Scheduling of verification work on a single machine.
//!
//! Signatures become jobs with a release time (arrival), a due time and a
//! weight (priority). [`schedule_metrics`] evaluates a fixed order,
//! [`dp_max_weight`] picks the heaviest set that can all finish on time when
//! every job takes the same processing time, and [`batch_size_sweep`] tries
//! growing batch sizes for the pairing stage.

mod dp;
mod sweep;

use std::collections::{HashMap, HashSet};
use std::str::FromStr;

use thiserror::Error;

pub use dp::{brute_force_oracle, dp_max_weight, DpSolution, DpStats, InfeasiblePolicy, TimePointSet, ORACLE_MAX_JOBS};
pub use sweep::{
    batch_size_sweep, choose_batch_size, read_records_csv, write_records_csv, BatchChoice, BatchSizeRecord,
    CostModel, SweepQueues, SweepStatus, TimedAggregate,
};

pub type JobId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Job {
    pub id: JobId,
    /// Release time.
    pub r: i64,
    /// Due time.
    pub d: i64,
    /// Processing time.
    pub p: i64,
    pub w: u64,
}

impl Job {
    pub fn new(id: JobId, r: i64, d: i64, p: i64) -> Self {
        Self { id, r, d, p, w: 1 }
    }

    pub fn weighted(mut self, w: u64) -> Self {
        self.w = w;
        self
    }

    /// Can run on time at all.
    pub fn admissible(&self) -> bool {
        self.r + self.p <= self.d
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("unknown job id {0}")]
    UnknownJob(JobId),
    #[error("job id {0} appears more than once")]
    DuplicateJob(JobId),
    #[error("job {id}: r + p = {} exceeds d = {d}", r + p)]
    Infeasible { id: JobId, r: i64, p: i64, d: i64 },
    #[error("processing times differ: job {first} has p = {p_first}, job {other} has p = {p_other}")]
    MixedProcessing {
        first: JobId,
        p_first: i64,
        other: JobId,
        p_other: i64,
    },
    #[error("job {id}: {reason}")]
    InvalidJob { id: JobId, reason: &'static str },
    #[error("brute force is limited to {max} jobs, got {n}")]
    TooManyJobs { n: usize, max: usize },
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledJob {
    pub id: JobId,
    pub start: i64,
    /// `C = start + p`.
    pub completion: i64,
    /// `L = C − d`.
    pub lateness: i64,
    pub late: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScheduleResult {
    /// Jobs in execution order.
    pub entries: Vec<ScheduledJob>,
    /// 0 for an empty schedule.
    pub c_max: i64,
    /// 0 for an empty schedule.
    pub l_max: i64,
    pub on_time_weight: u64,
}

impl ScheduleResult {
    pub fn order(&self) -> Vec<JobId> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn get(&self, id: JobId) -> Option<&ScheduledJob> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Checks that starts respect release times and that jobs do not
    /// overlap.
    pub fn is_feasible(&self, jobs: &[Job]) -> bool {
        let by_id: HashMap<JobId, &Job> = jobs.iter().map(|j| (j.id, j)).collect();
        let mut prev_end = i64::MIN;
        for e in &self.entries {
            let Some(job) = by_id.get(&e.id) else {
                return false;
            };
            if e.start < job.r || e.start < prev_end || e.completion != e.start + job.p {
                return false;
            }
            prev_end = e.completion;
        }
        true
    }
}

fn build_result(timed: Vec<(Job, i64)>) -> ScheduleResult {
    let mut out = ScheduleResult::default();
    let mut l_max = i64::MIN;
    for (job, start) in timed {
        let completion = start + job.p;
        let lateness = completion - job.d;
        let late = completion > job.d;
        out.c_max = out.c_max.max(completion);
        l_max = l_max.max(lateness);
        if !late {
            out.on_time_weight += job.w;
        }
        out.entries.push(ScheduledJob {
            id: job.id,
            start,
            completion,
            lateness,
            late,
        });
    }
    out.l_max = if out.entries.is_empty() { 0 } else { l_max };
    out
}

/// Runs `order` back to back, each job starting at the later of its release
/// time and the previous completion.
pub fn schedule_metrics(jobs: &[Job], order: &[JobId]) -> Result<ScheduleResult, ScheduleError> {
    let by_id: HashMap<JobId, Job> = jobs.iter().map(|j| (j.id, *j)).collect();
    let mut seen = HashSet::new();
    let mut clock = i64::MIN;
    let mut timed = Vec::with_capacity(order.len());
    for &id in order {
        let job = *by_id.get(&id).ok_or(ScheduleError::UnknownJob(id))?;
        if !seen.insert(id) {
            return Err(ScheduleError::DuplicateJob(id));
        }
        let start = clock.max(job.r);
        clock = start + job.p;
        timed.push((job, start));
    }
    Ok(build_result(timed))
}

/// Parses a job file: one `id r d p [w]` line per job, `#` comments.
pub fn parse_jobs(text: &str) -> Result<Vec<Job>, ScheduleError> {
    let mut jobs = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let cols: Vec<&str> = content.split_whitespace().collect();
        if !(4..=5).contains(&cols.len()) {
            return Err(ScheduleError::Parse {
                line,
                reason: format!("expected `id r d p [w]`, found {} columns", cols.len()),
            });
        }
        fn num<T: FromStr>(line: usize, name: &str, s: &str) -> Result<T, ScheduleError> {
            s.parse().map_err(|_| ScheduleError::Parse {
                line,
                reason: format!("{name} `{s}` is not an integer"),
            })
        }
        let job = Job {
            id: num(line, "id", cols[0])?,
            r: num(line, "r", cols[1])?,
            d: num(line, "d", cols[2])?,
            p: num(line, "p", cols[3])?,
            w: cols.get(4).map_or(Ok(1), |s| num(line, "w", s))?,
        };
        if job.r < 0 || job.p < 1 {
            return Err(ScheduleError::Parse {
                line,
                reason: "need r >= 0 and p >= 1".into(),
            });
        }
        if !ids.insert(job.id) {
            return Err(ScheduleError::Parse {
                line,
                reason: format!("duplicate job id {}", job.id),
            });
        }
        jobs.push(job);
    }
    Ok(jobs)
}

pub fn format_jobs(jobs: &[Job]) -> String {
    jobs.iter()
        .map(|j| format!("{} {} {} {} {}\n", j.id, j.r, j.d, j.p, j.w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> Vec<Job> {
        [(1, 1, 3), (2, 2, 6), (3, 3, 4), (4, 8, 11)]
            .into_iter()
            .map(|(id, r, d)| Job::new(id, r, d, 2))
            .collect()
    }

    #[test]
    fn reproduces_lateness_table() {
        let res = schedule_metrics(&example(), &[1, 3, 2, 4]).unwrap();
        let by_id = |id| *res.get(id).unwrap();
        assert_eq!([1, 2, 3, 4].map(|i| by_id(i).completion), [3, 7, 5, 10]);
        assert_eq!([1, 2, 3, 4].map(|i| by_id(i).lateness), [0, 1, 1, -1]);
        assert_eq!([1, 2, 3, 4].map(|i| by_id(i).late), [false, true, true, false]);
        assert_eq!((res.c_max, res.l_max), (10, 1));
        assert_eq!(res.on_time_weight, 2);
        assert!(res.is_feasible(&example()));
    }

    #[test]
    fn single_and_empty() {
        let res = schedule_metrics(&[Job::new(7, 0, 5, 2)], &[7]).unwrap();
        assert_eq!((res.entries[0].completion, res.entries[0].lateness, res.entries[0].late), (2, -3, false));
        let empty = schedule_metrics(&example(), &[]).unwrap();
        assert_eq!((empty.c_max, empty.l_max, empty.entries.len()), (0, 0, 0));
    }

    #[test]
    fn order_errors() {
        assert_eq!(schedule_metrics(&example(), &[9]), Err(ScheduleError::UnknownJob(9)));
        assert_eq!(schedule_metrics(&example(), &[1, 1]), Err(ScheduleError::DuplicateJob(1)));
    }

    #[test]
    fn job_file_roundtrip() {
        let jobs = example();
        assert_eq!(parse_jobs(&format_jobs(&jobs)).unwrap(), jobs);
        let parsed = parse_jobs("# header\n1 0 5 2\n\n2 1 9 2 7 # heavy\n").unwrap();
        assert_eq!(parsed[0].w, 1);
        assert_eq!(parsed[1].w, 7);
        assert!(matches!(parse_jobs("1 0 5\n"), Err(ScheduleError::Parse { line: 1, .. })));
        assert!(matches!(parse_jobs("1 0 5 2\n1 0 5 2"), Err(ScheduleError::Parse { line: 2, .. })));
        assert!(matches!(parse_jobs("1 0 x 2"), Err(ScheduleError::Parse { line: 1, .. })));
        assert!(matches!(parse_jobs("1 0 5 0"), Err(ScheduleError::Parse { line: 1, .. })));
    }
}
