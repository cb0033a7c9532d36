//! Schedule traces and the quantities derived from them.
//!
//! A [`ScheduleTrace`] is a tiling of `[0, end]` by segments of constant rate.
//! Every other schedule quantity (elapsed work, remaining work, the
//! alive / non-clairvoyant / clairvoyant partition, lifetimes, completion and
//! emission times) is computed from the segments.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{Instance, JobId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    /// Positive rates sorted by job id. Empty for idle time.
    pub rates: Vec<(JobId, T)>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(start: T, end: T, mut rates: Vec<(JobId, T)>) -> Self {
        rates.sort_by_key(|(id, _)| *id);
        Segment { start, end, rates }
    }

    pub fn length(&self) -> T {
        self.end.clone() - self.start.clone()
    }

    pub fn rate_of(&self, id: JobId) -> Option<&T> {
        self.rates
            .binary_search_by_key(&id, |(j, _)| *j)
            .ok()
            .map(|k| &self.rates[k].1)
    }

    pub fn total_rate(&self) -> T {
        self.rates.iter().fold(T::zero(), |acc, (_, r)| acc + r.clone())
    }

    pub fn is_idle(&self) -> bool {
        self.rates.is_empty()
    }
}

/// The alive jobs at one instant split by clairvoyance, plus the finished ones.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub alive: BTreeSet<JobId>,
    pub non_clairvoyant: BTreeSet<JobId>,
    pub clairvoyant: BTreeSet<JobId>,
    pub completed: BTreeSet<JobId>,
}

/// Elapsed work of every job at one instant, aligned with `instance.jobs()`.
#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub time: T,
    pub elapsed: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleTrace<T> {
    instance: Instance<T>,
    segments: Vec<Segment<T>>,
    completions: BTreeMap<JobId, T>,
    emissions: BTreeMap<JobId, T>,
    commits: BTreeMap<JobId, T>,
}

impl<T: Scalar> ScheduleTrace<T> {
    /// Builds a canonical trace from raw segments and validates feasibility.
    ///
    /// `commits` records, for jobs whose processing time was chosen during the
    /// run, the instant it was chosen; before that instant the value is unknown.
    pub fn from_segments(
        instance: Instance<T>,
        segments: Vec<Segment<T>>,
        commits: BTreeMap<JobId, T>,
    ) -> Result<Self> {
        if !instance.is_resolved() {
            return Err(Error::InvalidTrace(
                "trace instance has unresolved processing times".into(),
            ));
        }
        let segments = canonicalize(segments)?;
        let alpha = instance.alpha().value().clone();
        let n = instance.len();
        let procs: Vec<T> = instance
            .jobs()
            .iter()
            .map(|j| j.proc.known().cloned().expect("resolved"))
            .collect();
        let mut elapsed = vec![T::zero(); n];
        let mut completions = BTreeMap::new();
        let mut emissions = BTreeMap::new();

        let mut expect_start = T::zero();
        for seg in &segments {
            if seg.start != expect_start {
                return Err(Error::InvalidTrace(format!(
                    "segments must tile from 0 without gaps; found start {} after {}",
                    seg.start, expect_start
                )));
            }
            if seg.end <= seg.start {
                return Err(Error::InvalidTrace(format!(
                    "empty or reversed segment [{}, {}]",
                    seg.start, seg.end
                )));
            }
            if seg.total_rate() > T::one() {
                return Err(Error::InvalidTrace(format!(
                    "total rate exceeds 1 on [{}, {}]",
                    seg.start, seg.end
                )));
            }
            // jobs reaching zero-threshold emission at release
            for (k, job) in instance.jobs().iter().enumerate() {
                if job.release <= seg.start
                    && !emissions.contains_key(&job.id)
                    && elapsed[k] == alpha.clone() * procs[k].clone()
                {
                    emissions.insert(job.id, job.release.clone());
                }
            }
            let len = seg.length();
            for (id, rate) in &seg.rates {
                let k = instance.index_of(*id)?;
                let job = &instance.jobs()[k];
                if *rate <= T::zero() {
                    return Err(Error::InvalidTrace(format!("non-positive rate for job {id}")));
                }
                if job.release > seg.start {
                    return Err(Error::InvalidTrace(format!(
                        "job {id} processed at {} before its release {}",
                        seg.start, job.release
                    )));
                }
                if elapsed[k] >= procs[k] {
                    return Err(Error::InvalidTrace(format!(
                        "job {id} processed at {} after completion",
                        seg.start
                    )));
                }
                let threshold = alpha.clone() * procs[k].clone();
                let after = elapsed[k].clone() + rate.clone() * len.clone();
                if !emissions.contains_key(id) && elapsed[k] < threshold && after >= threshold {
                    let s = seg.start.clone() + (threshold - elapsed[k].clone()) / rate.clone();
                    emissions.insert(*id, s);
                }
                if after > procs[k] {
                    return Err(Error::InvalidTrace(format!(
                        "job {id} receives more than its processing time by {}",
                        seg.end
                    )));
                }
                if after == procs[k] {
                    completions.insert(*id, seg.end.clone());
                }
                elapsed[k] = after;
            }
            expect_start = seg.end.clone();
        }
        // zero-threshold emissions of jobs released at the very end
        for (k, job) in instance.jobs().iter().enumerate() {
            if job.release <= expect_start
                && !emissions.contains_key(&job.id)
                && elapsed[k] == alpha.clone() * procs[k].clone()
            {
                emissions.insert(job.id, job.release.clone());
            }
        }
        for (id, at) in &commits {
            instance.job(*id)?;
            if *at < T::zero() {
                return Err(Error::InvalidTrace(format!("commit of job {id} at negative time")));
            }
        }
        Ok(ScheduleTrace {
            instance,
            segments,
            completions,
            emissions,
            commits,
        })
    }

    pub fn instance(&self) -> &Instance<T> {
        &self.instance
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    pub fn completions(&self) -> &BTreeMap<JobId, T> {
        &self.completions
    }

    pub fn emissions(&self) -> &BTreeMap<JobId, T> {
        &self.emissions
    }

    pub fn commits(&self) -> &BTreeMap<JobId, T> {
        &self.commits
    }

    pub fn completion(&self, id: JobId) -> Option<&T> {
        self.completions.get(&id)
    }

    pub fn emission(&self, id: JobId) -> Option<&T> {
        self.emissions.get(&id)
    }

    /// End of the traced window (the last segment end, 0 for an empty trace).
    pub fn end(&self) -> T {
        self.segments.last().map(|s| s.end.clone()).unwrap_or_else(T::zero)
    }

    pub fn makespan(&self) -> T {
        self.end()
    }

    pub fn is_complete(&self) -> bool {
        self.completions.len() == self.instance.len()
    }

    pub fn proc(&self, id: JobId) -> Result<&T> {
        Ok(self.instance.job(id)?.proc.known().expect("resolved"))
    }

    pub fn release(&self, id: JobId) -> Result<&T> {
        Ok(&self.instance.job(id)?.release)
    }

    fn check_time(t: &T) -> Result<()> {
        if *t < T::zero() {
            return Err(Error::InvalidParameter(format!("negative time {t}")));
        }
        Ok(())
    }

    /// `y_j(t)`: work received by `j` during `[0, t]`.
    pub fn elapsed_work(&self, id: JobId, t: &T) -> Result<T> {
        Self::check_time(t)?;
        self.instance.job(id)?;
        let mut y = T::zero();
        for seg in &self.segments {
            if seg.start >= *t {
                break;
            }
            if let Some(rate) = seg.rate_of(id) {
                let hi = T::min_of(seg.end.clone(), t.clone());
                y = y + rate.clone() * (hi - seg.start.clone());
            }
        }
        Ok(y)
    }

    pub fn snapshot(&self, t: &T) -> Result<Snapshot<T>> {
        Self::check_time(t)?;
        let mut elapsed = vec![T::zero(); self.instance.len()];
        let index: BTreeMap<JobId, usize> = self
            .instance
            .jobs()
            .iter()
            .enumerate()
            .map(|(k, j)| (j.id, k))
            .collect();
        for seg in &self.segments {
            if seg.start >= *t {
                break;
            }
            let hi = T::min_of(seg.end.clone(), t.clone());
            let len = hi - seg.start.clone();
            for (id, rate) in &seg.rates {
                let k = index[id];
                elapsed[k] = elapsed[k].clone() + rate.clone() * len.clone();
            }
        }
        Ok(Snapshot {
            time: t.clone(),
            elapsed,
        })
    }

    pub fn is_committed_at(&self, id: JobId, t: &T) -> bool {
        self.commits.get(&id).is_none_or(|at| at <= t)
    }

    /// `p_j(t) = p_j - y_j(t)`; unavailable before an adversary committed `p_j`.
    pub fn remaining(&self, id: JobId, t: &T) -> Result<T> {
        let y = self.elapsed_work(id, t)?;
        if !self.is_committed_at(id, t) {
            return Err(Error::Unresolved(id));
        }
        Ok(self.proc(id)?.clone() - y)
    }

    /// `q_j([a, b]) = y_j(b) - y_j(a)`.
    pub fn interval_work(&self, id: JobId, a: &T, b: &T) -> Result<T> {
        if a > b {
            return Err(Error::InvalidParameter(format!("reversed interval [{a}, {b}]")));
        }
        Ok(self.elapsed_work(id, b)? - self.elapsed_work(id, a)?)
    }

    pub fn is_alive(&self, id: JobId, t: &T) -> Result<bool> {
        let job = self.instance.job(id)?;
        Ok(job.release <= *t && self.completions.get(&id).is_none_or(|c| t < c))
    }

    /// `A(t)`, `N(t)`, `C(t)` and `D(t)`.
    ///
    /// A job sitting exactly at `y = alpha * p` is non-clairvoyant; jobs whose
    /// processing time is not yet committed at `t` are non-clairvoyant too.
    pub fn partition(&self, t: &T) -> Result<Partition> {
        let snap = self.snapshot(t)?;
        Ok(self.partition_from(&snap))
    }

    pub fn partition_from(&self, snap: &Snapshot<T>) -> Partition {
        let t = &snap.time;
        let alpha = self.instance.alpha().value();
        let mut part = Partition::default();
        for (k, job) in self.instance.jobs().iter().enumerate() {
            if job.release > *t {
                continue;
            }
            match self.completions.get(&job.id) {
                Some(c) if c <= t => {
                    part.completed.insert(job.id);
                    continue;
                }
                _ => {}
            }
            part.alive.insert(job.id);
            let p = job.proc.known().expect("resolved");
            if !self.is_committed_at(job.id, t) || snap.elapsed[k] <= alpha.clone() * p.clone() {
                part.non_clairvoyant.insert(job.id);
            } else {
                part.clairvoyant.insert(job.id);
            }
        }
        part
    }

    /// Lifetime `[r_j, min(C_j, t)]` of one job; `None` if released after `t`.
    pub fn job_lifetime(&self, id: JobId, t: &T) -> Result<Option<(T, T)>> {
        let job = self.instance.job(id)?;
        if job.release > *t {
            return Ok(None);
        }
        let end = match self.completions.get(&id) {
            Some(c) => T::min_of(c.clone(), t.clone()),
            None => t.clone(),
        };
        Ok(Some((job.release.clone(), end)))
    }

    /// Union of lifetimes of `jobs`, as maximal disjoint closed intervals.
    pub fn lifetime(&self, jobs: &BTreeSet<JobId>, t: &T) -> Result<Vec<(T, T)>> {
        if jobs.is_empty() {
            return Err(Error::EmptyJobSet);
        }
        let mut intervals = Vec::new();
        for id in jobs {
            if let Some(iv) = self.job_lifetime(*id, t)? {
                intervals.push(iv);
            }
        }
        intervals.sort();
        let mut merged: Vec<(T, T)> = Vec::new();
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        Ok(merged)
    }

    /// Every instant at which something happens: segment boundaries,
    /// releases, completions, emissions and commits. Sorted, deduplicated.
    pub fn event_times(&self) -> Vec<T> {
        let mut times = BTreeSet::new();
        times.insert(T::zero());
        for seg in &self.segments {
            times.insert(seg.start.clone());
            times.insert(seg.end.clone());
        }
        for job in self.instance.jobs() {
            times.insert(job.release.clone());
        }
        times.extend(self.completions.values().cloned());
        times.extend(self.emissions.values().cloned());
        times.extend(self.commits.values().cloned());
        times.into_iter().collect()
    }

    /// Event times plus midpoints of consecutive event times.
    pub fn check_times(&self) -> Vec<T> {
        let events = self.event_times();
        let mut out = Vec::with_capacity(events.len() * 2);
        for (k, t) in events.iter().enumerate() {
            if k > 0 {
                out.push((events[k - 1].clone() + t.clone()) * T::half());
            }
            out.push(t.clone());
        }
        out
    }

    /// A copy with one segment's rate for one job replaced (no validation
    /// beyond what [`ScheduleTrace::from_segments`] does). Used to build
    /// corrupted traces in negative tests.
    pub fn with_segments(&self, segments: Vec<Segment<T>>) -> Result<Self> {
        ScheduleTrace::from_segments(self.instance.clone(), segments, self.commits.clone())
    }
}

fn canonicalize<T: Scalar>(segments: Vec<Segment<T>>) -> Result<Vec<Segment<T>>> {
    let mut out: Vec<Segment<T>> = Vec::with_capacity(segments.len());
    for seg in segments {
        let mut rates = seg.rates;
        rates.sort_by_key(|(id, _)| *id);
        for pair in rates.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidTrace(format!(
                    "job {} rated twice in one segment",
                    pair[0].0
                )));
            }
        }
        match out.last_mut() {
            Some(last) if last.rates == rates && last.end == seg.start => {
                last.end = seg.end;
            }
            _ => out.push(Segment {
                start: seg.start,
                end: seg.end,
                rates,
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Instance;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn single() -> ScheduleTrace<Rational> {
        let inst = Instance::from_pairs(q(1, 2), &[(q(0, 1), q(1, 1))]).unwrap();
        let seg = Segment::new(q(0, 1), q(1, 1), vec![(JobId(1), q(1, 1))]);
        ScheduleTrace::from_segments(inst, vec![seg], BTreeMap::new()).unwrap()
    }

    #[test]
    fn elapsed_on_single_job() {
        let tr = single();
        assert_eq!(tr.elapsed_work(JobId(1), &q(1, 2)).unwrap(), q(1, 2));
        assert_eq!(tr.elapsed_work(JobId(1), &q(0, 1)).unwrap(), q(0, 1));
        assert_eq!(tr.elapsed_work(JobId(1), &q(5, 1)).unwrap(), q(1, 1));
        assert_eq!(tr.remaining(JobId(1), &q(3, 1)).unwrap(), q(0, 1));
        assert_eq!(tr.completion(JobId(1)), Some(&q(1, 1)));
        assert_eq!(tr.emission(JobId(1)), Some(&q(1, 2)));
        assert!(matches!(tr.elapsed_work(JobId(9), &q(1, 1)), Err(Error::UnknownJob(_))));
        assert!(tr.elapsed_work(JobId(1), &q(-1, 1)).is_err());
    }

    #[test]
    fn interval_work_disjoint_is_zero() {
        let tr = single();
        assert_eq!(tr.interval_work(JobId(1), &q(0, 1), &q(1, 1)).unwrap(), q(1, 1));
        assert_eq!(tr.interval_work(JobId(1), &q(2, 1), &q(3, 1)).unwrap(), q(0, 1));
    }

    #[test]
    fn partition_before_release_is_empty() {
        let inst = Instance::from_pairs(q(1, 2), &[(q(1, 1), q(1, 1))]).unwrap();
        let segs = vec![
            Segment::new(q(0, 1), q(1, 1), vec![]),
            Segment::new(q(1, 1), q(2, 1), vec![(JobId(1), q(1, 1))]),
        ];
        let tr = ScheduleTrace::from_segments(inst, segs, BTreeMap::new()).unwrap();
        let p = tr.partition(&q(1, 2)).unwrap();
        assert!(p.alive.is_empty() && p.non_clairvoyant.is_empty());
        assert!(p.clairvoyant.is_empty() && p.completed.is_empty());
        let p = tr.partition(&q(5, 4)).unwrap();
        assert_eq!(p.non_clairvoyant.len(), 1);
        // boundary y = alpha p is still non-clairvoyant
        let p = tr.partition(&q(3, 2)).unwrap();
        assert_eq!(p.non_clairvoyant.len(), 1);
        let p = tr.partition(&q(7, 4)).unwrap();
        assert_eq!(p.clairvoyant.len(), 1);
        let p = tr.partition(&q(2, 1)).unwrap();
        assert_eq!(p.completed.len(), 1);
    }

    #[test]
    fn lifetimes() {
        let inst =
            Instance::from_pairs(q(1, 2), &[(q(0, 1), q(1, 1)), (q(2, 1), q(1, 1))]).unwrap();
        let segs = vec![
            Segment::new(q(0, 1), q(1, 1), vec![(JobId(1), q(1, 1))]),
            Segment::new(q(1, 1), q(2, 1), vec![]),
            Segment::new(q(2, 1), q(3, 1), vec![(JobId(2), q(1, 1))]),
        ];
        let tr = ScheduleTrace::from_segments(inst, segs, BTreeMap::new()).unwrap();
        let both: BTreeSet<_> = [JobId(1), JobId(2)].into_iter().collect();
        assert_eq!(
            tr.lifetime(&both, &q(10, 1)).unwrap(),
            vec![(q(0, 1), q(1, 1)), (q(2, 1), q(3, 1))]
        );
        assert!(matches!(tr.lifetime(&BTreeSet::new(), &q(1, 1)), Err(Error::EmptyJobSet)));
    }

    #[test]
    fn lifetime_single_job() {
        let inst = Instance::from_pairs(q(1, 2), &[(q(1, 1), q(2, 1))]).unwrap();
        let segs = vec![
            Segment::new(q(0, 1), q(1, 1), vec![]),
            Segment::new(q(1, 1), q(3, 1), vec![(JobId(1), q(1, 1))]),
        ];
        let tr = ScheduleTrace::from_segments(inst, segs, BTreeMap::new()).unwrap();
        let one: BTreeSet<_> = [JobId(1)].into_iter().collect();
        assert_eq!(tr.lifetime(&one, &q(10, 1)).unwrap(), vec![(q(1, 1), q(3, 1))]);
    }

    #[test]
    fn rejects_infeasible() {
        let inst = Instance::from_pairs(q(1, 2), &[(q(0, 1), q(1, 1))]).unwrap();
        let over = vec![Segment::new(q(0, 1), q(2, 1), vec![(JobId(1), q(1, 1))])];
        assert!(ScheduleTrace::from_segments(inst.clone(), over, BTreeMap::new()).is_err());
        let gap = vec![Segment::new(q(1, 1), q(2, 1), vec![(JobId(1), q(1, 1))])];
        assert!(ScheduleTrace::from_segments(inst.clone(), gap, BTreeMap::new()).is_err());
        let too_fast = vec![Segment::new(q(0, 1), q(1, 2), vec![(JobId(1), q(2, 1))])];
        assert!(ScheduleTrace::from_segments(inst, too_fast, BTreeMap::new()).is_err());
    }

    #[test]
    fn merges_identical_neighbours() {
        let inst = Instance::from_pairs(q(1, 2), &[(q(0, 1), q(2, 1))]).unwrap();
        let segs = vec![
            Segment::new(q(0, 1), q(1, 1), vec![(JobId(1), q(1, 1))]),
            Segment::new(q(1, 1), q(2, 1), vec![(JobId(1), q(1, 1))]),
        ];
        let tr = ScheduleTrace::from_segments(inst, segs, BTreeMap::new()).unwrap();
        assert_eq!(tr.segments().len(), 1);
        // the emission at 1 stays visible as an event time
        assert!(tr.event_times().contains(&q(1, 1)));
    }
}
