//! Flow time, alive counts and competitive ratios.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::JobId;
use crate::scalar::Scalar;
use crate::trace::ScheduleTrace;

/// One step of the alive-count function: `|A(t)| = count` on `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliveStep<T> {
    pub start: T,
    pub end: T,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsReport<T> {
    pub total_flow: T,
    /// `C_j - r_j`, or the flow accrued up to the trace end for unfinished jobs.
    pub per_job_flow: BTreeMap<JobId, T>,
    pub makespan: T,
    pub delta_curve: Vec<AliveStep<T>>,
    /// `false` when some job is unfinished at the end of the trace.
    pub complete: bool,
}

impl<T: Scalar> MetricsReport<T> {
    pub fn from_trace(trace: &ScheduleTrace<T>) -> Self {
        let end = trace.end();
        let mut per_job_flow = BTreeMap::new();
        for job in trace.instance().jobs() {
            let until = trace.completion(job.id).cloned().unwrap_or_else(|| end.clone());
            let flow = T::max_of(until - job.release.clone(), T::zero());
            per_job_flow.insert(job.id, flow);
        }
        let total_flow = per_job_flow.values().fold(T::zero(), |acc, f| acc + f.clone());
        MetricsReport {
            total_flow,
            per_job_flow,
            makespan: end,
            delta_curve: alive_curve(trace),
            complete: trace.is_complete(),
        }
    }

    /// `∫ |A(t)| dt` over the curve.
    pub fn integrated_alive(&self) -> T {
        self.delta_curve.iter().fold(T::zero(), |acc, s| {
            acc + T::from_int(s.count as i64) * (s.end.clone() - s.start.clone())
        })
    }

    pub fn to_json(&self) -> Value {
        let per_job: serde_json::Map<String, Value> = self
            .per_job_flow
            .iter()
            .map(|(id, f)| (id.0.to_string(), Value::String(f.to_ratio_string())))
            .collect();
        let curve: Vec<Value> = self
            .delta_curve
            .iter()
            .map(|s| json!([s.start.to_ratio_string(), s.end.to_ratio_string(), s.count]))
            .collect();
        json!({
            "total_flow": self.total_flow.to_ratio_string(),
            "per_job_flow": per_job,
            "makespan": self.makespan.to_ratio_string(),
            "complete": self.complete,
            "delta_curve": curve,
        })
    }
}

/// `|A(t)|` as a step function over `[0, end]`, constant between event times.
pub fn alive_curve<T: Scalar>(trace: &ScheduleTrace<T>) -> Vec<AliveStep<T>> {
    let end = trace.end();
    let times: Vec<T> = trace.event_times().into_iter().filter(|t| *t <= end).collect();
    let mut steps: Vec<AliveStep<T>> = Vec::new();
    for pair in times.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let count = trace
            .instance()
            .jobs()
            .iter()
            .filter(|j| j.release <= *a && trace.completion(j.id).is_none_or(|c| c > a))
            .count();
        match steps.last_mut() {
            Some(last) if last.count == count => last.end = b.clone(),
            _ => steps.push(AliveStep {
                start: a.clone(),
                end: b.clone(),
                count,
            }),
        }
    }
    steps
}

/// `Σ_j (C_j - r_j)` together with whether every job finished.
pub fn total_flow_time<T: Scalar>(trace: &ScheduleTrace<T>) -> (T, bool) {
    let report = MetricsReport::from_trace(trace);
    (report.total_flow, report.complete)
}

/// Number of alive jobs at `t`; with a threshold, only those whose remaining
/// work is at least the threshold.
pub fn delta<T: Scalar>(trace: &ScheduleTrace<T>, t: &T, min_remaining: Option<&T>) -> Result<usize> {
    let part = trace.partition(t)?;
    match min_remaining {
        None => Ok(part.alive.len()),
        Some(threshold) => {
            let mut count = 0;
            for id in part.alive {
                if trace.remaining(id, t)? >= *threshold {
                    count += 1;
                }
            }
            Ok(count)
        }
    }
}

/// `alg / opt` on total flow time.
pub fn ratio<T: Scalar>(alg: &MetricsReport<T>, opt: &MetricsReport<T>) -> Result<T> {
    if opt.total_flow.is_zero() {
        return Err(Error::InvalidParameter("optimal flow time is zero".into()));
    }
    Ok(alg.total_flow.clone() / opt.total_flow.clone())
}

/// Whether `Σ_j (C_j - r_j) = ∫ |A(t)| dt` holds exactly.
pub fn flow_identity_holds<T: Scalar>(trace: &ScheduleTrace<T>) -> bool {
    let report = MetricsReport::from_trace(trace);
    report.total_flow == report.integrated_alive()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::BuiltinPolicy;
    use crate::{simulate, Instance, Rational};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn run(pairs: &[(i64, i64)], policy: BuiltinPolicy<Rational>) -> ScheduleTrace<Rational> {
        let pairs: Vec<_> = pairs.iter().map(|&(r, p)| (q(r, 1), q(p, 1))).collect();
        let inst = Instance::from_pairs(q(1, 2), &pairs).unwrap();
        simulate(&inst, &policy, None).unwrap().0
    }

    #[test]
    fn pair_flows() {
        let setf = MetricsReport::from_trace(&run(&[(0, 2), (0, 2)], BuiltinPolicy::setf()));
        let srpt = MetricsReport::from_trace(&run(&[(0, 2), (0, 2)], BuiltinPolicy::srpt()));
        assert_eq!(setf.total_flow, q(8, 1));
        assert_eq!(srpt.total_flow, q(6, 1));
        assert_eq!(ratio(&setf, &srpt).unwrap(), q(4, 3));
        assert_eq!(setf.integrated_alive(), setf.total_flow);
    }

    #[test]
    fn delta_counts() {
        let trace = run(&[(0, 4), (0, 2)], BuiltinPolicy::srpt());
        assert_eq!(delta(&trace, &q(1, 1), None).unwrap(), 2);
        assert_eq!(delta(&trace, &q(1, 1), Some(&q(2, 1))).unwrap(), 1);
        assert_eq!(delta(&trace, &q(100, 1), None).unwrap(), 0);
        assert_eq!(delta(&trace, &q(1, 1), Some(&q(50, 1))).unwrap(), 0);
    }

    #[test]
    fn truncated_run_accrues_flow() {
        let pairs = vec![(q(0, 1), q(4, 1)), (q(1, 1), q(1, 1))];
        let inst = Instance::from_pairs(q(1, 2), &pairs).unwrap();
        let (trace, _) = simulate(&inst, &BuiltinPolicy::srpt(), Some(q(3, 1))).unwrap();
        let report = MetricsReport::from_trace(&trace);
        assert!(!report.complete);
        // job 2 finishes at 2, job 1 has been alive for 3
        assert_eq!(report.total_flow, q(4, 1));
        assert!(flow_identity_holds(&trace));
    }
}
