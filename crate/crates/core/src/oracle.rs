//! Reference implementations used to cross-check the event-driven engine.
//!
//! [`quantum_simulate`] re-derives the three scheduling rules on a fixed time
//! grid without sharing code with [`crate::policy`]. [`brute_force_optimum`]
//! searches all unit-step schedules of an integer instance.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::model::{Instance, JobId};
use crate::policy::PolicyKind;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumRun<T> {
    pub completions: BTreeMap<JobId, T>,
    pub total_flow: T,
}

struct QJob<T> {
    id: JobId,
    release: T,
    proc: T,
    done: T,
    emitted_at: Option<T>,
}

/// Time-stepped simulation with step `quantum`. Rates are chosen at each grid
/// point and held for one step; a job reaching its processing time inside a
/// step completes at the end of that step.
pub fn quantum_simulate<T: Scalar>(instance: &Instance<T>, kind: PolicyKind, quantum: &T) -> Result<QuantumRun<T>> {
    if *quantum <= T::zero() {
        return Err(Error::InvalidParameter("quantum must be positive".into()));
    }
    let alpha = instance.alpha().value().clone();
    let mut jobs: Vec<QJob<T>> = instance
        .jobs()
        .iter()
        .map(|j| {
            let proc = j.proc.known().cloned().ok_or(Error::Unresolved(j.id))?;
            Ok(QJob {
                id: j.id,
                release: j.release.clone(),
                proc,
                done: T::zero(),
                emitted_at: None,
            })
        })
        .collect::<Result<_>>()?;
    let mut completions = BTreeMap::new();
    let mut now = T::zero();
    while completions.len() < jobs.len() {
        let alive: Vec<usize> = (0..jobs.len())
            .filter(|&k| jobs[k].release <= now && !completions.contains_key(&jobs[k].id))
            .collect();
        if alive.is_empty() {
            let next = jobs
                .iter()
                .filter(|j| !completions.contains_key(&j.id))
                .map(|j| j.release.clone())
                .min()
                .expect("unfinished job exists");
            // jump to the first grid point at or after the release
            let steps = next / quantum.clone();
            let mut grid = steps.floor_int();
            if grid < steps {
                grid = grid + T::one();
            }
            let t = T::max_of(grid * quantum.clone(), now.clone());
            now = t;
            continue;
        }
        for &k in &alive {
            let j = &mut jobs[k];
            if j.emitted_at.is_none() && j.done >= alpha.clone() * j.proc.clone() {
                j.emitted_at = Some(now.clone());
            }
        }
        let remaining = |j: &QJob<T>| j.proc.clone() - j.done.clone();
        let run_srpt = |cands: &[usize], jobs: &[QJob<T>], by_emission: bool| -> usize {
            let mut best = cands[0];
            for &k in &cands[1..] {
                let (a, b) = (&jobs[k], &jobs[best]);
                let better = match remaining(a).cmp(&remaining(b)) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => {
                        if by_emission && a.emitted_at != b.emitted_at {
                            a.emitted_at > b.emitted_at
                        } else {
                            a.id < b.id
                        }
                    }
                };
                if better {
                    best = k;
                }
            }
            best
        };
        let least_elapsed = |cands: &[usize], jobs: &[QJob<T>]| -> Vec<usize> {
            let min = cands.iter().map(|&k| jobs[k].done.clone()).min().expect("nonempty");
            cands.iter().copied().filter(|&k| jobs[k].done == min).collect()
        };
        let chosen: Vec<usize> = match kind {
            PolicyKind::Srpt => vec![run_srpt(&alive, &jobs, false)],
            PolicyKind::Setf => least_elapsed(&alive, &jobs),
            PolicyKind::AlphaClairvoyant => {
                let (clair, non): (Vec<usize>, Vec<usize>) =
                    alive.iter().partition(|&&k| jobs[k].emitted_at.is_some());
                let srpt_branch = if clair.is_empty() {
                    false
                } else if non.is_empty() {
                    true
                } else {
                    let min_c = clair.iter().map(|&k| remaining(&jobs[k])).min().unwrap();
                    let min_n = non.iter().map(|&k| jobs[k].done.clone()).min().unwrap();
                    // p <= (1 - a) / a * y, multiplied through by a
                    alpha.clone() * min_c <= (T::one() - alpha.clone()) * min_n
                };
                if srpt_branch {
                    vec![run_srpt(&clair, &jobs, true)]
                } else {
                    least_elapsed(&non, &jobs)
                }
            }
        };
        let share = quantum.clone() / T::from_int(chosen.len() as i64);
        let end = now.clone() + quantum.clone();
        for k in chosen {
            let j = &mut jobs[k];
            let next = j.done.clone() + share.clone();
            if next >= j.proc {
                j.done = j.proc.clone();
                completions.insert(j.id, end.clone());
            } else {
                j.done = next;
            }
        }
        now = end;
    }
    let total_flow = jobs
        .iter()
        .fold(T::zero(), |acc, j| acc + completions[&j.id].clone() - j.release.clone());
    Ok(QuantumRun { completions, total_flow })
}

/// Minimum total flow time over all preemptive schedules of an instance with
/// integer releases and processing times, by search over unit time steps.
///
/// Jobs with equal remaining work are interchangeable, so states are keyed by
/// the sorted remaining work of released jobs; after the last release the
/// clock no longer matters.
pub fn brute_force_optimum<T: Scalar>(instance: &Instance<T>) -> Result<T> {
    let mut jobs: Vec<(i64, i64)> = Vec::new();
    for j in instance.jobs() {
        let r = j.release.to_i64();
        let p = j.proc.known().and_then(|p| p.to_i64());
        match (r, p) {
            (Some(r), Some(p)) => jobs.push((r, p)),
            _ => return Err(Error::InvalidParameter("brute force needs integer data".into())),
        }
    }
    jobs.sort();
    let last_release = jobs.iter().map(|j| j.0).max().unwrap_or(0);
    let mut memo = HashMap::new();
    let flow = search(&jobs, last_release, 0, 0, Vec::new(), &mut memo);
    Ok(T::from_int(flow))
}

type Memo = HashMap<(i64, Vec<i64>), i64>;

/// Least flow still to accrue from time `t` with `alive` remaining work of
/// released unfinished jobs and `next` the index of the first unreleased job.
fn search(jobs: &[(i64, i64)], last_release: i64, t: i64, next: usize, alive: Vec<i64>, memo: &mut Memo) -> i64 {
    let mut next = next;
    let mut alive = alive;
    while next < jobs.len() && jobs[next].0 <= t {
        alive.push(jobs[next].1);
        next += 1;
    }
    if alive.is_empty() {
        if next == jobs.len() {
            return 0;
        }
        let r = jobs[next].0;
        return search(jobs, last_release, r, next, alive, memo);
    }
    alive.sort_unstable();
    let key = (t.min(last_release + 1), alive.clone());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = i64::MAX;
    let mut k = 0;
    while k < alive.len() {
        let mut after = alive.clone();
        after[k] -= 1;
        if after[k] == 0 {
            after.remove(k);
        }
        let cost = alive.len() as i64 + search(jobs, last_release, t + 1, next, after, memo);
        best = best.min(cost);
        // equal remaining work gives the same successor state
        let v = alive[k];
        while k < alive.len() && alive[k] == v {
            k += 1;
        }
    }
    memo.insert(key, best);
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn inst(alpha: Rational, pairs: &[(i64, i64)]) -> Instance<Rational> {
        let pairs: Vec<_> = pairs.iter().map(|&(r, p)| (q(r, 1), q(p, 1))).collect();
        Instance::from_pairs(alpha, &pairs).unwrap()
    }

    #[test]
    fn quantum_pair_setf() {
        let run = quantum_simulate(&inst(q(1, 2), &[(0, 2), (0, 2)]), PolicyKind::Setf, &q(1, 64)).unwrap();
        assert_eq!(run.total_flow, q(8, 1));
    }

    #[test]
    fn quantum_alpha_example() {
        let run = quantum_simulate(&inst(q(1, 2), &[(0, 4), (0, 2)]), PolicyKind::AlphaClairvoyant, &q(1, 64)).unwrap();
        assert_eq!(run.completions[&JobId(2)], q(3, 1));
        assert_eq!(run.completions[&JobId(1)], q(6, 1));
    }

    #[test]
    fn quantum_idle_gap() {
        let run = quantum_simulate(&inst(q(1, 2), &[(0, 1), (5, 1)]), PolicyKind::Srpt, &q(1, 4)).unwrap();
        assert_eq!(run.total_flow, q(2, 1));
    }

    #[test]
    fn brute_force_small() {
        assert_eq!(brute_force_optimum(&inst(q(1, 2), &[(0, 3), (1, 1)])).unwrap(), q(5, 1));
        assert_eq!(brute_force_optimum(&inst(q(1, 2), &[(0, 2), (0, 2)])).unwrap(), q(6, 1));
        assert_eq!(brute_force_optimum(&inst(q(1, 2), &[(3, 2)])).unwrap(), q(2, 1));
        let frac = Instance::from_pairs(q(1, 2), &[(q(0, 1), q(1, 2))]).unwrap();
        assert!(brute_force_optimum(&frac).is_err());
    }
}
