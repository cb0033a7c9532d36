//! Instances: jobs, the clairvoyance parameter and optional adversary scripts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JobId(pub u32);

impl fmt::Display for JobId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Fraction of a job's work after which its processing time is revealed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Alpha<T>(T);

impl<T: Scalar> Alpha<T> {
    pub fn new(value: T) -> Result<Self> {
        if value < T::zero() || value > T::one() {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in [0, 1], got {value}"
            )));
        }
        Ok(Alpha(value))
    }

    pub fn value(&self) -> &T {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// `(1 - alpha) / alpha`, the factor of the mode threshold. `None` at alpha = 0.
    pub fn threshold_factor(&self) -> Option<T> {
        if self.0.is_zero() {
            None
        } else {
            Some((T::one() - self.0.clone()) / self.0.clone())
        }
    }

    /// `1 / (1 - alpha)`. `None` at alpha = 1.
    pub fn inverse_slack(&self) -> Option<T> {
        if self.0.is_one() {
            None
        } else {
            Some(T::one() / (T::one() - self.0.clone()))
        }
    }
}

pub type TriggerId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcTime<T> {
    Known(T),
    /// Committed by the adversary when the named trigger fires.
    Deferred(TriggerId),
}

impl<T> ProcTime<T> {
    pub fn known(&self) -> Option<&T> {
        match self {
            ProcTime::Known(p) => Some(p),
            ProcTime::Deferred(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job<T> {
    pub id: JobId,
    pub release: T,
    pub proc: ProcTime<T>,
}

impl<T: Scalar> Job<T> {
    pub fn new(id: u32, release: T, proc: T) -> Self {
        Job {
            id: JobId(id),
            release,
            proc: ProcTime::Known(proc),
        }
    }

    pub fn deferred(id: u32, release: T, trigger: TriggerId) -> Self {
        Job {
            id: JobId(id),
            release,
            proc: ProcTime::Deferred(trigger),
        }
    }
}

/// How a trigger chooses processing times for the jobs deferred to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CommitRule<T> {
    /// Commit the listed values verbatim.
    Fixed(BTreeMap<JobId, T>),
    /// `p = y / alpha + additive` for every deferred job, `y` being its
    /// elapsed work at the firing time.
    ScaledProgress { additive: T },
    /// Exactly two jobs: the one with more elapsed work gets `2 * base`,
    /// the other `base`. Equal progress gives the larger value to the lower id.
    LeaderDouble { base: T },
}

impl<T> CommitRule<T> {
    pub fn name(&self) -> &'static str {
        match self {
            CommitRule::Fixed(_) => "fixed",
            CommitRule::ScaledProgress { .. } => "scaled_progress",
            CommitRule::LeaderDouble { .. } => "leader_double",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trigger<T> {
    pub id: TriggerId,
    pub fire_at: T,
    pub rule: CommitRule<T>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AdversaryScript<T> {
    pub triggers: Vec<Trigger<T>>,
}

impl<T: Scalar> AdversaryScript<T> {
    pub fn trigger(&self, id: TriggerId) -> Option<&Trigger<T>> {
        self.triggers.iter().find(|t| t.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance<T> {
    jobs: Vec<Job<T>>,
    alpha: Alpha<T>,
    adversary: Option<AdversaryScript<T>>,
}

impl<T: Scalar> Instance<T> {
    pub fn new(
        mut jobs: Vec<Job<T>>,
        alpha: Alpha<T>,
        adversary: Option<AdversaryScript<T>>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for job in &jobs {
            if !seen.insert(job.id) {
                return Err(Error::InvalidInstance(format!("duplicate job id {}", job.id)));
            }
            if job.release < T::zero() {
                return Err(Error::InvalidInstance(format!(
                    "job {} has negative release {}",
                    job.id, job.release
                )));
            }
            match &job.proc {
                ProcTime::Known(p) if *p <= T::zero() => {
                    return Err(Error::InvalidInstance(format!(
                        "job {} has non-positive processing time {p}",
                        job.id
                    )));
                }
                ProcTime::Deferred(trigger) => {
                    let found = adversary.as_ref().and_then(|a| a.trigger(*trigger));
                    match found {
                        None => {
                            return Err(Error::InvalidInstance(format!(
                                "job {} is deferred to missing trigger {trigger}",
                                job.id
                            )))
                        }
                        Some(t) if t.fire_at < job.release => {
                            return Err(Error::InvalidInstance(format!(
                                "trigger {trigger} fires before job {} is released",
                                job.id
                            )))
                        }
                        Some(_) => {}
                    }
                }
                ProcTime::Known(_) => {}
            }
        }
        if let Some(script) = &adversary {
            let mut ids = BTreeSet::new();
            for pair in script.triggers.windows(2) {
                if pair[1].fire_at <= pair[0].fire_at {
                    return Err(Error::InvalidInstance(
                        "trigger fire times must be strictly increasing".into(),
                    ));
                }
            }
            for t in &script.triggers {
                if !ids.insert(t.id) {
                    return Err(Error::InvalidInstance(format!("duplicate trigger id {}", t.id)));
                }
                if t.fire_at < T::zero() {
                    return Err(Error::InvalidInstance(format!(
                        "trigger {} fires at negative time",
                        t.id
                    )));
                }
            }
        }
        jobs.sort_by(|a, b| a.release.cmp(&b.release).then(a.id.cmp(&b.id)));
        Ok(Instance {
            jobs,
            alpha,
            adversary,
        })
    }

    /// Convenience constructor for fully known instances: `(release, proc)` pairs,
    /// ids assigned `1..=n` in the given order.
    pub fn from_pairs(alpha: T, pairs: &[(T, T)]) -> Result<Self> {
        let jobs = pairs
            .iter()
            .enumerate()
            .map(|(k, (r, p))| Job::new(k as u32 + 1, r.clone(), p.clone()))
            .collect();
        Instance::new(jobs, Alpha::new(alpha)?, None)
    }

    pub fn jobs(&self) -> &[Job<T>] {
        &self.jobs
    }

    pub fn alpha(&self) -> &Alpha<T> {
        &self.alpha
    }

    pub fn adversary(&self) -> Option<&AdversaryScript<T>> {
        self.adversary.as_ref()
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn job(&self, id: JobId) -> Result<&Job<T>> {
        self.jobs
            .iter()
            .find(|j| j.id == id)
            .ok_or(Error::UnknownJob(id))
    }

    pub fn index_of(&self, id: JobId) -> Result<usize> {
        self.jobs
            .iter()
            .position(|j| j.id == id)
            .ok_or(Error::UnknownJob(id))
    }

    pub fn is_resolved(&self) -> bool {
        self.jobs.iter().all(|j| j.proc.known().is_some())
    }

    pub fn with_alpha(&self, alpha: Alpha<T>) -> Self {
        Instance {
            jobs: self.jobs.clone(),
            alpha,
            adversary: self.adversary.clone(),
        }
    }

    /// Replaces deferred processing times by committed values and drops the script.
    pub fn resolve(&self, committed: &BTreeMap<JobId, T>) -> Result<Self> {
        let jobs = self
            .jobs
            .iter()
            .map(|j| match &j.proc {
                ProcTime::Known(_) => Ok(j.clone()),
                ProcTime::Deferred(_) => committed
                    .get(&j.id)
                    .map(|p| Job {
                        id: j.id,
                        release: j.release.clone(),
                        proc: ProcTime::Known(p.clone()),
                    })
                    .ok_or(Error::Unresolved(j.id)),
            })
            .collect::<Result<Vec<_>>>()?;
        Instance::new(jobs, self.alpha.clone(), None)
    }

    /// Appends jobs, keeping ids unique.
    pub fn with_extra_jobs(&self, extra: Vec<Job<T>>) -> Result<Self> {
        let mut jobs = self.jobs.clone();
        jobs.extend(extra);
        Instance::new(jobs, self.alpha.clone(), self.adversary.clone())
    }

    pub fn max_id(&self) -> Option<JobId> {
        self.jobs.iter().map(|j| j.id).max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_int(n)
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(Alpha::new(Rational::from_ratio(3, 2)).is_err());
        assert!(Alpha::new(Rational::from_ratio(-1, 2)).is_err());
        assert!(Alpha::new(r(0)).is_ok());
        assert!(Alpha::new(r(1)).is_ok());
    }

    #[test]
    fn sorts_and_validates() {
        let jobs = vec![Job::new(2, r(1), r(1)), Job::new(1, r(1), r(3)), Job::new(3, r(0), r(2))];
        let inst = Instance::new(jobs, Alpha::new(Rational::half()).unwrap(), None).unwrap();
        let ids: Vec<u32> = inst.jobs().iter().map(|j| j.id.0).collect();
        assert_eq!(ids, vec![3, 1, 2]);

        let dup = vec![Job::new(1, r(0), r(1)), Job::new(1, r(1), r(1))];
        assert!(Instance::new(dup, Alpha::new(r(0)).unwrap(), None).is_err());

        let zero = vec![Job::new(1, r(0), r(0))];
        assert!(Instance::new(zero, Alpha::new(r(0)).unwrap(), None).is_err());
    }

    #[test]
    fn deferred_needs_trigger() {
        let jobs = vec![Job::deferred(1, r(0), 7)];
        assert!(Instance::new(jobs.clone(), Alpha::new(Rational::half()).unwrap(), None).is_err());
        let script = AdversaryScript {
            triggers: vec![Trigger {
                id: 7,
                fire_at: r(2),
                rule: CommitRule::ScaledProgress { additive: r(1) },
            }],
        };
        let inst = Instance::new(jobs, Alpha::new(Rational::half()).unwrap(), Some(script)).unwrap();
        assert!(!inst.is_resolved());
    }

    #[test]
    fn threshold_factor_endpoints() {
        let a = Alpha::new(Rational::from_ratio(2, 3)).unwrap();
        assert_eq!(a.threshold_factor(), Some(Rational::from_ratio(1, 2)));
        assert_eq!(a.inverse_slack(), Some(r(3)));
        assert_eq!(Alpha::new(r(0)).unwrap().threshold_factor(), None);
        assert_eq!(Alpha::new(r(1)).unwrap().inverse_slack(), None);
    }
}
