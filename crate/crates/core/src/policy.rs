//! Scheduling policies as pure functions of what the scheduler may know.

use std::fmt;

use crate::model::{Alpha, JobId};
use crate::scalar::Scalar;
use crate::sim::EventKind;

/// One alive job as seen by a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobView<T> {
    pub id: JobId,
    pub release: T,
    pub elapsed: T,
    /// Emission time `s_j`, once the job has emitted its signal.
    pub emitted_at: Option<T>,
    /// Present only after emission, or for omniscient policies.
    pub remaining: Option<T>,
}

impl<T> JobView<T> {
    pub fn emitted(&self) -> bool {
        self.emitted_at.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyView<T> {
    pub now: T,
    /// Alive jobs sorted by id.
    pub alive: Vec<JobView<T>>,
    pub omniscient: bool,
}

/// Rates handed to alive jobs; positive, summing to at most 1.
pub type RateDecision<T> = Vec<(JobId, T)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Idle,
    /// A single job with least remaining work.
    Srpt,
    /// Equal sharing among jobs of least elapsed work.
    Setf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision<T> {
    pub rates: RateDecision<T>,
    pub branch: Branch,
    /// Time after which the decision must be re-evaluated even if nothing
    /// external happens, with the reason (a level merge or a mode switch).
    pub valid_for: Option<(T, Vec<EventKind>)>,
}

impl<T: Scalar> Decision<T> {
    pub fn idle() -> Self {
        Decision {
            rates: Vec::new(),
            branch: Branch::Idle,
            valid_for: None,
        }
    }
}

pub trait Policy<T: Scalar>: Sync {
    fn name(&self) -> String;

    /// Omniscient policies see remaining work of every job.
    fn omniscient(&self) -> bool {
        false
    }

    fn decide(&self, view: &PolicyView<T>) -> Decision<T>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    AlphaClairvoyant,
    Srpt,
    Setf,
}

impl PolicyKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "alpha" => Some(PolicyKind::AlphaClairvoyant),
            "srpt" => Some(PolicyKind::Srpt),
            "setf" => Some(PolicyKind::Setf),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PolicyKind::AlphaClairvoyant => "alpha",
            PolicyKind::Srpt => "srpt",
            PolicyKind::Setf => "setf",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Built-in policy; `alpha` is only consulted by the alpha-clairvoyant rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuiltinPolicy<T> {
    pub kind: PolicyKind,
    pub alpha: Alpha<T>,
}

impl<T: Scalar> BuiltinPolicy<T> {
    pub fn new(kind: PolicyKind, alpha: Alpha<T>) -> Self {
        BuiltinPolicy { kind, alpha }
    }

    pub fn srpt() -> Self {
        BuiltinPolicy::new(PolicyKind::Srpt, Alpha::new(T::zero()).expect("0 is a valid alpha"))
    }

    pub fn setf() -> Self {
        BuiltinPolicy::new(PolicyKind::Setf, Alpha::new(T::one()).expect("1 is a valid alpha"))
    }

    pub fn alpha_clairvoyant(alpha: Alpha<T>) -> Self {
        BuiltinPolicy::new(PolicyKind::AlphaClairvoyant, alpha)
    }
}

impl<T: Scalar> Policy<T> for BuiltinPolicy<T> {
    fn name(&self) -> String {
        match self.kind {
            PolicyKind::AlphaClairvoyant => format!("alpha({})", self.alpha.value()),
            other => other.label().to_string(),
        }
    }

    fn omniscient(&self) -> bool {
        self.kind == PolicyKind::Srpt
    }

    fn decide(&self, view: &PolicyView<T>) -> Decision<T> {
        match self.kind {
            PolicyKind::AlphaClairvoyant => alpha_clairvoyant_decide(view, &self.alpha),
            PolicyKind::Srpt => srpt_decide(view),
            PolicyKind::Setf => setf_decide(view),
        }
    }
}

/// Least remaining work, ties by lowest id. Needs remaining work on every job.
pub fn srpt_decide<T: Scalar>(view: &PolicyView<T>) -> Decision<T> {
    let best = view
        .alive
        .iter()
        .filter_map(|j| j.remaining.as_ref().map(|r| (r, j.id)))
        .min();
    match best {
        Some((_, id)) => Decision {
            rates: vec![(id, T::one())],
            branch: Branch::Srpt,
            valid_for: None,
        },
        None => Decision::idle(),
    }
}

/// Equal sharing among all alive jobs of least elapsed work.
pub fn setf_decide<T: Scalar>(view: &PolicyView<T>) -> Decision<T> {
    share_least_elapsed(view.alive.iter())
}

fn share_least_elapsed<'a, T: Scalar>(jobs: impl Iterator<Item = &'a JobView<T>> + Clone) -> Decision<T> {
    let Some(min_y) = jobs.clone().map(|j| &j.elapsed).min().cloned() else {
        return Decision::idle();
    };
    let lowest: Vec<JobId> = jobs
        .clone()
        .filter(|j| j.elapsed == min_y)
        .map(|j| j.id)
        .collect();
    let m = T::from_int(lowest.len() as i64);
    let rate = T::one() / m.clone();
    // the lowest level rises at rate 1/m until it meets the next one
    let next_level = jobs.filter(|j| j.elapsed > min_y).map(|j| &j.elapsed).min();
    let valid_for = next_level.map(|y| ((y.clone() - min_y.clone()) * m, vec![EventKind::Merge]));
    Decision {
        rates: lowest.into_iter().map(|id| (id, rate.clone())).collect(),
        branch: Branch::Setf,
        valid_for,
    }
}

/// The SRPT/SETF combination driven by the emission signal.
///
/// Clairvoyant jobs are those that already emitted. If the least remaining
/// work among them is at most `(1 - alpha) / alpha` times the least elapsed
/// work among non-clairvoyant jobs (empty minima are `+inf`), the clairvoyant
/// job with least remaining work runs alone; ties go to the latest emitter,
/// then to the lowest id. Otherwise the non-clairvoyant jobs with least elapsed
/// work share the machine equally.
///
/// At `alpha = 0` this is plain SRPT, at `alpha = 1` plain SETF.
pub fn alpha_clairvoyant_decide<T: Scalar>(view: &PolicyView<T>, alpha: &Alpha<T>) -> Decision<T> {
    if alpha.is_zero() {
        return srpt_decide(view);
    }
    if alpha.is_one() {
        return setf_decide(view);
    }
    let factor = alpha.threshold_factor().expect("alpha > 0");

    let clairvoyant_best = view
        .alive
        .iter()
        .filter(|j| j.emitted())
        .filter_map(|j| {
            let rem = j.remaining.clone()?;
            let s = j.emitted_at.clone()?;
            Some((rem, std::cmp::Reverse(s), j.id))
        })
        .min();
    let non_clairvoyant = view.alive.iter().filter(|j| !j.emitted());
    let min_nc_elapsed = non_clairvoyant.clone().map(|j| &j.elapsed).min().cloned();

    let srpt_branch = match (&clairvoyant_best, &min_nc_elapsed) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some((rem, _, _)), Some(y)) => *rem <= factor.clone() * y.clone(),
    };

    if srpt_branch {
        let (_, _, id) = clairvoyant_best.expect("checked above");
        return Decision {
            rates: vec![(id, T::one())],
            branch: Branch::Srpt,
            valid_for: None,
        };
    }

    let mut decision = share_least_elapsed(non_clairvoyant);
    if let (Some((rem, _, _)), Some(y)) = (clairvoyant_best, min_nc_elapsed) {
        // factor * (y + dt / m) reaches rem
        let m = T::from_int(decision.rates.len() as i64);
        let switch_after = m * (rem / factor - y);
        decision.valid_for = match decision.valid_for.take() {
            None => Some((switch_after, vec![EventKind::ModeSwitch])),
            Some((merge_after, kinds)) => {
                if switch_after < merge_after {
                    Some((switch_after, vec![EventKind::ModeSwitch]))
                } else if switch_after == merge_after {
                    Some((merge_after, vec![EventKind::Merge, EventKind::ModeSwitch]))
                } else {
                    Some((merge_after, kinds))
                }
            }
        };
    }
    decision
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn nc(id: u32, y: Rational) -> JobView<Rational> {
        JobView {
            id: JobId(id),
            release: q(0, 1),
            elapsed: y,
            emitted_at: None,
            remaining: None,
        }
    }

    fn cl(id: u32, y: Rational, rem: Rational, s: Rational) -> JobView<Rational> {
        JobView {
            id: JobId(id),
            release: q(0, 1),
            elapsed: y,
            emitted_at: Some(s),
            remaining: Some(rem),
        }
    }

    fn view(alive: Vec<JobView<Rational>>) -> PolicyView<Rational> {
        PolicyView {
            now: q(0, 1),
            alive,
            omniscient: false,
        }
    }

    #[test]
    fn setf_three_levels() {
        let d = setf_decide(&view(vec![nc(1, q(1, 1)), nc(2, q(1, 1)), nc(3, q(4, 1))]));
        assert_eq!(d.rates, vec![(JobId(1), q(1, 2)), (JobId(2), q(1, 2))]);
        assert_eq!(d.valid_for, Some((q(6, 1), vec![EventKind::Merge])));
    }

    #[test]
    fn setf_fresh_arrival_runs_alone() {
        let d = setf_decide(&view(vec![nc(1, q(3, 2)), nc(2, q(0, 1)), nc(3, q(1, 1))]));
        assert_eq!(d.rates, vec![(JobId(2), q(1, 1))]);
    }

    #[test]
    fn setf_merge_time() {
        // min set {y=0} below a job at y=1 with two jobs sharing: merge after 2
        let d = setf_decide(&view(vec![nc(1, q(0, 1)), nc(2, q(0, 1)), nc(3, q(1, 1))]));
        assert_eq!(d.valid_for.unwrap().0, q(2, 1));
    }

    #[test]
    fn srpt_ties_lowest_id() {
        let mut v = view(vec![cl(2, q(0, 1), q(3, 1), q(0, 1)), cl(1, q(0, 1), q(3, 1), q(0, 1))]);
        v.omniscient = true;
        assert_eq!(srpt_decide(&v).rates, vec![(JobId(1), q(1, 1))]);
        let single = view(vec![cl(5, q(0, 1), q(2, 1), q(0, 1))]);
        assert_eq!(srpt_decide(&single).rates, vec![(JobId(5), q(1, 1))]);
    }

    #[test]
    fn alpha_empty_clairvoyant_set_forces_sharing() {
        let a = Alpha::new(q(1, 2)).unwrap();
        let d = alpha_clairvoyant_decide(&view(vec![nc(1, q(0, 1))]), &a);
        assert_eq!(d.branch, Branch::Setf);
        assert_eq!(d.rates, vec![(JobId(1), q(1, 1))]);
    }

    #[test]
    fn alpha_fresh_arrival_preempts() {
        let a = Alpha::new(q(1, 2)).unwrap();
        let d = alpha_clairvoyant_decide(
            &view(vec![nc(1, q(0, 1)), cl(2, q(5, 1), q(5, 1), q(0, 1))]),
            &a,
        );
        assert_eq!(d.branch, Branch::Setf);
        assert_eq!(d.rates, vec![(JobId(1), q(1, 1))]);
        // switch once y reaches 5: 1 * (5 / 1 - 0)
        assert_eq!(d.valid_for, Some((q(5, 1), vec![EventKind::ModeSwitch])));
    }

    #[test]
    fn alpha_threshold_equality_takes_srpt() {
        let a = Alpha::new(q(1, 2)).unwrap();
        let d = alpha_clairvoyant_decide(
            &view(vec![nc(1, q(1, 1)), cl(2, q(1, 1), q(1, 1), q(2, 1))]),
            &a,
        );
        assert_eq!(d.branch, Branch::Srpt);
        assert_eq!(d.rates, vec![(JobId(2), q(1, 1))]);
    }

    #[test]
    fn alpha_tie_prefers_latest_emitter() {
        let a = Alpha::new(q(1, 2)).unwrap();
        let d = alpha_clairvoyant_decide(
            &view(vec![cl(1, q(1, 1), q(1, 1), q(1, 1)), cl(2, q(1, 1), q(1, 1), q(2, 1))]),
            &a,
        );
        assert_eq!(d.rates, vec![(JobId(2), q(1, 1))]);
        let d = alpha_clairvoyant_decide(
            &view(vec![cl(3, q(1, 1), q(1, 1), q(2, 1)), cl(2, q(1, 1), q(1, 1), q(2, 1))]),
            &a,
        );
        assert_eq!(d.rates, vec![(JobId(2), q(1, 1))]);
    }

    #[test]
    fn empty_view_idles() {
        let a = Alpha::new(q(1, 2)).unwrap();
        assert_eq!(alpha_clairvoyant_decide(&view(vec![]), &a).branch, Branch::Idle);
        assert_eq!(setf_decide(&view(vec![])).branch, Branch::Idle);
        assert_eq!(srpt_decide(&view(vec![])).branch, Branch::Idle);
    }
}
