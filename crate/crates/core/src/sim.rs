//! Event-driven fluid simulation.
//!
//! Between two events every job receives a constant rate, so the engine only
//! has to find the next instant at which something changes: an arrival, an
//! adversary trigger, a completion or emission of a running job, or a change
//! announced by the policy itself (a level merge or a mode switch). All
//! arithmetic is exact.

use std::collections::BTreeMap;
use std::fmt;

use crate::adversary::evaluate_commit;
use crate::error::{Error, Result};
use crate::model::{Instance, JobId, ProcTime};
use crate::policy::{Decision, JobView, Policy, PolicyView};
use crate::scalar::Scalar;
use crate::trace::{ScheduleTrace, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Completion,
    Emission,
    AdversaryCommit,
    Arrival,
    Merge,
    ModeSwitch,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Completion => "completion",
            EventKind::Emission => "emission",
            EventKind::AdversaryCommit => "adversary-commit",
            EventKind::Arrival => "arrival",
            EventKind::Merge => "merge",
            EventKind::ModeSwitch => "mode-switch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "completion" => EventKind::Completion,
            "emission" => EventKind::Emission,
            "adversary-commit" => EventKind::AdversaryCommit,
            "arrival" => EventKind::Arrival,
            "merge" => EventKind::Merge,
            "mode-switch" => EventKind::ModeSwitch,
            _ => return None,
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<T> {
    pub time: T,
    pub kind: EventKind,
    pub jobs: Vec<JobId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog<T> {
    pub events: Vec<Event<T>>,
}

impl<T> Default for EventLog<T> {
    fn default() -> Self {
        Self { events: Vec::new() }
    }
}

impl<T: Scalar> EventLog<T> {
    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event<T>> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    fn push(&mut self, time: &T, kind: EventKind, jobs: Vec<JobId>) {
        self.events.push(Event {
            time: time.clone(),
            kind,
            jobs,
        });
    }
}

#[derive(Debug, Clone)]
struct JobState<T> {
    id: JobId,
    release: T,
    proc: Option<T>,
    trigger: Option<u32>,
    elapsed: T,
    released: bool,
    emitted_at: Option<T>,
    completed_at: Option<T>,
}

impl<T: Scalar> JobState<T> {
    fn alive(&self) -> bool {
        self.released && self.completed_at.is_none()
    }
}

/// The engine state between two events. Exposed for [`next_event`].
#[derive(Debug, Clone)]
pub struct SimState<T> {
    now: T,
    alpha: T,
    jobs: Vec<JobState<T>>,
    next_arrival: usize,
    next_trigger: usize,
    trigger_times: Vec<T>,
    horizon: Option<T>,
}

impl<T: Scalar> SimState<T> {
    fn new(instance: &Instance<T>, horizon: Option<T>) -> Self {
        let jobs = instance
            .jobs()
            .iter()
            .map(|j| JobState {
                id: j.id,
                release: j.release.clone(),
                proc: j.proc.known().cloned(),
                trigger: match j.proc {
                    ProcTime::Deferred(t) => Some(t),
                    ProcTime::Known(_) => None,
                },
                elapsed: T::zero(),
                released: false,
                emitted_at: None,
                completed_at: None,
            })
            .collect();
        let trigger_times = instance
            .adversary()
            .map(|a| a.triggers.iter().map(|t| t.fire_at.clone()).collect())
            .unwrap_or_default();
        SimState {
            now: T::zero(),
            alpha: instance.alpha().value().clone(),
            jobs,
            next_arrival: 0,
            next_trigger: 0,
            trigger_times,
            horizon,
        }
    }

    pub fn now(&self) -> &T {
        &self.now
    }

    fn view(&self, omniscient: bool) -> PolicyView<T> {
        let mut alive: Vec<JobView<T>> = self
            .jobs
            .iter()
            .filter(|j| j.alive())
            .map(|j| {
                let exposed = omniscient || j.emitted_at.is_some();
                JobView {
                    id: j.id,
                    release: j.release.clone(),
                    elapsed: j.elapsed.clone(),
                    emitted_at: j.emitted_at.clone(),
                    remaining: if exposed {
                        j.proc.clone().map(|p| p - j.elapsed.clone())
                    } else {
                        None
                    },
                }
            })
            .collect();
        alive.sort_by_key(|j| j.id);
        PolicyView {
            now: self.now.clone(),
            alive,
            omniscient,
        }
    }

    fn all_done(&self) -> bool {
        self.jobs.iter().all(|j| j.completed_at.is_some())
    }
}

/// Earliest upcoming event for the given decision, with every kind that
/// happens at that instant. `None` if nothing can happen anymore.
pub fn next_event<T: Scalar>(state: &SimState<T>, decision: &Decision<T>) -> Option<(T, Vec<EventKind>)> {
    let now = &state.now;
    let mut best: Option<(T, Vec<EventKind>)> = None;
    let mut offer = |at: T, kind: EventKind| match &mut best {
        Some((t, kinds)) if at == *t => {
            if !kinds.contains(&kind) {
                kinds.push(kind);
            }
        }
        Some((t, _)) if at > *t => {}
        _ => best = Some((at, vec![kind])),
    };
    if let Some(job) = state.jobs.get(state.next_arrival) {
        offer(job.release.clone(), EventKind::Arrival);
    }
    if let Some(at) = state.trigger_times.get(state.next_trigger) {
        offer(at.clone(), EventKind::AdversaryCommit);
    }
    for (id, rate) in &decision.rates {
        let job = state.jobs.iter().find(|j| j.id == *id).expect("rated job exists");
        let Some(p) = &job.proc else { continue };
        let done_in = (p.clone() - job.elapsed.clone()) / rate.clone();
        offer(now.clone() + done_in, EventKind::Completion);
        if job.emitted_at.is_none() {
            let threshold = state.alpha.clone() * p.clone();
            if threshold > job.elapsed {
                let emit_in = (threshold - job.elapsed.clone()) / rate.clone();
                offer(now.clone() + emit_in, EventKind::Emission);
            }
        }
    }
    if let Some((dt, kinds)) = &decision.valid_for {
        for kind in kinds {
            offer(now.clone() + dt.clone(), *kind);
        }
    }
    match (best, &state.horizon) {
        (Some((t, _)), Some(h)) if *h < t => Some((h.clone(), Vec::new())),
        (None, Some(h)) if h > now => Some((h.clone(), Vec::new())),
        (Some((t, mut kinds)), _) => {
            kinds.sort();
            Some((t, kinds))
        }
        (None, _) => None,
    }
}

/// Simulates `policy` on `instance` until every job completes, or until `horizon`.
pub fn simulate<T, P>(
    instance: &Instance<T>,
    policy: &P,
    horizon: Option<T>,
) -> Result<(ScheduleTrace<T>, EventLog<T>)>
where
    T: Scalar,
    P: Policy<T> + ?Sized,
{
    let n = instance.len();
    let cap = (64 * n * n).max(64);
    let mut state = SimState::new(instance, horizon.clone());
    let mut log = EventLog::default();
    let mut segments: Vec<Segment<T>> = Vec::new();
    let mut commits: BTreeMap<JobId, T> = BTreeMap::new();
    let mut pending_internal: Vec<EventKind> = Vec::new();
    let mut just_completed: Vec<JobId> = Vec::new();
    let mut steps = 0usize;

    loop {
        let now = state.now.clone();

        if !just_completed.is_empty() {
            log.push(&now, EventKind::Completion, std::mem::take(&mut just_completed));
        }
        record_emissions(&mut state, &mut log);

        while state
            .trigger_times
            .get(state.next_trigger)
            .is_some_and(|at| *at == now)
        {
            let script = instance.adversary().expect("triggers come from a script");
            let trigger = &script.triggers[state.next_trigger];
            let observed: Vec<(JobId, T)> = state
                .jobs
                .iter()
                .filter(|j| j.trigger == Some(trigger.id) && j.proc.is_none())
                .map(|j| (j.id, j.elapsed.clone()))
                .collect();
            let values = evaluate_commit(&trigger.rule, &observed, instance.alpha())?;
            let mut ids = Vec::new();
            for (id, p) in values {
                let job = state.jobs.iter_mut().find(|j| j.id == id).expect("observed job");
                if p <= T::zero() || state.alpha.clone() * p.clone() < job.elapsed {
                    return Err(Error::InconsistentCommitment {
                        job: id,
                        elapsed: job.elapsed.to_ratio_string(),
                        committed: p.to_ratio_string(),
                    });
                }
                job.proc = Some(p.clone());
                commits.insert(id, now.clone());
                ids.push(id);
            }
            log.push(&now, EventKind::AdversaryCommit, ids);
            state.next_trigger += 1;
            record_emissions(&mut state, &mut log);
        }

        let mut arrived = Vec::new();
        while state
            .jobs
            .get(state.next_arrival)
            .is_some_and(|j| j.release == now)
        {
            state.jobs[state.next_arrival].released = true;
            arrived.push(state.jobs[state.next_arrival].id);
            state.next_arrival += 1;
        }
        if !arrived.is_empty() {
            log.push(&now, EventKind::Arrival, arrived);
            record_emissions(&mut state, &mut log);
        }

        for kind in pending_internal.drain(..) {
            log.push(&now, kind, Vec::new());
        }

        if state.all_done() {
            break;
        }
        if state.horizon.as_ref().is_some_and(|h| now >= *h) {
            let uncommitted: Vec<JobId> = state
                .jobs
                .iter()
                .filter(|j| j.proc.is_none())
                .map(|j| j.id)
                .collect();
            if !uncommitted.is_empty() {
                return Err(Error::UncommittedAtHorizon(uncommitted));
            }
            break;
        }

        steps += 1;
        if steps > cap {
            return Err(Error::RunawayEventLoop(cap));
        }

        let view = state.view(policy.omniscient());
        let decision = policy.decide(&view);
        validate_decision(&state, &decision)?;

        let Some((next, kinds)) = next_event(&state, &decision) else {
            let stuck: Vec<JobId> = state.jobs.iter().filter(|j| j.alive()).map(|j| j.id).collect();
            return Err(Error::InvalidDecision(format!(
                "no further event reachable at {now} with alive jobs {stuck:?}"
            )));
        };
        if next <= now {
            return Err(Error::InvalidDecision(format!(
                "decision at {now} does not advance time"
            )));
        }

        let dt = next.clone() - now.clone();
        for (id, rate) in &decision.rates {
            let job = state.jobs.iter_mut().find(|j| j.id == *id).expect("validated");
            job.elapsed = job.elapsed.clone() + rate.clone() * dt.clone();
            if job.proc.as_ref().is_some_and(|p| job.elapsed == *p) {
                job.completed_at = Some(next.clone());
                just_completed.push(job.id);
            }
        }
        just_completed.sort();
        segments.push(Segment::new(now, next.clone(), decision.rates));
        pending_internal = kinds
            .into_iter()
            .filter(|k| matches!(k, EventKind::Merge | EventKind::ModeSwitch))
            .collect();
        state.now = next;
    }

    let resolved = {
        let committed: BTreeMap<JobId, T> = state
            .jobs
            .iter()
            .filter(|j| j.trigger.is_some())
            .filter_map(|j| j.proc.clone().map(|p| (j.id, p)))
            .collect();
        instance.resolve(&committed)?
    };
    let trace = ScheduleTrace::from_segments(resolved, segments, commits)?;
    debug_assert!(state.jobs.iter().all(|j| {
        j.emitted_at.is_none() || trace.emission(j.id) == j.emitted_at.as_ref()
    }));
    Ok((trace, log))
}

fn record_emissions<T: Scalar>(state: &mut SimState<T>, log: &mut EventLog<T>) {
    let now = state.now.clone();
    let alpha = state.alpha.clone();
    let mut emitted = Vec::new();
    for job in state.jobs.iter_mut() {
        if !job.released || job.emitted_at.is_some() {
            continue;
        }
        if let Some(p) = &job.proc {
            if job.elapsed == alpha.clone() * p.clone() {
                job.emitted_at = Some(now.clone());
                emitted.push(job.id);
            }
        }
    }
    if !emitted.is_empty() {
        log.push(&now, EventKind::Emission, emitted);
    }
}

fn validate_decision<T: Scalar>(state: &SimState<T>, decision: &Decision<T>) -> Result<()> {
    let mut total = T::zero();
    let mut seen = Vec::new();
    for (id, rate) in &decision.rates {
        if *rate <= T::zero() {
            return Err(Error::InvalidDecision(format!("non-positive rate for job {id}")));
        }
        if seen.contains(id) {
            return Err(Error::InvalidDecision(format!("job {id} rated twice")));
        }
        seen.push(*id);
        if !state.jobs.iter().any(|j| j.id == *id && j.alive()) {
            return Err(Error::InvalidDecision(format!("job {id} is not alive")));
        }
        total = total + rate.clone();
    }
    if total > T::one() {
        return Err(Error::InvalidDecision(format!("rates sum to {total} > 1")));
    }
    if let Some((dt, _)) = &decision.valid_for {
        if *dt <= T::zero() {
            return Err(Error::InvalidDecision("non-positive validity window".into()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub matches: bool,
    pub first_divergence: Option<String>,
}

/// Re-simulates and compares the canonical trace segment by segment.
pub fn replay_check<T, P>(trace: &ScheduleTrace<T>, instance: &Instance<T>, policy: &P) -> Result<ReplayReport>
where
    T: Scalar,
    P: Policy<T> + ?Sized,
{
    let horizon = if trace.is_complete() { None } else { Some(trace.end()) };
    let (again, _) = simulate(instance, policy, horizon)?;
    let ours = trace.segments();
    let theirs = again.segments();
    for k in 0..ours.len().max(theirs.len()) {
        match (ours.get(k), theirs.get(k)) {
            (Some(a), Some(b)) if a == b => continue,
            (a, b) => {
                let describe = |s: Option<&Segment<T>>| match s {
                    Some(s) => format!("[{}, {}] {:?}", s.start, s.end, s.rates),
                    None => "<none>".to_string(),
                };
                return Ok(ReplayReport {
                    matches: false,
                    first_divergence: Some(format!(
                        "segment {k}: recorded {} vs replayed {}",
                        describe(a),
                        describe(b)
                    )),
                });
            }
        }
    }
    if trace.completions() != again.completions() || trace.emissions() != again.emissions() {
        return Ok(ReplayReport {
            matches: false,
            first_divergence: Some("completion or emission times differ".into()),
        });
    }
    Ok(ReplayReport {
        matches: true,
        first_divergence: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Alpha;
    use crate::policy::{BuiltinPolicy, Branch, PolicyKind};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn inst(alpha: Rational, pairs: &[(i64, i64)]) -> Instance<Rational> {
        let pairs: Vec<_> = pairs.iter().map(|(r, p)| (q(*r, 1), q(*p, 1))).collect();
        Instance::from_pairs(alpha, &pairs).unwrap()
    }

    #[test]
    fn single_job_every_policy() {
        let i = inst(q(1, 2), &[(0, 1)]);
        for kind in [PolicyKind::AlphaClairvoyant, PolicyKind::Srpt, PolicyKind::Setf] {
            let pol = BuiltinPolicy::new(kind, i.alpha().clone());
            let (tr, _) = simulate(&i, &pol, None).unwrap();
            assert_eq!(tr.segments().len(), 1);
            assert_eq!(tr.segments()[0].rates, vec![(JobId(1), q(1, 1))]);
            assert_eq!(tr.completion(JobId(1)), Some(&q(1, 1)));
        }
    }

    #[test]
    fn next_event_future_arrival() {
        let i = inst(q(1, 2), &[(5, 1)]);
        let state = SimState::new(&i, None);
        let ev = next_event(&state, &Decision::idle()).unwrap();
        assert_eq!(ev, (q(5, 1), vec![EventKind::Arrival]));
    }

    #[test]
    fn next_event_shared_emission() {
        let i = inst(q(1, 2), &[(0, 2), (0, 2)]);
        let mut state = SimState::new(&i, None);
        for j in &mut state.jobs {
            j.released = true;
        }
        state.next_arrival = 2;
        let pol = BuiltinPolicy::alpha_clairvoyant(i.alpha().clone());
        let d = pol.decide(&state.view(false));
        assert_eq!(d.branch, Branch::Setf);
        assert_eq!(next_event(&state, &d).unwrap(), (q(2, 1), vec![EventKind::Emission]));
    }

    #[test]
    fn horizon_truncates() {
        let i = inst(q(1, 2), &[(0, 4)]);
        let pol = BuiltinPolicy::<Rational>::setf();
        let (tr, _) = simulate(&i, &pol, Some(q(3, 2))).unwrap();
        assert_eq!(tr.end(), q(3, 2));
        assert!(!tr.is_complete());
    }

    #[test]
    fn idle_prefix_is_recorded() {
        let i = inst(q(1, 2), &[(2, 1)]);
        let (tr, log) = simulate(&i, &BuiltinPolicy::<Rational>::srpt(), None).unwrap();
        assert_eq!(tr.segments()[0], Segment::new(q(0, 1), q(2, 1), vec![]));
        assert_eq!(tr.completion(JobId(1)), Some(&q(3, 1)));
        assert_eq!(log.of_kind(EventKind::Completion).count(), 1);
    }

    #[test]
    fn replay_detects_perturbation() {
        let i = inst(q(1, 2), &[(0, 3), (1, 1)]);
        let pol = BuiltinPolicy::<Rational>::srpt();
        let (tr, _) = simulate(&i, &pol, None).unwrap();
        assert!(replay_check(&tr, &i, &pol).unwrap().matches);
        let mut segs = tr.segments().to_vec();
        segs[0].rates[0].1 = q(1, 2);
        // the perturbed trace is still feasible, just different
        segs.push(Segment::new(q(4, 1), q(5, 1), vec![(JobId(1), q(1, 2))]));
        let bad = tr.with_segments(segs).unwrap();
        let report = replay_check(&bad, &i, &pol).unwrap();
        assert!(!report.matches);
        assert!(report.first_divergence.unwrap().starts_with("segment 0"));
    }

    #[test]
    fn endpoint_alpha_policies() {
        let i = inst(q(0, 1), &[(0, 3), (1, 1)]);
        let a0 = BuiltinPolicy::alpha_clairvoyant(Alpha::new(q(0, 1)).unwrap());
        let (t0, _) = simulate(&i, &a0, None).unwrap();
        let (ts, _) = simulate(&i, &BuiltinPolicy::<Rational>::srpt(), None).unwrap();
        assert_eq!(t0, ts);
    }

    #[test]
    fn event_log_order_at_shared_instant() {
        // job 1 completes at 1 exactly when job 2 arrives
        let i = inst(q(1, 2), &[(0, 1), (1, 1)]);
        let (_, log) = simulate(&i, &BuiltinPolicy::<Rational>::srpt(), None).unwrap();
        let at_one: Vec<EventKind> = log
            .events
            .iter()
            .filter(|e| e.time == q(1, 1))
            .map(|e| e.kind)
            .collect();
        assert_eq!(at_one, vec![EventKind::Completion, EventKind::Arrival]);
    }
}
