use std::sync::Mutex;

use proptest::prelude::*;

use flowsched::analysis::{check_trace_invariants, verify, VerifyOptions};
use flowsched::metrics::{flow_identity_holds, ratio, MetricsReport};
use flowsched::oracle::brute_force_optimum;
use flowsched::policy::{alpha_clairvoyant_decide, Decision, PolicyView};
use flowsched::sim::replay_check;
use flowsched::{simulate, Alpha, BuiltinPolicy, Instance, Job, JobId, Policy, Rational, RationalInstance, Scalar};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn alphas() -> impl Strategy<Value = Rational> {
    prop::sample::select(vec![q(0, 1), q(1, 4), q(1, 2), q(2, 3), q(3, 4), q(1, 1)])
}

fn instances(max_n: usize) -> impl Strategy<Value = RationalInstance> {
    (alphas(), prop::collection::vec((0i64..=10, 1i64..=8), 1..=max_n)).prop_map(|(alpha, pairs)| {
        let pairs: Vec<_> = pairs.into_iter().map(|(r, p)| (q(r, 1), q(p, 1))).collect();
        Instance::from_pairs(alpha, &pairs).unwrap()
    })
}

fn policies(inst: &RationalInstance) -> Vec<BuiltinPolicy<Rational>> {
    vec![
        BuiltinPolicy::alpha_clairvoyant(inst.alpha().clone()),
        BuiltinPolicy::srpt(),
        BuiltinPolicy::setf(),
    ]
}

/// Forwards to the alpha-clairvoyant rule and records every view it is shown.
struct Spy {
    alpha: Alpha<Rational>,
    views: Mutex<Vec<PolicyView<Rational>>>,
}

impl Policy<Rational> for Spy {
    fn name(&self) -> String {
        "spy".into()
    }

    fn decide(&self, view: &PolicyView<Rational>) -> Decision<Rational> {
        self.views.lock().unwrap().push(view.clone());
        alpha_clairvoyant_decide(view, &self.alpha)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn flow_identity_and_partition_cover(inst in instances(7)) {
        for policy in policies(&inst) {
            let (trace, _) = simulate(&inst, &policy, None).unwrap();
            prop_assert!(flow_identity_holds(&trace));
            for t in trace.check_times() {
                let part = trace.partition(&t).unwrap();
                prop_assert!(part.non_clairvoyant.is_disjoint(&part.clairvoyant));
                let union: std::collections::BTreeSet<JobId> =
                    part.non_clairvoyant.union(&part.clairvoyant).copied().collect();
                prop_assert_eq!(&union, &part.alive);
                let released = inst.jobs().iter().filter(|j| j.release <= t).count();
                prop_assert_eq!(part.alive.len() + part.completed.len(), released);
            }
        }
    }

    #[test]
    fn replay_is_deterministic(inst in instances(7)) {
        for policy in policies(&inst) {
            let (trace, log) = simulate(&inst, &policy, None).unwrap();
            prop_assert!(replay_check(&trace, &inst, &policy).unwrap().matches);
            let (again, log_again) = simulate(&inst, &policy, None).unwrap();
            prop_assert_eq!(trace, again);
            prop_assert_eq!(log, log_again);
        }
    }

    #[test]
    fn views_hide_unemitted_work(inst in instances(6)) {
        let spy = Spy { alpha: inst.alpha().clone(), views: Mutex::new(Vec::new()) };
        let (trace, _) = simulate(&inst, &spy, None).unwrap();
        let (reference, _) = simulate(&inst, &BuiltinPolicy::alpha_clairvoyant(inst.alpha().clone()), None).unwrap();
        prop_assert_eq!(trace.segments(), reference.segments());
        for view in spy.views.lock().unwrap().iter() {
            for job in &view.alive {
                prop_assert_eq!(job.remaining.is_some(), job.emitted());
            }
        }
    }

    #[test]
    fn unemitted_processing_time_does_not_change_the_past(inst in instances(6), pick in 0usize..6, extra in 1i64..=5) {
        prop_assume!(!inst.alpha().is_one());
        let k = pick % inst.len();
        let jobs: Vec<Job<Rational>> = inst
            .jobs()
            .iter()
            .enumerate()
            .map(|(i, j)| {
                let p = j.proc.known().unwrap().clone();
                Job::new(j.id.0, j.release.clone(), if i == k { p + q(extra, 1) } else { p })
            })
            .collect();
        let other = Instance::new(jobs, inst.alpha().clone(), None).unwrap();
        let policy = BuiltinPolicy::alpha_clairvoyant(inst.alpha().clone());
        let (a, _) = simulate(&inst, &policy, None).unwrap();
        let (b, _) = simulate(&other, &policy, None).unwrap();
        let id = inst.jobs()[k].id;
        let cut = a.emission(id).unwrap().clone().min(b.emission(id).unwrap().clone());
        for t in a.check_times().into_iter().chain(b.check_times()).filter(|t| *t <= cut) {
            for j in inst.jobs() {
                prop_assert_eq!(a.elapsed_work(j.id, &t).unwrap(), b.elapsed_work(j.id, &t).unwrap());
            }
        }
    }

    #[test]
    fn endpoints_reduce(inst in instances(7)) {
        let zero = inst.with_alpha(Alpha::new(q(0, 1)).unwrap());
        let one = inst.with_alpha(Alpha::new(q(1, 1)).unwrap());
        let a0 = simulate(&zero, &BuiltinPolicy::alpha_clairvoyant(zero.alpha().clone()), None).unwrap().0;
        let a1 = simulate(&one, &BuiltinPolicy::alpha_clairvoyant(one.alpha().clone()), None).unwrap().0;
        prop_assert_eq!(a0, simulate(&zero, &BuiltinPolicy::srpt(), None).unwrap().0);
        prop_assert_eq!(a1, simulate(&one, &BuiltinPolicy::setf(), None).unwrap().0);
    }

    #[test]
    fn srpt_is_optimal(inst in instances(5)) {
        let srpt = MetricsReport::from_trace(&simulate(&inst, &BuiltinPolicy::srpt(), None).unwrap().0);
        prop_assert_eq!(&srpt.total_flow, &brute_force_optimum(&inst).unwrap());
        for policy in policies(&inst) {
            let other = MetricsReport::from_trace(&simulate(&inst, &policy, None).unwrap().0);
            prop_assert!(ratio(&other, &srpt).unwrap() >= q(1, 1));
        }
    }

    #[test]
    fn analysis_checks_hold(inst in instances(5)) {
        prop_assume!(!inst.alpha().is_one() && !inst.alpha().is_zero());
        let alg = simulate(&inst, &BuiltinPolicy::alpha_clairvoyant(inst.alpha().clone()), None).unwrap().0;
        let opt = simulate(&inst, &BuiltinPolicy::srpt(), None).unwrap().0;
        prop_assert!(check_trace_invariants(&alg).unwrap().is_empty());
        let report = verify(&alg, &opt, VerifyOptions::default()).unwrap();
        prop_assert!(report.passed(), "{:?}", report.first_failure());
    }
}
