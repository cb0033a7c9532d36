use flowsched::adversary::{append_dos_tail, gen_det_lb1, gen_det_lb2, gen_rand_lb};
use flowsched::metrics::delta;
use flowsched::sim::replay_check;
use flowsched::{simulate, Alpha, BuiltinPolicy, EventKind, JobId, ProcTime, Rational, Scalar};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn half() -> Alpha<Rational> {
    Alpha::new(q(1, 2)).unwrap()
}

#[test]
fn lb1_small_case() {
    let lb = gen_det_lb1(&half(), 4).unwrap();
    let (alg, log) = simulate(&lb.instance, &BuiltinPolicy::alpha_clairvoyant(half()), None).unwrap();
    assert_eq!(lb.measure_at, q(4, 1));
    for job in alg.instance().jobs() {
        assert_eq!(job.proc, ProcTime::Known(q(9, 4)));
    }
    assert!(log.of_kind(EventKind::Emission).all(|e| e.time >= q(4, 1)));
    let (opt, _) = simulate(alg.instance(), &BuiltinPolicy::srpt(), None).unwrap();
    assert_eq!(delta(&alg, &q(4, 1), None).unwrap(), 4);
    assert_eq!(delta(&alg, &q(4, 1), Some(&q(1, 1))).unwrap(), 4);
    assert_eq!(delta(&opt, &q(4, 1), None).unwrap(), 3);
}

#[test]
fn lb2_three_phases() {
    let lb = gen_det_lb2(&half(), 3).unwrap();
    let policy = BuiltinPolicy::alpha_clairvoyant(half());
    let (alg, _) = simulate(&lb.instance, &policy, None).unwrap();
    let t = lb.measure_at.clone();
    assert_eq!(t, q(729 + 81 + 9, 1));
    assert_eq!(delta(&alg, &t, Some(&q(1, 1))).unwrap(), 6);
    let (opt, _) = simulate(alg.instance(), &BuiltinPolicy::srpt(), None).unwrap();
    assert_eq!(delta(&opt, &t, None).unwrap(), 3);
    // the first phase is phase 3: lengths 729 and 1458
    let procs: Vec<Rational> = alg
        .instance()
        .jobs()
        .iter()
        .map(|j| j.proc.known().unwrap().clone())
        .collect();
    let mut first_phase = vec![procs[0].clone(), procs[1].clone()];
    first_phase.sort();
    assert_eq!(first_phase, vec![q(729, 1), q(1458, 1)]);
    // the realized instance, played without the script, gives the same schedule
    let (plain, _) = simulate(alg.instance(), &policy, None).unwrap();
    assert_eq!(plain.segments(), alg.segments());
    assert!(replay_check(&alg, &lb.instance, &policy).unwrap().matches);
}

#[test]
fn dos_tail_leaves_the_prefix_alone() {
    let lb = gen_det_lb2(&half(), 2).unwrap();
    let t = lb.measure_at.clone();
    let policy = BuiltinPolicy::alpha_clairvoyant(half());
    let inst = append_dos_tail(&lb.instance, &t, 5).unwrap();
    let (base, _) = simulate(&lb.instance, &policy, None).unwrap();
    let (alg, _) = simulate(&inst, &policy, None).unwrap();
    assert_eq!(alg.instance().len(), 9);
    assert_eq!(alg.instance().job(JobId(9)).unwrap().release, t.clone() + q(5, 1));
    // nothing new arrives before t + 1
    let before = t.clone() + q(1, 2);
    for id in 1..=4 {
        let id = JobId(id);
        assert_eq!(alg.elapsed_work(id, &before).unwrap(), base.elapsed_work(id, &before).unwrap());
    }
    let flow = |tr: &flowsched::RationalTrace| flowsched::metrics::MetricsReport::from_trace(tr).total_flow;
    assert!(flow(&alg) >= flow(&base) + q(5, 1));
}

#[test]
fn randomized_instances_are_seeded() {
    let a = Alpha::new(q(7, 8)).unwrap();
    let x = gen_rand_lb(&a, 5).unwrap();
    assert_eq!(x, gen_rand_lb(&a, 5).unwrap());
    assert_eq!(x.instance.len(), 16);
    assert!(x
        .instance
        .jobs()
        .iter()
        .all(|j| j.release == q(0, 1) && *j.proc.known().unwrap() >= q(2, 1)));
}
