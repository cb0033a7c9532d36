//! `lowerbound`: runs the lower-bound constructions against the
//! alpha-clairvoyant policy and SRPT.

use rayon::prelude::*;
use serde_json::{json, Value};

use flowsched::adversary::{append_dos_tail, gen_det_lb1, gen_det_lb2, gen_rand_lb, gen_rand_phase, LowerBoundInstance};
use flowsched::io::write_instance;
use flowsched::metrics::{delta, MetricsReport};
use flowsched::{simulate, Alpha, BuiltinPolicy, Rational, Scalar};

use crate::{float_str, write_file, CliError, CliResult, LowerBoundArgs, Which, EXIT_PASS};

/// Counts and flows of one generated instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundRun {
    pub seed: u64,
    pub measure_at: Rational,
    pub jobs: usize,
    /// Alive jobs of the policy with remaining work at least 1.
    pub delta_alg_1: usize,
    pub delta_alg: usize,
    /// Alive jobs of SRPT on the realized instance.
    pub delta_opt: usize,
    pub flow_alg: Rational,
    pub flow_opt: Rational,
    /// Least remaining work among the policy's alive jobs at the measurement time.
    pub min_remaining: Option<Rational>,
    pub first_emission: Option<Rational>,
    /// Every processing time of the base instance is at most `1 / (1 - alpha)`.
    pub in_event_l: bool,
    pub realized: flowsched::RationalInstance,
}

impl LowerBoundRun {
    pub fn flow_ratio(&self) -> Rational {
        self.flow_alg.clone() / self.flow_opt.clone()
    }

    fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "t": self.measure_at.to_ratio_string(),
            "jobs": self.jobs,
            "delta_alg_1": self.delta_alg_1,
            "delta_alg": self.delta_alg,
            "delta_opt": self.delta_opt,
            "flow_alg": self.flow_alg.to_ratio_string(),
            "flow_opt": self.flow_opt.to_ratio_string(),
            "flow_ratio": self.flow_ratio().to_ratio_string(),
            "min_remaining": self.min_remaining.as_ref().map(|r| r.to_ratio_string()),
            "first_emission": self.first_emission.as_ref().map(|r| r.to_ratio_string()),
            "in_event_l": self.in_event_l,
        })
    }
}

pub fn generate(which: Which, alpha: &Alpha<Rational>, k: Option<u32>, seed: u64) -> CliResult<LowerBoundInstance<Rational>> {
    let need_k = || k.ok_or_else(|| CliError("--k is required for this construction".into()));
    Ok(match which {
        Which::Lb1 => gen_det_lb1(alpha, need_k()?)?,
        Which::Lb2 => gen_det_lb2(alpha, need_k()?)?,
        Which::Rand => gen_rand_lb(alpha, seed)?,
        Which::Rand32 => gen_rand_phase(alpha, need_k()?, seed)?,
    })
}

pub fn lowerbound_run(
    which: Which,
    alpha: &Alpha<Rational>,
    k: Option<u32>,
    seed: u64,
    dos_m: Option<u32>,
) -> CliResult<LowerBoundRun> {
    let generated = generate(which, alpha, k, seed)?;
    let t = generated.measure_at.clone();
    let base_len = generated.instance.len();
    let instance = match dos_m {
        Some(m) => append_dos_tail(&generated.instance, &t, m)?,
        None => generated.instance,
    };
    let (alg, _) = simulate(&instance, &BuiltinPolicy::alpha_clairvoyant(alpha.clone()), None)?;
    let realized = alg.instance().clone();
    let (opt, _) = simulate(&realized, &BuiltinPolicy::srpt(), None)?;
    let one = Rational::from_int(1);
    let alive = alg.partition(&t)?.alive;
    let mut min_remaining: Option<Rational> = None;
    for id in &alive {
        let r = alg.remaining(*id, &t)?;
        if min_remaining.as_ref().is_none_or(|m| r < *m) {
            min_remaining = Some(r);
        }
    }
    let in_event_l = match alpha.inverse_slack() {
        Some(limit) => realized.jobs()[..base_len]
            .iter()
            .all(|j| j.proc.known().is_some_and(|p| *p <= limit)),
        None => true,
    };
    Ok(LowerBoundRun {
        seed,
        measure_at: t.clone(),
        jobs: realized.len(),
        delta_alg_1: delta(&alg, &t, Some(&one))?,
        delta_alg: alive.len(),
        delta_opt: delta(&opt, &t, None)?,
        flow_alg: MetricsReport::from_trace(&alg).total_flow,
        flow_opt: MetricsReport::from_trace(&opt).total_flow,
        min_remaining,
        first_emission: alg.emissions().values().min().cloned(),
        in_event_l,
        realized,
    })
}

/// Sample means over seeds, overall and restricted to event L.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LowerBoundSummary {
    pub runs: Vec<LowerBoundRun>,
    pub mean_delta_alg_1: Rational,
    pub mean_delta_opt: Rational,
    pub mean_flow_ratio: Rational,
    pub in_event_l: usize,
    pub conditioned_delta_alg_1: Option<Rational>,
    pub conditioned_delta_opt: Option<Rational>,
}

fn mean<'a>(values: impl Iterator<Item = &'a LowerBoundRun>, f: impl Fn(&LowerBoundRun) -> Rational) -> Option<Rational> {
    let mut sum = Rational::from_int(0);
    let mut count = 0i64;
    for v in values {
        sum += f(v);
        count += 1;
    }
    (count > 0).then(|| sum / Rational::from_int(count))
}

fn int(n: usize) -> Rational {
    Rational::from_int(n as i64)
}

pub fn summarize(runs: Vec<LowerBoundRun>) -> CliResult<LowerBoundSummary> {
    let mean_delta_alg_1 = mean(runs.iter(), |r| int(r.delta_alg_1)).ok_or_else(|| CliError("no runs".into()))?;
    let mean_delta_opt = mean(runs.iter(), |r| int(r.delta_opt)).expect("nonempty");
    let mean_flow_ratio = mean(runs.iter(), LowerBoundRun::flow_ratio).expect("nonempty");
    let in_l = || runs.iter().filter(|r| r.in_event_l);
    Ok(LowerBoundSummary {
        in_event_l: in_l().count(),
        conditioned_delta_alg_1: mean(in_l(), |r| int(r.delta_alg_1)),
        conditioned_delta_opt: mean(in_l(), |r| int(r.delta_opt)),
        mean_delta_alg_1,
        mean_delta_opt,
        mean_flow_ratio,
        runs,
    })
}

/// Runs seeds `first_seed .. first_seed + seeds` in parallel, in seed order.
pub fn lowerbound_summary(
    which: Which,
    alpha: &Alpha<Rational>,
    k: Option<u32>,
    first_seed: u64,
    seeds: u64,
    dos_m: Option<u32>,
) -> CliResult<LowerBoundSummary> {
    let runs = (first_seed..first_seed + seeds)
        .into_par_iter()
        .map(|seed| lowerbound_run(which, alpha, k, seed, dos_m))
        .collect::<CliResult<Vec<_>>>()?;
    summarize(runs)
}

fn opt_ratio(v: &Option<Rational>) -> Value {
    json!(v.as_ref().map(|r| r.to_ratio_string()))
}

pub fn cmd_lowerbound(args: &LowerBoundArgs) -> CliResult<i32> {
    let alpha = Alpha::new(args.alpha.clone())?;
    let randomized = matches!(args.which, Which::Rand | Which::Rand32);
    let seeds = if randomized { args.seeds } else { 1 };
    let summary = lowerbound_summary(args.which, &alpha, args.k, args.seed, seeds, args.dos_m)?;
    let name = format!("{:?}", args.which).to_lowercase();
    let first = &summary.runs[0];
    println!("{name} alpha={} t={} jobs={}", alpha.value(), first.measure_at, first.jobs);
    if randomized {
        let cmp = summary.mean_delta_alg_1.clone() / summary.mean_delta_opt.clone();
        println!(
            "seeds={seeds} mean delta(t,1)={} mean delta*(t)={} ratio={}",
            summary.mean_delta_alg_1, summary.mean_delta_opt, cmp
        );
        if args.float {
            println!(
                "  as decimals: {} {} {}",
                float_str(&summary.mean_delta_alg_1),
                float_str(&summary.mean_delta_opt),
                float_str(&cmp)
            );
        }
        if matches!(args.which, Which::Rand) {
            match (&summary.conditioned_delta_alg_1, &summary.conditioned_delta_opt) {
                (Some(a), Some(o)) => println!(
                    "conditioned on all p <= 1/(1-alpha) ({} seeds): mean delta(t,1)={a} mean delta*(t)={o}",
                    summary.in_event_l
                ),
                _ => println!("conditioned on all p <= 1/(1-alpha): no seeds"),
            }
        }
        println!("mean flow ratio={}", summary.mean_flow_ratio);
    } else {
        println!("delta(t,1)={} delta*(t)={}", first.delta_alg_1, first.delta_opt);
        println!(
            "flow alg={} opt={} ratio={}",
            first.flow_alg,
            first.flow_opt,
            first.flow_ratio()
        );
        if args.float {
            println!("  ratio as decimal: {}", float_str(&first.flow_ratio()));
        }
    }
    if let Some(dir) = &args.out {
        let report = json!({
            "which": name,
            "alpha": alpha.value().to_ratio_string(),
            "k": args.k,
            "dos_m": args.dos_m,
            "mean_delta_alg_1": summary.mean_delta_alg_1.to_ratio_string(),
            "mean_delta_opt": summary.mean_delta_opt.to_ratio_string(),
            "mean_flow_ratio": summary.mean_flow_ratio.to_ratio_string(),
            "in_event_l": summary.in_event_l,
            "conditioned_delta_alg_1": opt_ratio(&summary.conditioned_delta_alg_1),
            "conditioned_delta_opt": opt_ratio(&summary.conditioned_delta_opt),
            "runs": summary.runs.iter().map(LowerBoundRun::to_json).collect::<Vec<_>>(),
        });
        let mut text = serde_json::to_string_pretty(&report).expect("serializable");
        text.push('\n');
        write_file(dir, "lowerbound.json", &text)?;
        if !randomized {
            write_file(dir, "instance.json", &write_instance(&first.realized))?;
        }
    }
    Ok(EXIT_PASS)
}
