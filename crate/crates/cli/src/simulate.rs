//! `simulate` and `compare`.

use rayon::prelude::*;
use num_traits::Signed;
use serde_json::{json, Value};

use flowsched::io::{write_event_csv, write_trace_csv};
use flowsched::metrics::{ratio, MetricsReport};
use flowsched::oracle::quantum_simulate;
use flowsched::{simulate, Alpha, BuiltinPolicy, PolicyKind, Rational, RationalInstance, RationalTrace, Scalar};

use crate::source::{load, read_instance};
use crate::{float_str, write_file, CliResult, CompareArgs, SimulateArgs, EXIT_FAILURE, EXIT_PASS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumCheck {
    pub quantum: Rational,
    pub total_flow: Rational,
    pub difference: Rational,
    /// `n^2 * quantum`.
    pub bound: Rational,
}

impl QuantumCheck {
    pub fn within_bound(&self) -> bool {
        self.difference <= self.bound
    }

    pub fn to_json(&self) -> Value {
        json!({
            "quantum": self.quantum.to_ratio_string(),
            "total_flow": self.total_flow.to_ratio_string(),
            "difference": self.difference.to_ratio_string(),
            "bound": self.bound.to_ratio_string(),
            "within_bound": self.within_bound(),
        })
    }
}

/// Compares a complete fluid trace with the time-stepped oracle run on the
/// realized instance.
pub fn quantum_check(trace: &RationalTrace, kind: PolicyKind, quantum: &Rational) -> CliResult<QuantumCheck> {
    let run = quantum_simulate(trace.instance(), kind, quantum)?;
    let fluid = MetricsReport::from_trace(trace).total_flow;
    let n = Rational::from_int(trace.instance().len() as i64);
    Ok(QuantumCheck {
        quantum: quantum.clone(),
        difference: (run.total_flow.clone() - fluid).abs(),
        total_flow: run.total_flow,
        bound: n.clone() * n * quantum.clone(),
    })
}

pub fn policy_for(kind: PolicyKind, instance: &RationalInstance) -> BuiltinPolicy<Rational> {
    BuiltinPolicy::new(kind, instance.alpha().clone())
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<i32> {
    let mut instance = read_instance(&args.instance)?;
    if let Some(a) = &args.alpha {
        instance = instance.with_alpha(Alpha::new(a.clone())?);
    }
    let kind = PolicyKind::from(args.policy);
    let (trace, log) = simulate(&instance, &policy_for(kind, &instance), args.horizon.clone())?;
    let report = MetricsReport::from_trace(&trace);
    let mut metrics = report.to_json();
    metrics["policy"] = json!(kind.label());
    metrics["alpha"] = json!(instance.alpha().value().to_ratio_string());
    if args.float {
        metrics["total_flow_f"] = json!(Scalar::to_f64(&report.total_flow));
    }
    let mut code = EXIT_PASS;
    if args.quantum_oracle {
        if !trace.is_complete() {
            return Err(crate::CliError("the quantum oracle needs a run without --horizon".into()));
        }
        let check = quantum_check(&trace, kind, &Rational::from_ratio(1, 64))?;
        if !check.within_bound() {
            eprintln!(
                "quantum oracle differs by {} (bound {})",
                check.difference, check.bound
            );
            code = EXIT_FAILURE;
        }
        metrics["quantum_oracle"] = check.to_json();
    }
    let mut metrics_text = serde_json::to_string_pretty(&metrics).expect("serializable");
    metrics_text.push('\n');
    write_file(&args.out, "trace.csv", &write_trace_csv(&trace, args.float))?;
    write_file(&args.out, "events.csv", &write_event_csv(&log))?;
    write_file(&args.out, "metrics.json", &metrics_text)?;
    println!("{} total_flow={}", kind.label(), report.total_flow);
    Ok(code)
}

/// One row of the compare table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompareRow {
    pub instance_id: String,
    pub policy: PolicyKind,
    pub alpha: Rational,
    pub total_flow: Rational,
    /// Against SRPT on the realized instance.
    pub ratio: Rational,
}

pub fn compare_instance(id: &str, instance: &RationalInstance) -> CliResult<Vec<CompareRow>> {
    let alpha_policy = BuiltinPolicy::alpha_clairvoyant(instance.alpha().clone());
    let (alg, _) = simulate(instance, &alpha_policy, None)?;
    let realized = alg.instance().clone();
    let opt = MetricsReport::from_trace(&simulate(&realized, &BuiltinPolicy::srpt(), None)?.0);
    let mut rows = Vec::new();
    for kind in [PolicyKind::AlphaClairvoyant, PolicyKind::Srpt, PolicyKind::Setf] {
        let trace = match kind {
            PolicyKind::AlphaClairvoyant => alg.clone(),
            _ => simulate(&realized, &policy_for(kind, &realized), None)?.0,
        };
        let report = MetricsReport::from_trace(&trace);
        rows.push(CompareRow {
            instance_id: id.to_string(),
            policy: kind,
            alpha: instance.alpha().value().clone(),
            ratio: ratio(&report, &opt)?,
            total_flow: report.total_flow,
        });
    }
    Ok(rows)
}

pub fn compare_csv(rows: &[CompareRow], float: bool) -> String {
    let mut out = String::from("instance_id,policy,alpha,total_flow,ratio");
    out.push_str(if float { ",total_flow_f,ratio_f\n" } else { "\n" });
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}",
            r.instance_id,
            r.policy.label(),
            r.alpha.to_ratio_string(),
            r.total_flow.to_ratio_string(),
            r.ratio.to_ratio_string()
        ));
        if float {
            out.push_str(&format!(",{},{}", float_str(&r.total_flow), float_str(&r.ratio)));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<i32> {
    let items = load(&args.source)?;
    let rows: Vec<Vec<CompareRow>> = items
        .par_iter()
        .map(|item| compare_instance(&item.id, &item.instance))
        .collect::<CliResult<_>>()?;
    let csv = compare_csv(&rows.concat(), args.float);
    match &args.out {
        Some(dir) => {
            let path = write_file(dir, "compare.csv", &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(EXIT_PASS)
}
