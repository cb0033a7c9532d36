//! `verify`: analysis checks on alpha-clairvoyant runs against SRPT.

use std::fs;

use rayon::prelude::*;
use serde_json::{json, Value};

use flowsched::analysis::{verify, VerifyOptions};
use flowsched::io::{instance_to_json, parse_trace_csv, write_trace_csv};
use flowsched::sim::replay_check;
use flowsched::{simulate, BuiltinPolicy, Error, Scalar};

use crate::source::{load, Item};
use crate::{write_file, CliError, CliResult, VerifyArgs, EXIT_FAILURE, EXIT_PASS};

#[derive(Debug, Clone, PartialEq)]
pub struct ItemOutcome {
    pub id: String,
    pub alpha: String,
    pub points: usize,
    pub cancelled_cycles: usize,
    pub failure: Option<String>,
    /// Full report, kept only for failing items.
    pub report: Option<Value>,
    /// The trace that was checked, when it came from an override.
    pub checked_trace: Option<String>,
}

impl ItemOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    fn summary_json(&self) -> Value {
        json!({
            "id": self.id,
            "alpha": self.alpha,
            "passed": self.passed(),
            "points": self.points,
            "cancelled_cycles": self.cancelled_cycles,
            "first_failure": self.failure,
        })
    }
}

/// Runs every check on one instance. `override_csv` replaces the simulated
/// alpha-clairvoyant trace.
pub fn verify_item(item: &Item, override_csv: Option<&str>, options: VerifyOptions) -> CliResult<ItemOutcome> {
    let instance = &item.instance;
    let policy = BuiltinPolicy::alpha_clairvoyant(instance.alpha().clone());
    let (simulated, _) = simulate(instance, &policy, None)?;
    let realized = simulated.instance().clone();
    let (opt, _) = simulate(&realized, &BuiltinPolicy::srpt(), None)?;
    let mut outcome = ItemOutcome {
        id: item.id.clone(),
        alpha: instance.alpha().value().to_ratio_string(),
        points: 0,
        cancelled_cycles: 0,
        failure: None,
        report: None,
        checked_trace: None,
    };
    let alg = match override_csv {
        None => simulated,
        Some(text) => match parse_trace_csv(&realized, text) {
            Ok(trace) => {
                outcome.checked_trace = Some(text.to_string());
                trace
            }
            Err(Error::Parse(msg)) => return Err(CliError(format!("trace override: {msg}"))),
            Err(e) => {
                outcome.checked_trace = Some(text.to_string());
                outcome.failure = Some(format!("override trace rejected: {e}"));
                return Ok(outcome);
            }
        },
    };
    match replay_check(&alg, instance, &policy) {
        Ok(replay) if !replay.matches => {
            let why = replay.first_divergence.unwrap_or_default();
            outcome.failure = Some(format!("replay diverges: {why}"));
            return Ok(outcome);
        }
        Ok(_) => {}
        Err(e) => {
            outcome.failure = Some(format!("replay failed: {e}"));
            return Ok(outcome);
        }
    }
    match verify(&alg, &opt, options) {
        Ok(report) => {
            outcome.points = report.points.len();
            outcome.cancelled_cycles = report.points.iter().map(|p| p.cancelled_cycles).sum();
            outcome.failure = report.first_failure();
            if outcome.failure.is_some() {
                outcome.report = Some(report.to_json());
            }
        }
        Err(e) => outcome.failure = Some(format!("analysis error: {e}")),
    }
    Ok(outcome)
}

pub fn verify_items(items: &[Item], override_csv: Option<&str>, options: VerifyOptions) -> CliResult<Vec<ItemOutcome>> {
    items
        .par_iter()
        .map(|item| verify_item(item, override_csv, options))
        .collect()
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<i32> {
    let items = load(&args.source)?;
    let override_csv = match &args.trace_override {
        None => None,
        Some(path) => {
            if items.len() != 1 {
                return Err(CliError("--trace-override needs exactly one instance".into()));
            }
            let text = fs::read_to_string(path)
                .map_err(|e| CliError(format!("cannot read {}: {e}", path.display())))?;
            Some(text)
        }
    };
    let options = VerifyOptions {
        refinement: !args.no_refinement,
        compare_unrestricted: args.compare_unrestricted,
    };
    let outcomes = verify_items(&items, override_csv.as_deref(), options)?;
    let failed: Vec<&ItemOutcome> = outcomes.iter().filter(|o| !o.passed()).collect();
    let mut report = json!({
        "checked": outcomes.len(),
        "failures": failed.len(),
        "passed": failed.is_empty(),
        "instances": outcomes.iter().map(ItemOutcome::summary_json).collect::<Vec<_>>(),
    });
    let Some(first) = failed.first() else {
        write_report(args, &report)?;
        let points: usize = outcomes.iter().map(|o| o.points).sum();
        println!("verified {} instances at {points} points: all checks passed", outcomes.len());
        return Ok(EXIT_PASS);
    };
    if let Some(full) = &first.report {
        report["first_failure_report"] = full.clone();
    }
    write_report(args, &report)?;
    let item = items.iter().find(|i| i.id == first.id).expect("outcome of a loaded item");
    let message = first.failure.clone().unwrap_or_default();
    let mut counterexample = instance_to_json(&item.instance);
    counterexample["failure"] = json!({ "id": first.id, "message": message });
    let mut text = serde_json::to_string_pretty(&counterexample).expect("serializable");
    text.push('\n');
    let path = write_file(&args.out, "counterexample.json", &text)?;
    println!("FAIL {}: {message}", first.id);
    println!("counterexample written to {}", path.display());
    if let Some(trace) = &first.checked_trace {
        let trace_path = write_file(&args.out, "counterexample.trace.csv", trace)?;
        println!("checked trace written to {}", trace_path.display());
    }
    Ok(EXIT_FAILURE)
}

fn write_report(args: &VerifyArgs, report: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(report).expect("serializable");
    text.push('\n');
    write_file(&args.out, "verify.json", &text)?;
    Ok(())
}

/// The simulated alpha-clairvoyant trace of an item as CSV, for building
/// override files.
pub fn simulated_trace_csv(item: &Item) -> CliResult<String> {
    let policy = BuiltinPolicy::alpha_clairvoyant(item.instance.alpha().clone());
    let (trace, _) = simulate(&item.instance, &policy, None)?;
    Ok(write_trace_csv(&trace, false))
}
