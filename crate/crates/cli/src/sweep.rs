//! `sweep`: largest alive-count and flow-time ratios per alpha.

use rayon::prelude::*;

use flowsched::analysis::analysis_times;
use flowsched::metrics::MetricsReport;
use flowsched::{simulate, Alpha, BuiltinPolicy, Rational, RationalInstance, Scalar};

use crate::source::load;
use crate::{float_str, write_file, CliResult, SweepArgs, EXIT_PASS};

/// Per-instance maxima for one alpha.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepPoint {
    /// `max |A(t)| / |O(t)|` over times with `O(t)` nonempty.
    pub alive_ratio: Option<Rational>,
    /// Some time had alive jobs under the policy but none under SRPT.
    pub unbounded: bool,
    pub flow_ratio: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepRow {
    pub alpha: Rational,
    pub max_alive_ratio: Option<Rational>,
    pub unbounded: bool,
    pub max_flow_ratio: Rational,
    pub instances: usize,
}

impl SweepRow {
    /// `4 + 2 / (1 - alpha)`, undefined at alpha = 1.
    pub fn bound(&self) -> Option<Rational> {
        let one = Rational::from_int(1);
        (self.alpha < one).then(|| Rational::from_int(4) + Rational::from_int(2) / (one - self.alpha.clone()))
    }
}

pub fn sweep_point(instance: &RationalInstance) -> CliResult<SweepPoint> {
    let policy = BuiltinPolicy::alpha_clairvoyant(instance.alpha().clone());
    let (alg, _) = simulate(instance, &policy, None)?;
    let (opt, _) = simulate(alg.instance(), &BuiltinPolicy::srpt(), None)?;
    let mut alive_ratio: Option<Rational> = None;
    let mut unbounded = false;
    for t in analysis_times(&alg, &opt) {
        let a = alg.partition(&t)?.alive.len() as i64;
        let o = opt.partition(&t)?.alive.len() as i64;
        if o == 0 {
            unbounded |= a > 0;
            continue;
        }
        let r = Rational::from_ratio(a, o);
        if alive_ratio.as_ref().is_none_or(|m| r > *m) {
            alive_ratio = Some(r);
        }
    }
    let flow_ratio = MetricsReport::from_trace(&alg).total_flow / MetricsReport::from_trace(&opt).total_flow;
    Ok(SweepPoint {
        alive_ratio,
        unbounded,
        flow_ratio,
    })
}

/// One row per grid value; no rows for an empty corpus.
pub fn sweep(grid: &[Rational], instances: &[RationalInstance]) -> CliResult<Vec<SweepRow>> {
    if instances.is_empty() {
        return Ok(Vec::new());
    }
    grid.iter()
        .map(|a| {
            let alpha = Alpha::new(a.clone())?;
            let points = instances
                .par_iter()
                .map(|inst| sweep_point(&inst.with_alpha(alpha.clone())))
                .collect::<CliResult<Vec<_>>>()?;
            let max_alive_ratio = points.iter().filter_map(|p| p.alive_ratio.clone()).max();
            let max_flow_ratio = points.iter().map(|p| p.flow_ratio.clone()).max().expect("nonempty corpus");
            Ok(SweepRow {
                alpha: a.clone(),
                max_alive_ratio,
                unbounded: points.iter().any(|p| p.unbounded),
                max_flow_ratio,
                instances: instances.len(),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow], float: bool) -> String {
    let mut out = String::from("alpha,max_alive_ratio,max_flow_ratio,bound,instances");
    out.push_str(if float { ",max_alive_ratio_f,max_flow_ratio_f\n" } else { "\n" });
    for row in rows {
        let alive = if row.unbounded {
            "inf".to_string()
        } else {
            row.max_alive_ratio.as_ref().map_or_else(String::new, |r| r.to_ratio_string())
        };
        let bound = row.bound().map_or_else(String::new, |b| b.to_ratio_string());
        out.push_str(&format!(
            "{},{alive},{},{bound},{}",
            row.alpha.to_ratio_string(),
            row.max_flow_ratio.to_ratio_string(),
            row.instances
        ));
        if float {
            let alive_f = if row.unbounded {
                "inf".to_string()
            } else {
                row.max_alive_ratio.as_ref().map_or_else(String::new, float_str)
            };
            out.push_str(&format!(",{alive_f},{}", float_str(&row.max_flow_ratio)));
        }
        out.push('\n');
    }
    out
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<i32> {
    let instances: Vec<RationalInstance> = load(&args.source)?.into_iter().map(|i| i.instance).collect();
    let rows = sweep(&args.grid, &instances)?;
    let csv = sweep_csv(&rows, args.float);
    match &args.out {
        Some(dir) => {
            let path = write_file(dir, "sweep.csv", &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(EXIT_PASS)
}
