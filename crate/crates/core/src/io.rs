//! Instance JSON, trace and event-log CSV.
//!
//! Rationals are written as `"num/den"` strings; integers (as JSON numbers or
//! strings without a slash) are accepted on input.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{AdversaryScript, Alpha, CommitRule, Instance, Job, JobId, ProcTime, Trigger};
use crate::scalar::Scalar;
use crate::sim::{Event, EventKind, EventLog};
use crate::trace::{ScheduleTrace, Segment};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn scalar_from_json<T: Scalar>(v: &Value) -> Result<T> {
    match v {
        Value::String(s) => T::parse_ratio(s).ok_or_else(|| parse_err(format!("bad rational {s:?}"))),
        Value::Number(n) => n
            .as_i64()
            .map(T::from_int)
            .ok_or_else(|| parse_err(format!("non-integer number {n}; use \"num/den\""))),
        other => Err(parse_err(format!("expected rational, got {other}"))),
    }
}

fn scalar_json<T: Scalar>(v: &T) -> Value {
    Value::String(v.to_ratio_string())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| parse_err(format!("missing field {key:?}")))
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| parse_err(format!("{what} must be an object")))
}

fn as_u32(v: &Value, what: &str) -> Result<u32> {
    v.as_u64()
        .and_then(|x| u32::try_from(x).ok())
        .ok_or_else(|| parse_err(format!("{what} must be a nonnegative integer")))
}

fn rule_from_json<T: Scalar>(v: &Value) -> Result<CommitRule<T>> {
    let obj = as_object(v, "rule")?;
    let kind = field(obj, "kind")?.as_str().ok_or_else(|| parse_err("rule kind must be a string"))?;
    match kind {
        "fixed" => {
            let values = as_object(field(obj, "values")?, "values")?;
            let mut out = BTreeMap::new();
            for (id, p) in values {
                let id: u32 = id.parse().map_err(|_| parse_err(format!("bad job id {id:?}")))?;
                out.insert(JobId(id), scalar_from_json(p)?);
            }
            Ok(CommitRule::Fixed(out))
        }
        "scaled_progress" => Ok(CommitRule::ScaledProgress {
            additive: scalar_from_json(field(obj, "additive")?)?,
        }),
        "leader_double" => Ok(CommitRule::LeaderDouble {
            base: scalar_from_json(field(obj, "base")?)?,
        }),
        other => Err(parse_err(format!("unknown rule {other:?}"))),
    }
}

fn rule_json<T: Scalar>(rule: &CommitRule<T>) -> Value {
    match rule {
        CommitRule::Fixed(values) => {
            let values: Map<String, Value> = values.iter().map(|(id, p)| (id.0.to_string(), scalar_json(p))).collect();
            json!({"kind": rule.name(), "values": values})
        }
        CommitRule::ScaledProgress { additive } => json!({"kind": rule.name(), "additive": scalar_json(additive)}),
        CommitRule::LeaderDouble { base } => json!({"kind": rule.name(), "base": scalar_json(base)}),
    }
}

pub fn instance_from_json<T: Scalar>(v: &Value) -> Result<Instance<T>> {
    let obj = as_object(v, "instance")?;
    let alpha = Alpha::new(scalar_from_json(field(obj, "alpha")?)?)?;
    let jobs_json = field(obj, "jobs")?.as_array().ok_or_else(|| parse_err("jobs must be an array"))?;
    let mut jobs = Vec::with_capacity(jobs_json.len());
    for job in jobs_json {
        let job = as_object(job, "job")?;
        let id = as_u32(field(job, "id")?, "job id")?;
        let release = scalar_from_json(field(job, "release")?)?;
        let proc = match field(job, "proc")? {
            Value::Object(d) => ProcTime::Deferred(as_u32(field(d, "deferred")?, "trigger id")?),
            other => ProcTime::Known(scalar_from_json(other)?),
        };
        jobs.push(Job { id: JobId(id), release, proc });
    }
    let adversary = match obj.get("adversary") {
        None | Some(Value::Null) => None,
        Some(script) => {
            let script = as_object(script, "adversary")?;
            let triggers = field(script, "triggers")?
                .as_array()
                .ok_or_else(|| parse_err("triggers must be an array"))?
                .iter()
                .map(|t| {
                    let t = as_object(t, "trigger")?;
                    Ok(Trigger {
                        id: as_u32(field(t, "id")?, "trigger id")?,
                        fire_at: scalar_from_json(field(t, "fire_at")?)?,
                        rule: rule_from_json(field(t, "rule")?)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(AdversaryScript { triggers })
        }
    };
    Instance::new(jobs, alpha, adversary)
}

pub fn instance_to_json<T: Scalar>(instance: &Instance<T>) -> Value {
    let jobs: Vec<Value> = instance
        .jobs()
        .iter()
        .map(|j| {
            let proc = match &j.proc {
                ProcTime::Known(p) => scalar_json(p),
                ProcTime::Deferred(t) => json!({ "deferred": t }),
            };
            json!({"id": j.id.0, "release": scalar_json(&j.release), "proc": proc})
        })
        .collect();
    let mut obj = Map::new();
    obj.insert("alpha".into(), scalar_json(instance.alpha().value()));
    obj.insert("jobs".into(), Value::Array(jobs));
    if let Some(script) = instance.adversary() {
        let triggers: Vec<Value> = script
            .triggers
            .iter()
            .map(|t| json!({"id": t.id, "fire_at": scalar_json(&t.fire_at), "rule": rule_json(&t.rule)}))
            .collect();
        obj.insert("adversary".into(), json!({ "triggers": triggers }));
    }
    Value::Object(obj)
}

pub fn parse_instance<T: Scalar>(text: &str) -> Result<Instance<T>> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    instance_from_json(&v)
}

pub fn write_instance<T: Scalar>(instance: &Instance<T>) -> String {
    let mut s = serde_json::to_string_pretty(&instance_to_json(instance)).expect("serializable");
    s.push('\n');
    s
}

/// `start,end,job_id,rate`, one row per rated job per segment. Idle segments
/// get a row with an empty `job_id` and rate `0/1` so the tiling survives.
pub fn write_trace_csv<T: Scalar>(trace: &ScheduleTrace<T>, float: bool) -> String {
    let mut out = String::from(if float {
        "start,end,job_id,rate,start_f,end_f,rate_f\n"
    } else {
        "start,end,job_id,rate\n"
    });
    for seg in trace.segments() {
        let rows: Vec<(String, T)> = if seg.is_idle() {
            vec![(String::new(), T::zero())]
        } else {
            seg.rates.iter().map(|(id, r)| (id.0.to_string(), r.clone())).collect()
        };
        for (id, rate) in rows {
            out.push_str(&format!(
                "{},{},{},{}",
                seg.start.to_ratio_string(),
                seg.end.to_ratio_string(),
                id,
                rate.to_ratio_string()
            ));
            if float {
                out.push_str(&format!(",{},{},{}", seg.start.to_f64(), seg.end.to_f64(), rate.to_f64()));
            }
            out.push('\n');
        }
    }
    out
}

/// Reads a trace written by [`write_trace_csv`] against a resolved instance.
pub fn parse_trace_csv<T: Scalar>(instance: &Instance<T>, text: &str) -> Result<ScheduleTrace<T>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut segments: Vec<Segment<T>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let get = |k: usize| {
            record
                .get(k)
                .ok_or_else(|| parse_err(format!("row {}: missing column {k}", line + 2)))
        };
        let num = |s: &str| T::parse_ratio(s).ok_or_else(|| parse_err(format!("row {}: bad rational {s:?}", line + 2)));
        let start = num(get(0)?)?;
        let end = num(get(1)?)?;
        let id = get(2)?.trim();
        let rate = num(get(3)?)?;
        let same = segments.last().is_some_and(|s| s.start == start && s.end == end);
        if !same {
            segments.push(Segment::new(start, end, Vec::new()));
        }
        if !id.is_empty() {
            let id: u32 = id.parse().map_err(|_| parse_err(format!("row {}: bad job id {id:?}", line + 2)))?;
            let seg = segments.last_mut().expect("pushed above");
            seg.rates.push((JobId(id), rate));
        }
    }
    ScheduleTrace::from_segments(instance.clone(), segments, BTreeMap::new())
}

/// `time,kind,job_ids` with ids separated by `;`.
pub fn write_event_csv<T: Scalar>(log: &EventLog<T>) -> String {
    let mut out = String::from("time,kind,job_ids\n");
    for e in &log.events {
        let ids: Vec<String> = e.jobs.iter().map(|id| id.0.to_string()).collect();
        out.push_str(&format!("{},{},{}\n", e.time.to_ratio_string(), e.kind.label(), ids.join(";")));
    }
    out
}

pub fn parse_event_csv<T: Scalar>(text: &str) -> Result<EventLog<T>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        if record.len() != 3 {
            return Err(parse_err("event row needs three columns"));
        }
        let time = T::parse_ratio(&record[0]).ok_or_else(|| parse_err(format!("bad time {:?}", &record[0])))?;
        let kind = EventKind::parse(&record[1]).ok_or_else(|| parse_err(format!("bad kind {:?}", &record[1])))?;
        let jobs = record[2]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map(JobId).map_err(|_| parse_err(format!("bad job id {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        events.push(Event { time, kind, jobs });
    }
    Ok(EventLog { events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::gen_det_lb2;
    use crate::policy::BuiltinPolicy;
    use crate::{simulate, Rational};

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn instance_round_trip() {
        let lb = gen_det_lb2(&Alpha::new(q(1, 2)).unwrap(), 2).unwrap();
        let text = write_instance(&lb.instance);
        let back: Instance<Rational> = parse_instance(&text).unwrap();
        assert_eq!(back, lb.instance);
    }

    #[test]
    fn integer_shorthand() {
        let inst: Instance<Rational> =
            parse_instance(r#"{"alpha": "1/2", "jobs": [{"id": 1, "release": 0, "proc": "3"}]}"#).unwrap();
        assert_eq!(inst.jobs()[0].proc, ProcTime::Known(q(3, 1)));
        assert!(write_instance(&inst).contains("\"3/1\""));
        assert!(parse_instance::<Rational>(r#"{"alpha": 0.5, "jobs": []}"#).is_err());
    }

    #[test]
    fn trace_and_events_round_trip() {
        let inst = Instance::from_pairs(q(1, 2), &[(q(0, 1), q(2, 1)), (q(5, 1), q(1, 1))]).unwrap();
        let (trace, log) = simulate(&inst, &BuiltinPolicy::setf(), None).unwrap();
        let text = write_trace_csv(&trace, false);
        assert!(text.contains("2/1,5/1,,0/1"));
        assert_eq!(parse_trace_csv(&inst, &text).unwrap(), trace);
        let events = write_event_csv(&log);
        assert_eq!(parse_event_csv::<Rational>(&events).unwrap(), log);
    }
}
