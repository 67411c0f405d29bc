//! Line-oriented JSON records for traces, final states and reports.
//!
//! Every record is one JSON object on its own line with a `kind` field.
//! Terms and constraints are rendered in the concrete syntax accepted by the
//! parser.
//!
//! | kind        | fields                                                                 |
//! |-------------|------------------------------------------------------------------------|
//! | `solve`     | `step`, `constraint`, `consistent`, `bindings`                         |
//! | `introduce` | `step`, `id`, `constraint`                                             |
//! | `apply`     | `step`, `rule`, `kept`, `removed`, `bindings`, `fresh_nominals`,       |
//! |             | `fresh_vars`, `heads`, `body`                                          |
//! | `state`     | `result`, `goal`, `store` (`[{id, constraint}]`), `consistent`,        |
//! |             | `builtins`, `nominals`, `history` (`[{rule, kept, removed}]`)          |
//! | `critical_pair` | `rule1`, `rule2`, `overlap` (`[[i, j]]`), `verdict`, `reason`,     |
//! |             | `store`                                                                |
//! | `confluence`| `verdict`, `pairs`, `joinable`                                         |
//! | `violation` | `run`, `step`, `message`                                               |
//! | `ranking`   | `norm`, `runs`, `incomplete_runs`, `apply_events`, `call_set`,         |
//! |             | `violations`                                                           |
//! | `typing`    | `expr`, `type`, `unconstrained`                                        |
//! | `type_error`| `expr`, `message`                                                      |
//!
//! `bindings` and `builtins` are objects mapping variable names to terms.

use serde_json::{json, Map, Value};

use crate::analysis::confluence::{ConfluenceReport, Joinability, PairReport, Verdict};
use crate::analysis::ranking::RankingReport;
use crate::engine::{ExecutionState, TraceEvent};
use crate::term::{Constraint, Substitution};
use crate::typeinfer::{Expr, TypeError, Typing};

fn subst(s: &Substitution) -> Value {
    let map: Map<String, Value> = s.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect();
    Value::Object(map)
}

fn constraints(cs: &[Constraint]) -> Value {
    cs.iter().map(|c| Value::String(c.to_string())).collect()
}

/// The record for the `step`-th event of a trace (counting from 0).
pub fn event_record(step: usize, ev: &TraceEvent) -> Value {
    match ev {
        TraceEvent::Solve { constraint, bindings, consistent } => json!({
            "kind": "solve",
            "step": step,
            "constraint": constraint.to_string(),
            "consistent": consistent,
            "bindings": subst(bindings),
        }),
        TraceEvent::Introduce { id, constraint } => json!({
            "kind": "introduce",
            "step": step,
            "id": id,
            "constraint": constraint.to_string(),
        }),
        TraceEvent::Apply { rule, kept, removed, bindings, fresh_nominals, fresh_vars, heads, body } => json!({
            "kind": "apply",
            "step": step,
            "rule": rule.to_string(),
            "kept": kept,
            "removed": removed,
            "bindings": subst(bindings),
            "fresh_nominals": fresh_nominals.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "fresh_vars": fresh_vars.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "heads": constraints(heads),
            "body": constraints(body),
        }),
    }
}

pub fn state_record(result: &str, s: &ExecutionState) -> Value {
    let store: Vec<Value> = s.store.iter().map(|(id, c)| json!({"id": id, "constraint": c.to_string()})).collect();
    let history: Vec<Value> = s
        .history
        .iter()
        .map(|t| json!({"rule": t.rule.to_string(), "kept": t.kept_ids, "removed": t.removed_ids}))
        .collect();
    json!({
        "kind": "state",
        "result": result,
        "goal": constraints(&s.goal),
        "store": store,
        "consistent": s.builtins.consistent,
        "builtins": subst(&s.builtins.subst),
        "nominals": s.nominals.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "history": history,
    })
}

pub fn pair_record(p: &PairReport) -> Value {
    let overlap: Vec<[usize; 2]> = p.pair.overlap.pairs.iter().map(|&(a, b)| [a, b]).collect();
    let reason = match &p.verdict {
        Joinability::Inconclusive(why) => Value::String(why.clone()),
        _ => Value::Null,
    };
    let store: Vec<String> = p.pair.origin.store_constraints().map(ToString::to_string).collect();
    json!({
        "kind": "critical_pair",
        "rule1": p.pair.rule1.to_string(),
        "rule2": p.pair.rule2.to_string(),
        "overlap": overlap,
        "verdict": p.verdict.label(),
        "reason": reason,
        "store": store,
    })
}

pub fn confluence_records(r: &ConfluenceReport) -> Vec<Value> {
    let mut out: Vec<Value> = r.pairs.iter().map(pair_record).collect();
    let verdict = match r.verdict {
        Verdict::LocallyConfluent => "locally_confluent",
        Verdict::Counterexample => "counterexample",
        Verdict::Inconclusive => "inconclusive",
    };
    out.push(json!({
        "kind": "confluence",
        "verdict": verdict,
        "pairs": r.pairs.len(),
        "joinable": r.pairs.iter().filter(|p| p.verdict.is_joinable()).count(),
    }));
    out
}

pub fn ranking_records(norm: &str, r: &RankingReport) -> Vec<Value> {
    let mut out: Vec<Value> = r
        .violations
        .iter()
        .map(|v| json!({"kind": "violation", "run": v.run, "step": v.step, "message": v.kind.to_string()}))
        .collect();
    out.push(json!({
        "kind": "ranking",
        "norm": norm,
        "runs": r.runs,
        "incomplete_runs": r.incomplete_runs,
        "apply_events": r.apply_events,
        "call_set": r.call_set,
        "violations": r.violations.len(),
    }));
    out
}

pub fn typing_record(e: &Expr, result: &Result<Typing, TypeError>) -> Value {
    match result {
        Ok(t) => json!({
            "kind": "typing",
            "expr": e.to_string(),
            "type": t.ty.to_string(),
            "unconstrained": t.unconstrained.len(),
        }),
        Err(err) => json!({"kind": "type_error", "expr": e.to_string(), "message": err.to_string()}),
    }
}

/// One line per event.
pub fn trace_lines(trace: &[TraceEvent]) -> Vec<String> {
    trace.iter().enumerate().map(|(i, ev)| event_record(i, ev).to_string()).collect()
}
