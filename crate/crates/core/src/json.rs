//! JSON documents: instances in, solutions and reports out.
//!
//! Instance schema:
//!
//! ```text
//! {
//!   "X": {"labels": [...], "metric": [[...]]},   // metric optional
//!   "Y": {"labels": [...], "metric": [[...]]},
//!   "cost": [[...]],            // "inf" marks +inf
//!   "mu": [...], "nu": [...],
//!   "mode": "rational" | "float",   // default "rational"
//!   "bounded": true,                // optional, rejects "inf" entries
//!   "generator": {...}              // optional, ignored on input
//! }
//! ```
//!
//! Scalars are strings (`"3/4"`, `"0.25"`, `"1e-3"`) or JSON numbers; numbers
//! are read from their decimal text, so `0.1` is exactly `1/10` in rational
//! mode. Output renders rationals as `"p/q"` strings and floats as numbers.

use serde_json::{json, Map, Value};

use crate::certify::{CyclicReport, DualityCertificate, MarginalReport, SlacknessViolation, Tolerances, Verdict};
use crate::envelope::EnvelopeSchedule;
use crate::error::{Error, Result};
use crate::instance::{CostMatrix, DualPotentials, FiniteSpace, Instance, Marginal, TransportPlan};
use crate::matrix::Matrix;
use crate::num::{Extended, Mode, Scalar};
use crate::primal::OptimalPlanResult;

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, ctx: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| schema(format!("{ctx}: missing \"{key}\"")))
}

fn as_object<'a>(v: &'a Value, ctx: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| schema(format!("{ctx}: expected an object")))
}

fn as_array<'a>(v: &'a Value, ctx: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(format!("{ctx}: expected an array")))
}

pub fn parse_scalar<T: Scalar>(v: &Value, ctx: &str) -> Result<T> {
    match v {
        Value::String(s) => Ok(T::parse(s)?),
        Value::Number(n) => Ok(T::parse(&n.to_string())?),
        _ => Err(schema(format!("{ctx}: expected a number or a string"))),
    }
}

fn parse_extended<T: Scalar>(v: &Value, ctx: &str) -> Result<Extended<T>> {
    match v {
        Value::String(s) if matches!(s.trim(), "inf" | "+inf" | "Infinity" | "+Infinity") => Ok(Extended::Infinite),
        _ => parse_scalar(v, ctx).map(Extended::Finite),
    }
}

pub fn parse_vector<T: Scalar>(v: &Value, ctx: &str) -> Result<Vec<T>> {
    as_array(v, ctx)?
        .iter()
        .enumerate()
        .map(|(i, x)| parse_scalar(x, &format!("{ctx}[{i}]")))
        .collect()
}

fn parse_rows<E: Clone>(v: &Value, ctx: &str, cell: impl Fn(&Value, &str) -> Result<E>) -> Result<Matrix<E>> {
    let rows = as_array(v, ctx)?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            as_array(row, &format!("{ctx}[{i}]"))?
                .iter()
                .enumerate()
                .map(|(j, x)| cell(x, &format!("{ctx}[{i}][{j}]")))
                .collect::<Result<Vec<E>>>()
        })
        .collect::<Result<Vec<Vec<E>>>>()?;
    Matrix::from_rows(rows)
}

pub fn parse_matrix<T: Scalar>(v: &Value, ctx: &str) -> Result<Matrix<T>> {
    parse_rows(v, ctx, parse_scalar)
}

fn parse_label(v: &Value, ctx: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(schema(format!("{ctx}: labels are strings or numbers"))),
    }
}

fn parse_space<T: Scalar>(v: &Value, ctx: &str) -> Result<FiniteSpace<T>> {
    let obj = as_object(v, ctx)?;
    let labels = as_array(field(obj, "labels", ctx)?, &format!("{ctx}.labels"))?
        .iter()
        .enumerate()
        .map(|(i, l)| parse_label(l, &format!("{ctx}.labels[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    let metric = match obj.get("metric") {
        None | Some(Value::Null) => None,
        Some(m) => Some(parse_matrix(m, &format!("{ctx}.metric"))?),
    };
    Ok(FiniteSpace { labels, metric })
}

/// Reads the `"mode"` key of an instance document.
pub fn document_mode(doc: &Value) -> Result<Mode> {
    match doc.get("mode") {
        None | Some(Value::Null) => Ok(Mode::Rational),
        Some(Value::String(s)) if s == "rational" => Ok(Mode::Rational),
        Some(Value::String(s)) if s == "float" => Ok(Mode::Float),
        Some(other) => Err(schema(format!("mode: expected \"rational\" or \"float\", got {other}"))),
    }
}

pub fn parse_document(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| schema(format!("invalid JSON: {e}")))
}

/// Builds an unvalidated instance from a document, reading every scalar in
/// the arithmetic `T` regardless of the document's `"mode"`.
pub fn instance_from_value<T: Scalar>(doc: &Value) -> Result<Instance<T>> {
    let obj = as_object(doc, "instance")?;
    let space_x = parse_space(field(obj, "X", "instance")?, "X")?;
    let space_y = parse_space(field(obj, "Y", "instance")?, "Y")?;
    let entries = parse_rows(field(obj, "cost", "instance")?, "cost", parse_extended)?;
    let bounded = match obj.get("bounded") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(schema("bounded: expected a boolean")),
    };
    let cost = if bounded {
        CostMatrix::declared_bounded(entries)
    } else {
        CostMatrix::new(entries)
    };
    let mu = Marginal::new(parse_vector(field(obj, "mu", "instance")?, "mu")?);
    let nu = Marginal::new(parse_vector(field(obj, "nu", "instance")?, "nu")?);
    Ok(Instance {
        space_x,
        space_y,
        cost,
        mu,
        nu,
    })
}

pub fn vector_json<T: Scalar>(v: &[T]) -> Value {
    Value::Array(v.iter().map(Scalar::to_json).collect())
}

pub fn matrix_json<T: Scalar>(m: &Matrix<T>) -> Value {
    Value::Array((0..m.rows()).map(|i| vector_json(m.row(i))).collect())
}

pub fn cost_json<T: Scalar>(c: &CostMatrix<T>) -> Value {
    let e = c.entries();
    Value::Array(
        (0..e.rows())
            .map(|i| Value::Array(e.row(i).iter().map(Extended::to_json).collect()))
            .collect(),
    )
}

fn space_json<T: Scalar>(s: &FiniteSpace<T>) -> Value {
    let mut obj = Map::new();
    obj.insert("labels".into(), json!(s.labels));
    if let Some(m) = &s.metric {
        obj.insert("metric".into(), matrix_json(m));
    }
    Value::Object(obj)
}

/// Serializes an instance; `generator` is recorded verbatim when given.
pub fn instance_to_value<T: Scalar>(inst: &Instance<T>, generator: Option<Value>) -> Value {
    let mut obj = Map::new();
    if let Some(g) = generator {
        obj.insert("generator".into(), g);
    }
    obj.insert("mode".into(), json!(T::MODE));
    obj.insert("X".into(), space_json(&inst.space_x));
    obj.insert("Y".into(), space_json(&inst.space_y));
    obj.insert("cost".into(), cost_json(&inst.cost));
    if inst.cost.is_declared_bounded() {
        obj.insert("bounded".into(), Value::Bool(true));
    }
    obj.insert("mu".into(), vector_json(&inst.mu.weights));
    obj.insert("nu".into(), vector_json(&inst.nu.weights));
    Value::Object(obj)
}

pub fn potentials_json<T: Scalar>(pot: &DualPotentials<T>, value: &T) -> Value {
    json!({
        "phi": vector_json(&pot.phi),
        "psi": vector_json(&pot.psi),
        "value": value.to_json(),
    })
}

/// `{"mode", "value", "plan", "basis", "dual"?}`; shared by `solve` and
/// `oracle` output so the two can be diffed.
pub fn solution_json<T: Scalar>(res: &OptimalPlanResult<T>, dual: Option<(&DualPotentials<T>, &T)>) -> Value {
    let mut obj = Map::new();
    obj.insert("mode".into(), json!(T::MODE));
    obj.insert("value".into(), res.value.to_json());
    obj.insert("plan".into(), matrix_json(&res.plan.entries));
    obj.insert(
        "basis".into(),
        Value::Array(res.basis.iter().map(|&(i, j)| json!([i, j])).collect()),
    );
    if let Some((pot, value)) = dual {
        obj.insert("dual".into(), potentials_json(pot, value));
    }
    Value::Object(obj)
}

/// Reads `"plan"` and `"dual": {"phi", "psi"}` back from a solution document.
pub fn solution_from_value<T: Scalar>(doc: &Value) -> Result<(TransportPlan<T>, DualPotentials<T>)> {
    let obj = as_object(doc, "solution")?;
    let plan = TransportPlan::new(parse_matrix(field(obj, "plan", "solution")?, "plan")?);
    let dual = as_object(field(obj, "dual", "solution")?, "dual")?;
    let phi = parse_vector(field(dual, "phi", "dual")?, "dual.phi")?;
    let psi = parse_vector(field(dual, "psi", "dual")?, "dual.psi")?;
    Ok((plan, DualPotentials::new(phi, psi)))
}

fn pass_fail(pass: bool) -> Value {
    Value::String(if pass { "pass" } else { "fail" }.into())
}

fn marginals_json<T: Scalar>(r: &MarginalReport<T>) -> Value {
    json!({
        "row_deviation": r.row_deviation.to_json(),
        "col_deviation": r.col_deviation.to_json(),
        "verdict": pass_fail(r.pass),
    })
}

fn slackness_json<T: Scalar>(v: &[SlacknessViolation<T>]) -> Value {
    Value::Array(
        v.iter()
            .map(|s| {
                json!({
                    "cell": [s.row, s.col],
                    "mass": s.mass.to_json(),
                    "slack": s.slack.to_json(),
                })
            })
            .collect(),
    )
}

fn cyclic_json<T: Scalar>(r: &CyclicReport<T>) -> Value {
    let mut obj = Map::new();
    let mut violations = Vec::new();
    for level in &r.levels {
        obj.insert(format!("k{}", level.k), pass_fail(level.violation.is_none()));
        if let Some(v) = &level.violation {
            violations.push(json!({
                "k": level.k,
                "cells": v.cells.iter().map(|&(i, j)| json!([i, j])).collect::<Vec<_>>(),
                "order": v.order,
                "current": v.current.to_json(),
                "permuted": v.permuted.to_json(),
            }));
        }
    }
    obj.insert("support_size".into(), json!(r.support_size));
    obj.insert("checks".into(), json!(r.checks.to_string()));
    obj.insert("violations".into(), Value::Array(violations));
    Value::Object(obj)
}

fn tolerances_json<T: Scalar>(t: &Tolerances<T>) -> Value {
    json!({
        "gap": t.gap.to_json(),
        "marginal": t.marginal.to_json(),
        "slackness": t.slackness.to_json(),
        "cyclic": t.cyclic.to_json(),
        "support": t.support.to_json(),
    })
}

pub fn certificate_json<T: Scalar>(c: &DualityCertificate<T>) -> Value {
    json!({
        "mode": c.mode,
        "primal_value": c.primal_value.to_json(),
        "dual_value": c.dual_value.to_json(),
        "gap": c.gap.to_json(),
        "marginals": marginals_json(&c.marginals),
        "slackness": slackness_json(&c.slackness),
        "cyclic": cyclic_json(&c.cyclic),
        "tolerances": tolerances_json(&c.tolerances),
        "verdict": pass_fail(c.verdict == Verdict::Pass),
    })
}

fn optional_json<T: Scalar>(v: &Option<T>) -> Value {
    v.as_ref().map_or(Value::Null, Scalar::to_json)
}

/// Plot-ready schedule: `(n, value)` rows plus the limit.
pub fn schedule_json<T: Scalar>(s: &EnvelopeSchedule<T>) -> Value {
    json!({
        "mode": T::MODE,
        "levels": s.levels.iter().map(|l| json!({"n": l.n.to_json(), "value": l.value.to_json()})).collect::<Vec<_>>(),
        "limit": s.limit_value.to_json(),
        "saturation_level": optional_json(&s.saturation_level),
        "saturation_index": optional_json(&s.saturation_index),
    })
}

/// Same data as [`schedule_json`] as `n,value` CSV rows, with the limit on a
/// final `limit,<value>` row.
pub fn schedule_csv<T: Scalar>(s: &EnvelopeSchedule<T>) -> String {
    let mut out = String::from("n,value\n");
    for l in &s.levels {
        out.push_str(&format!("{},{}\n", l.n.render(), l.value.render()));
    }
    out.push_str(&format!("limit,{}\n", s.limit_value.render()));
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
