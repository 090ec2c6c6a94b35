//! Audit reports and their serialization.

use std::io;

use eqsym::linalg::{CVec, Mat};
use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Map, Value};

pub const REPORT_FIELDS: [&str; 7] = [
    "command",
    "inputs",
    "results",
    "tolerances",
    "seed",
    "exit_code",
    "wall_time_s",
];

/// Compact JSON with every float written to 17 significant digits.
struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", sig17(value))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_string(v: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    v.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// Finite floats as numbers, the rest as strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

/// Row-major nested `[re, im]` pairs.
pub fn mat(m: &Mat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([num(m[(i, j)].re), num(m[(i, j)].im)]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn cvec(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| json!([num(z.re), num(z.im)])).collect())
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// A decided quantity together with the tolerance that decided it.
pub fn tagged(value: Value, tol: f64) -> Value {
    json!({ "value": value, "tol": num(tol) })
}

#[derive(Debug, Clone)]
pub struct Input {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub inputs: Vec<Input>,
    pub results: Vec<Value>,
    pub tolerances: Value,
    pub seed: u64,
    pub exit_code: i32,
    pub wall_time_s: f64,
}

impl Report {
    pub fn to_value(&self) -> Value {
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|i| json!({ "path": i.path, "sha256": i.sha256 }))
            .collect();
        json!({
            "command": self.command,
            "inputs": inputs,
            "results": self.results,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "exit_code": self.exit_code,
            "wall_time_s": num(self.wall_time_s),
        })
    }
}

/// Checks that a parsed report has the expected shape.
pub fn validate(v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("report is not an object")?;
    for f in REPORT_FIELDS {
        if !obj.contains_key(f) {
            return Err(format!("missing field `{f}`"));
        }
    }
    if obj.len() != REPORT_FIELDS.len() {
        return Err("unexpected report fields".into());
    }
    obj["command"].as_str().ok_or("`command` is not a string")?;
    obj["seed"]
        .as_u64()
        .ok_or("`seed` is not an unsigned integer")?;
    obj["wall_time_s"]
        .as_f64()
        .ok_or("`wall_time_s` is not a number")?;
    if !matches!(obj["exit_code"].as_i64(), Some(0 | 2)) {
        return Err("`exit_code` must be 0 or 2".into());
    }
    let inputs = obj["inputs"].as_array().ok_or("`inputs` is not an array")?;
    for i in inputs {
        let sha = i["sha256"].as_str().ok_or("input without sha256")?;
        if sha.len() != 64 || !sha.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(format!("bad digest {sha:?}"));
        }
        i["path"].as_str().ok_or("input without path")?;
    }
    let results = obj["results"]
        .as_array()
        .ok_or("`results` is not an array")?;
    if results.len() != inputs.len() {
        return Err("one result per input expected".into());
    }
    let tol: &Map<String, Value> = obj["tolerances"]
        .as_object()
        .ok_or("`tolerances` is not an object")?;
    tol.get("tol")
        .and_then(Value::as_f64)
        .ok_or("`tolerances.tol` missing")?;
    for r in results {
        check_tagged(r)?;
    }
    Ok(())
}

/// Every `{"value", "tol"}` object must carry a numeric tolerance.
fn check_tagged(v: &Value) -> Result<(), String> {
    match v {
        Value::Object(m) => {
            if m.contains_key("value")
                && m.len() == 2
                && m.get("tol").and_then(Value::as_f64).is_none()
            {
                return Err("tagged value without numeric tolerance".into());
            }
            m.values().try_for_each(check_tagged)
        }
        Value::Array(a) => a.iter().try_for_each(check_tagged),
        _ => Ok(()),
    }
}

/// One row of a long-format series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub step: usize,
    pub metric: &'static str,
    pub value: f64,
}

pub fn csv(series: &[(usize, Vec<SeriesRow>)]) -> String {
    let mut out = String::from("input,step,metric,value\n");
    for (input, rows) in series {
        for r in rows {
            out.push_str(&format!(
                "{input},{},{},{}\n",
                r.step,
                r.metric,
                sig17(r.value)
            ));
        }
    }
    out
}
