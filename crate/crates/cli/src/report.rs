//! Reports: checks against tolerances, the failure list, and stable
//! serialization (sorted keys, floats at 17 significant digits).

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum FailureKind {
    Tolerance,
    Domain,
}

#[derive(Clone, Debug)]
pub struct Failure {
    pub item: String,
    pub kind: FailureKind,
    pub reason: String,
    pub value: Option<f64>,
}

/// Accumulates per-item results and the checks they are held to.
#[derive(Debug, Default)]
pub struct Checks {
    pub max_residual: f64,
    pub failures: Vec<Failure>,
    seen: bool,
}

impl Checks {
    /// Records `value ≤ tol`; NaN always fails.
    pub fn check(&mut self, item: impl Into<String>, value: f64, tol: f64) -> bool {
        self.seen = true;
        if !self.max_residual.is_nan() && (value.is_nan() || value > self.max_residual) {
            self.max_residual = value;
        }
        let ok = value <= tol;
        if !ok {
            self.failures.push(Failure {
                item: item.into(),
                kind: FailureKind::Tolerance,
                reason: format!("residual exceeds tolerance {tol:e}"),
                value: Some(value),
            });
        }
        ok
    }

    /// Records `value > threshold`, for checks that demand a violation.
    pub fn expect_above(&mut self, item: impl Into<String>, value: f64, threshold: f64) -> bool {
        let ok = value > threshold;
        if !ok {
            self.failures.push(Failure {
                item: item.into(),
                kind: FailureKind::Tolerance,
                reason: format!("expected a value above {threshold:e}"),
                value: Some(value),
            });
        }
        ok
    }

    pub fn domain(&mut self, item: impl Into<String>, err: impl std::fmt::Display) {
        self.failures.push(Failure {
            item: item.into(),
            kind: FailureKind::Domain,
            reason: err.to_string(),
            value: None,
        });
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        match self.failures.iter().map(|f| f.kind).max() {
            None => 0,
            Some(FailureKind::Tolerance) => 1,
            Some(FailureKind::Domain) => 3,
        }
    }

    pub fn max_residual_value(&self) -> Value {
        if self.seen {
            float(self.max_residual)
        } else {
            Value::Null
        }
    }

    pub fn failures_value(&self) -> Value {
        Value::Array(
            self.failures
                .iter()
                .map(|f| {
                    json!({
                        "item": f.item,
                        "kind": match f.kind {
                            FailureKind::Tolerance => "tolerance",
                            FailureKind::Domain => "domain",
                        },
                        "reason": f.reason,
                        "value": f.value.map_or(Value::Null, float),
                    })
                })
                .collect(),
        )
    }
}

/// JSON number for finite floats, `null` otherwise.
pub fn float(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

pub fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| float(x)).collect())
}

pub fn matrix(m: &nalgebra::DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|i| floats(&m.row(i).iter().copied().collect::<Vec<_>>())).collect())
}

pub fn report(command: &str, config_echo: Value, results: Value, checks: &Checks) -> Value {
    let mut top = Map::new();
    top.insert("command".into(), Value::String(command.into()));
    top.insert("config_echo".into(), config_echo);
    top.insert("results".into(), results);
    top.insert("max_residual".into(), checks.max_residual_value());
    top.insert("pass".into(), Value::Bool(checks.pass()));
    top.insert("failures".into(), checks.failures_value());
    Value::Object(top)
}

/// Pretty JSON with keys sorted and every float written as `{:.16e}`.
pub fn to_stable_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn format_number(n: &serde_json::Number) -> String {
    if n.is_f64() {
        format_float(n.as_f64().expect("f64 number"))
    } else {
        n.to_string()
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&format_number(n)),
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            // Numeric rows stay on one line.
            if items.iter().all(|x| matches!(x, Value::Number(_) | Value::Null)) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, level);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, x, level + 1);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                indent(out, level + 1);
                let _ = write!(out, "{}: ", Value::String((*k).clone()));
                write_value(out, &map[*k], level + 1);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
}

/// Rows of a trajectory table.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| if v.is_nan() { "NaN".to_string() } else { format_float(*v) }))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits_and_keys_sort() {
        let v = json!({"b": 0.1, "a": [1, 2.5, null], "c": {"z": true, "y": "s"}});
        let text = to_stable_json(&v);
        assert_eq!(
            text,
            "{\n  \"a\": [1, 2.5000000000000000e0, null],\n  \"b\": 1.0000000000000001e-1,\n  \"c\": {\n    \"y\": \"s\",\n    \"z\": true\n  }\n}\n"
        );
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"].as_f64(), Some(0.1));
    }

    #[test]
    fn checks_track_exit_codes() {
        let mut c = Checks::default();
        assert!(c.check("a", 1e-9, 1e-7));
        assert_eq!(c.exit_code(), 0);
        assert!(!c.check("b", f64::NAN, 1e-7));
        assert_eq!(c.exit_code(), 1);
        assert!(c.max_residual.is_nan());
        c.domain("c", "zero divisor");
        assert_eq!(c.exit_code(), 3);
    }

    #[test]
    fn csv_table() {
        let t = Table { header: vec!["tau".into(), "x".into()], rows: vec![vec![0.0, f64::NAN]] };
        assert_eq!(t.to_csv().unwrap(), "tau,x\n0.0000000000000000e0,NaN\n");
    }
}
