//! Report records and their JSON / CSV renderings.

use revud_core::validate::{Check, Relation};
use revud_core::HermitianOperator;
use serde_json::{Map, Value};

/// Number of significant digits kept for every floating value.
pub const SIG_DIGITS: usize = 12;

/// Finite values are rounded to [`SIG_DIGITS`] significant digits;
/// non-finite ones become the strings `"+inf"`, `"-inf"`, `"nan"`.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        return Value::String("nan".into());
    }
    if x.is_infinite() {
        return Value::String(if x > 0.0 { "+inf" } else { "-inf" }.into());
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().expect("formatted float parses");
    // -0 prints as "-0.0"; keep the output free of signed zeros
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    serde_json::Number::from_f64(rounded).map(Value::Number).expect("finite")
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Row-major `[[re, im], ...]` rows, the same layout as the input files.
pub fn matrix(h: &HermitianOperator) -> Value {
    let m = h.matrix();
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array((0..m.ncols()).map(|j| Value::Array(vec![num(m[(i, j)].re), num(m[(i, j)].im)])).collect())
            })
            .collect(),
    )
}

pub fn matrices(hs: &[HermitianOperator]) -> Value {
    Value::Array(hs.iter().map(matrix).collect())
}

/// Ordered key/value builder for one record.
#[derive(Default, Debug, Clone)]
pub struct Record(Map<String, Value>);

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.0.insert(key.to_string(), v.into());
        self
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.0.insert(key.to_string(), v.into());
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }
}

fn check_value(c: &Check) -> Value {
    Record::new()
        .with("name", c.name.clone())
        .with("lhs", num(c.lhs))
        .with(
            "relation",
            match c.relation {
                Relation::AtMost => "<=",
                Relation::Equal => "==",
            },
        )
        .with("rhs", num(c.rhs))
        .with("tolerance", num(c.tol))
        .with("passed", c.passed)
        .into_value()
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub input: Option<String>,
    pub parameters: Record,
    pub results: Vec<Record>,
    pub checks: Vec<Check>,
    pub certificates: Option<Value>,
}

impl Report {
    pub fn new(command: &str, input: Option<String>, parameters: Record) -> Self {
        Self { command: command.into(), input, parameters, results: Vec::new(), checks: Vec::new(), certificates: None }
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_value(&self) -> Value {
        let mut r = Record::new()
            .with("command", self.command.clone())
            .with("input", self.input.clone().map(Value::String).unwrap_or(Value::Null))
            .with("parameters", self.parameters.clone().into_value())
            .with("results", Value::Array(self.results.iter().map(|r| r.clone().into_value()).collect()))
            .with("checks", Value::Array(self.checks.iter().map(check_value).collect()));
        if let Some(c) = &self.certificates {
            r.set("certificates", c.clone());
        }
        r.into_value()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per result record (or per check when there are no results).
    /// Columns are the union of keys in first-seen order, prefixed by the
    /// command; nested values are embedded as JSON text.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Map<String, Value>> = if self.results.is_empty() {
            self.checks.iter().map(|c| as_map(check_value(c))).collect()
        } else {
            self.results.iter().map(|r| r.0.clone()).collect()
        };
        let mut columns: Vec<String> = Vec::new();
        for row in &rows {
            for k in row.keys() {
                if !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec!["command".to_string()];
        header.extend(columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for row in &rows {
            let mut rec = vec![self.command.clone()];
            rec.extend(columns.iter().map(|c| row.get(c).map(cell).unwrap_or_default()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

fn as_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("records are objects"),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_twelve_digits() {
        assert_eq!(num(std::f64::consts::PI).to_string(), "3.14159265359");
        assert_eq!(num(f64::INFINITY), Value::String("+inf".into()));
        assert_eq!(num(-0.0).to_string(), "0.0");
        assert_eq!(num(1.0e-20).to_string(), "1e-20");
    }

    #[test]
    fn empty_report_has_empty_checks() {
        let r = Report::new("qre", None, Record::new());
        let v = r.to_value();
        assert_eq!(v["checks"], Value::Array(vec![]));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut r = Report::new("state-game", Some("x.json".into()), Record::new().with("eta", nums(&[0.0, 0.3])));
        r.results.push(Record::new().with("value", num(0.1 + 0.2)).with("inf", num(f64::INFINITY)));
        let text = r.to_json();
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, r.to_value());
        assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", text);
    }

    #[test]
    fn csv_has_one_row_per_record() {
        let mut r = Report::new("state-game", None, Record::new());
        for eta in [0.0, 0.3, 0.7] {
            r.results.push(Record::new().with("eta", num(eta)).with("success_probability", num(0.5 * (1.0 - eta))));
        }
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "command,eta,success_probability");
        assert_eq!(lines[2], "state-game,0.3,0.35");
    }
}
