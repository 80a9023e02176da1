//! Report assembly and CSV/JSON emission.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// One reported number with its tolerance and the route that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct ReportValue {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub route: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckFlag {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Tabular payload. Every cell of the table shares `tolerance` and `route`.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub tolerance: f64,
    pub route: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub subcommand: String,
    pub inputs: BTreeMap<String, Value>,
    pub values: Vec<ReportValue>,
    pub checks: Vec<CheckFlag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
    pub timings_s: BTreeMap<String, f64>,
    pub passed: bool,
}

impl EnergyReport {
    pub fn new(subcommand: &str) -> Self {
        EnergyReport {
            subcommand: subcommand.to_string(),
            inputs: BTreeMap::new(),
            values: Vec::new(),
            checks: Vec::new(),
            table: None,
            timings_s: BTreeMap::new(),
            passed: true,
        }
    }

    pub fn input(&mut self, key: &str, v: impl Serialize) {
        self.inputs.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn value(&mut self, name: &str, value: f64, tolerance: f64, route: &str) {
        self.values.push(ReportValue { name: name.to_string(), value, tolerance, route: route.to_string() });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.passed &= passed;
        self.checks.push(CheckFlag { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn timing(&mut self, key: &str, seconds: f64) {
        self.timings_s.insert(key.to_string(), seconds);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The table if there is one, otherwise values followed by checks as
    /// `name,value,tolerance,route` rows with checks reported as 1 or 0.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        if let Some(t) = &self.table {
            w.write_record(&t.columns).expect("in-memory write");
            for row in &t.rows {
                w.write_record(row.iter().map(|v| fmt_float(*v))).expect("in-memory write");
            }
        } else {
            w.write_record(["name", "value", "tolerance", "route"]).expect("in-memory write");
            for v in &self.values {
                w.write_record([v.name.clone(), fmt_float(v.value), fmt_float(v.tolerance), v.route.clone()]).expect("in-memory write");
            }
            for c in &self.checks {
                let flag = if c.passed { "1" } else { "0" };
                w.write_record([format!("check:{}", c.name), flag.to_string(), String::new(), "check".to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }
}

/// Shortest representation that parses back to the same double.
pub fn fmt_float(v: f64) -> String {
    format!("{v:?}")
}
