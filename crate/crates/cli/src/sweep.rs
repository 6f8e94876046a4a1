//! Cartesian parameter sweeps over a base scenario.

use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use toml::{Table, Value};

use crate::error::CliError;
use crate::run::{format_number, simulate, write_file};
use crate::scenario::{parse_toml, Scenario};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// Dotted key inside the base scenario, e.g. `params.mu`.
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub axes: Vec<Axis>,
    pub base: Table,
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_values: Vec<Value>,
    pub r0: Option<f64>,
    pub r0f_initial: Option<f64>,
    pub verdict: Option<&'static str>,
    /// Mean of the two fitted front speeds.
    pub k0: Option<f64>,
    pub error: Option<String>,
}

impl SweepSpec {
    pub fn runs(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Axis values of every run, last axis varying fastest.
    pub fn combinations(&self) -> Vec<Vec<Value>> {
        let mut out = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v.clone());
                        next
                    })
                })
                .collect();
        }
        out
    }

    /// Base scenario with `values` substituted along the axes.
    pub fn scenario_for(&self, values: &[Value]) -> Result<Scenario, CliError> {
        let mut table = self.base.clone();
        for (axis, v) in self.axes.iter().zip(values) {
            set_path(&mut table, &axis.path, v.clone())?;
        }
        Value::Table(table)
            .try_into::<Scenario>()
            .map_err(|e| CliError::invalid("base", &e.to_string()))
    }

    fn check(&self) -> Result<(), CliError> {
        if self.axes.is_empty() {
            return Err(CliError::invalid("axes", "at least one axis is required"));
        }
        if self.workers == 0 {
            return Err(CliError::invalid("workers", "must be at least 1"));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(CliError::invalid(&axis.path, "axis has no values"));
            }
            // Catches misspelled paths and wrongly typed values before any run starts.
            for v in &axis.values {
                let mut table = self.base.clone();
                set_path(&mut table, &axis.path, v.clone())?;
                Value::Table(table)
                    .try_into::<Scenario>()
                    .map_err(|e| CliError::invalid(&axis.path, &e.to_string()))?;
            }
        }
        self.scenario_for(&self.combinations()[0]).map(|_| ())
    }
}

fn set_path(table: &mut Table, path: &str, value: Value) -> Result<(), CliError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::invalid(path, "empty path segment"));
    }
    let (last, parents) = keys.split_last().expect("split yields one segment");
    let mut cursor = table;
    for key in parents {
        cursor = match cursor.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new())) {
            Value::Table(t) => t,
            _ => return Err(CliError::invalid(path, &format!("`{key}` is not a table"))),
        };
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec, CliError> {
    let spec: SweepSpec = parse_toml(text)?;
    spec.check()?;
    Ok(spec)
}

fn run_one(spec: &SweepSpec, values: Vec<Value>, seed: u64) -> SweepRow {
    let outcome = spec
        .scenario_for(&values)
        .and_then(|s| simulate(&s, seed).map(|o| o.report));
    match outcome {
        Ok(r) => SweepRow {
            axis_values: values,
            r0: Some(r.r0),
            r0f_initial: Some(r.r0f_initial),
            verdict: Some(r.verdict),
            k0: r.k0_right.zip(r.k0_left).map(|(a, b)| 0.5 * (a + b)),
            error: None,
        },
        Err(e) => SweepRow {
            axis_values: values,
            r0: None,
            r0f_initial: None,
            verdict: None,
            k0: None,
            error: Some(e.to_string()),
        },
    }
}

/// Runs every combination on `spec.workers` threads; rows come back in
/// combination order whatever the worker count.
pub fn run_sweep(spec: &SweepSpec, seed: u64) -> Result<Vec<SweepRow>, CliError> {
    spec.check()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::invalid("workers", &e.to_string()))?;
    let combos = spec.combinations();
    Ok(pool.install(|| combos.into_par_iter().map(|v| run_one(spec, v, seed)).collect()))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn value_cell(v: &Value) -> String {
    match v {
        Value::Float(f) => format_number(*f),
        Value::Integer(i) => i.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn summary_csv(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut header: Vec<String> = spec.axes.iter().map(|a| a.path.clone()).collect();
    header.extend(["r0", "r0f_initial", "verdict", "k0", "error"].map(String::from));
    let mut out = header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",");
    out.push('\n');
    let num = |x: Option<f64>| x.map(format_number).unwrap_or_default();
    for row in rows {
        let mut cells: Vec<String> = row.axis_values.iter().map(value_cell).collect();
        cells.push(num(row.r0));
        cells.push(num(row.r0f_initial));
        cells.push(row.verdict.unwrap_or_default().to_string());
        cells.push(num(row.k0));
        cells.push(row.error.clone().unwrap_or_default());
        out.push_str(&cells.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Runs the sweep and writes `summary.csv` into `out`.
pub fn write_sweep(spec: &SweepSpec, out: &Path, seed: u64) -> Result<Vec<SweepRow>, CliError> {
    let rows = run_sweep(spec, seed)?;
    write_file(out, "summary.csv", &summary_csv(spec, &rows))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"
workers = 2

[[axes]]
path = "init.h0"
values = [0.5, 1.0]

[[axes]]
path = "params.mu"
values = [1.0, 2.0, 3.0]

[base.params]
beta_v = 0.1
beta_h = 0.1
r_v = 0.2
d_v = 0.2
r_h = 0.1
d_h = 0.1
gamma_h = 0.1
q = 0.0
n_v_star = 1.0
n_h_star = 1.0
dv = 0.01
dh = 1.0
mu = 1.0

[base.init]
h0 = 2.0
amplitude_v = 0.0
amplitude_h = 0.5

[base.solver]
n_xi = 101
t_max = 1.0
"#;

    #[test]
    fn combinations_are_lexicographic() {
        let spec = parse_sweep(SWEEP).unwrap();
        assert_eq!(spec.runs(), 6);
        let c = spec.combinations();
        assert_eq!(c[0], vec![Value::Float(0.5), Value::Float(1.0)]);
        assert_eq!(c[1], vec![Value::Float(0.5), Value::Float(2.0)]);
        assert_eq!(c[3], vec![Value::Float(1.0), Value::Float(1.0)]);
        let s = spec.scenario_for(&c[5]).unwrap();
        assert_eq!((s.init.h0, s.params.mu), (1.0, 3.0));
    }

    #[test]
    fn empty_axes_are_rejected() {
        let base = &SWEEP[SWEEP.find("[base.params]").unwrap()..];
        let err = parse_sweep(&format!("axes = []\n{base}")).unwrap_err();
        assert!(err.to_string().contains("axes"), "{err}");
    }

    #[test]
    fn misspelled_path_is_rejected() {
        let text = SWEEP.replace("params.mu", "params.muu");
        assert!(parse_sweep(&text).is_err());
    }

    #[test]
    fn failures_stay_in_their_row() {
        let text = SWEEP.replace("values = [1.0, 2.0, 3.0]", "values = [1.0, -1.0]");
        let spec = parse_sweep(&text).unwrap();
        let rows = run_sweep(&spec, 0).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].error.is_none() && rows[0].verdict.is_some());
        assert!(rows[1].error.as_deref().unwrap().contains("mu"));
        let csv = summary_csv(&spec, &rows);
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("init.h0,params.mu,r0,r0f_initial,verdict,k0,error\n"));
    }

    #[test]
    fn csv_fields_are_quoted_when_needed() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
