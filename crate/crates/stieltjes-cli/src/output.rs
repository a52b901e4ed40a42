// SPDX-License-Identifier: Apache-2.0
//! Series writers. Complex values become `re`/`im` column pairs in CSV and
//! `[re, im]` arrays in JSON.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

/// One sample of a solution.
#[derive(Debug, Clone, Copy)]
pub struct SolutionRow {
    pub t: f64,
    pub v: Complex64,
    pub dv: Complex64,
    pub ddv: Complex64,
    pub residual: f64,
}

/// A solution series with its provenance line.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: Vec<(String, String)>,
    pub rows: Vec<SolutionRow>,
}

impl Series {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn integral_table(rows: &[(f64, Complex64)], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("t,re,im\n");
            for (t, z) in rows {
                writeln!(s, "{t},{},{}", z.re, z.im).unwrap();
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rows.iter().map(|(t, z)| json!({"t": t, "value": pair(*z)})).collect();
            serde_json::to_string_pretty(&json!({ "rows": rows })).unwrap() + "\n"
        }
    }
}

/// Comment lines (one per series) followed by a single header and all rows.
/// `key` names the column distinguishing series, if any.
pub fn solution_table(series: &[Series], key: Option<&str>, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::new();
            for se in series {
                let fields: Vec<String> = se.label.iter().map(|(k, v)| format!("{k}={v}")).collect();
                writeln!(s, "# {} max_residual={:e}", fields.join(" "), se.max_residual()).unwrap();
            }
            if let Some(k) = key {
                write!(s, "{k},").unwrap();
            }
            s.push_str("t,re_v,im_v,re_dv,im_dv,re_ddv,im_ddv,residual\n");
            for se in series {
                let prefix = key.and_then(|k| se.label.iter().find(|(n, _)| n == k)).map(|(_, v)| format!("{v},")).unwrap_or_default();
                for r in &se.rows {
                    writeln!(
                        s,
                        "{prefix}{},{},{},{},{},{},{},{:e}",
                        r.t, r.v.re, r.v.im, r.dv.re, r.dv.im, r.ddv.re, r.ddv.im, r.residual
                    )
                    .unwrap();
                }
            }
            s
        }
        Format::Json => {
            let out: Vec<Value> = series
                .iter()
                .map(|se| {
                    let mut obj = serde_json::Map::new();
                    for (k, v) in &se.label {
                        obj.insert(k.clone(), v.parse::<f64>().map(|x| json!(x)).unwrap_or_else(|_| json!(v)));
                    }
                    obj.insert("max_residual".into(), json!(se.max_residual()));
                    let rows: Vec<Value> = se
                        .rows
                        .iter()
                        .map(|r| json!({"t": r.t, "v": pair(r.v), "dv": pair(r.dv), "ddv": pair(r.ddv), "residual": r.residual}))
                        .collect();
                    obj.insert("rows".into(), Value::Array(rows));
                    Value::Object(obj)
                })
                .collect();
            serde_json::to_string_pretty(&json!({ "series": out })).unwrap() + "\n"
        }
    }
}

pub fn verify_table(rows: &[stieltjes::verify::Row], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("suite,max_residual,tolerance,status\n");
            for r in rows {
                writeln!(s, "{},{:e},{:e},{}", r.name, r.max_residual, r.tolerance, if r.pass { "pass" } else { "FAIL" }).unwrap();
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({"suite": r.name, "max_residual": if r.max_residual.is_finite() { json!(r.max_residual) } else { Value::Null },
                           "tolerance": r.tolerance, "pass": r.pass, "error": r.error})
                })
                .collect();
            serde_json::to_string_pretty(&json!({ "suites": rows })).unwrap() + "\n"
        }
    }
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}
