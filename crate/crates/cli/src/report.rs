use serde::Serialize;
use serde_json::{json, Value};

use crate::{OutputFormat, RunConfig, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS, EXIT_UNCERTIFIED};

pub const SCHEMA: &str = "krein-shift/1";

#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Debug)]
pub struct Report {
    pub exit_code: u8,
    pub result: Value,
    pub text: Vec<String>,
    pub table: Table,
}

impl Report {
    pub fn new(exit_code: u8, result: impl Serialize, text: Vec<String>, table: Table) -> Self {
        Report {
            exit_code,
            result: serde_json::to_value(result).expect("report values serialize"),
            text,
            table,
        }
    }
}

pub fn status_name(code: u8) -> &'static str {
    match code {
        EXIT_PASS => "pass",
        EXIT_FAIL => "fail",
        EXIT_UNCERTIFIED => "uncertified",
        EXIT_INCONCLUSIVE => "inconclusive",
        _ => "error",
    }
}

pub fn render(report: &Report, config: &RunConfig) -> Result<String, Box<dyn std::error::Error>> {
    match config.output {
        OutputFormat::Json => {
            let doc = json!({
                "schema": SCHEMA,
                "command": config.command,
                "config": config,
                "status": status_name(report.exit_code),
                "exit_code": report.exit_code,
                "result": report.result,
            });
            Ok(serde_json::to_string_pretty(&doc)? + "\n")
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&report.table.header)?;
            for row in &report.table.rows {
                w.write_record(row)?;
            }
            Ok(String::from_utf8(w.into_inner()?)?)
        }
        OutputFormat::Text => {
            let mut out = format!("{} [{}]\n", config.command, config.weight_spec);
            for line in &report.text {
                out.push_str("  ");
                out.push_str(line);
                out.push('\n');
            }
            out.push_str(&format!("status: {}\n", status_name(report.exit_code)));
            Ok(out)
        }
    }
}

/// Shortest round-trip decimal, or `null` for absent values.
pub fn num(x: Option<f64>) -> String {
    x.map_or_else(|| "null".into(), |v| format!("{v:?}"))
}
