//! CSV and JSON-lines emitters with a commented header.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

use crate::config::SweepConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) if x.is_nan() => "nan".into(),
            Cell::Num(x) => x.to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(n) => json!(n),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `# key: value` header lines.
    pub notes: Vec<(String, String)>,
    pub summary: Option<Value>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            summary: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    JsonLines,
}

pub fn write_table<W: Write>(out: W, format: Format, cfg: &SweepConfig, table: &Table) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(out, cfg, table),
        Format::JsonLines => write_jsonl(out, cfg, table),
    }
}

fn write_csv<W: Write>(mut out: W, cfg: &SweepConfig, table: &Table) -> io::Result<()> {
    writeln!(out, "# {} {} (schema {SCHEMA_VERSION})", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command: {}", cfg.mode.command())?;
    writeln!(out, "# units: {}", cfg.units())?;
    for (k, v) in &table.notes {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "# config: {}", serde_json::to_string(cfg)?)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv))?;
    }
    let mut out = w.into_inner().map_err(|e| e.into_error())?;
    if let Some(s) = &table.summary {
        writeln!(out, "# summary: {s}")?;
    }
    out.flush()
}

fn write_jsonl<W: Write>(mut out: W, cfg: &SweepConfig, table: &Table) -> io::Result<()> {
    let mut meta = Map::new();
    meta.insert("tool".into(), json!(env!("CARGO_PKG_NAME")));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("schema".into(), json!(SCHEMA_VERSION));
    meta.insert("command".into(), json!(cfg.mode.command()));
    meta.insert("units".into(), json!(cfg.units()));
    for (k, v) in &table.notes {
        meta.insert(k.clone(), json!(v));
    }
    meta.insert("config".into(), serde_json::to_value(cfg)?);
    writeln!(out, "{}", json!({ "meta": meta }))?;
    for row in &table.rows {
        let obj: Map<String, Value> = table.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
        writeln!(out, "{}", Value::Object(obj))?;
    }
    if let Some(s) = &table.summary {
        writeln!(out, "{}", json!({ "summary": s }))?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mode;

    fn sample() -> Table {
        let mut t = Table::new(["x", "label"]);
        t.push(vec![Cell::Num(0.5), "a,b".into()]);
        t.push(vec![Cell::Num(f64::NAN), "c".into()]);
        t.summary = Some(json!({"n": 2}));
        t
    }

    #[test]
    fn csv_quotes_and_marks_nan() {
        let mut buf = Vec::new();
        write_table(&mut buf, Format::Csv, &SweepConfig::defaults(Mode::EpScan), &sample()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("0.5,\"a,b\"\n"));
        assert!(text.contains("nan,c\n"));
        assert!(text.ends_with("# summary: {\"n\":2}\n"));
    }

    #[test]
    fn json_lines_parse() {
        let mut buf = Vec::new();
        write_table(&mut buf, Format::JsonLines, &SweepConfig::defaults(Mode::EpScan), &sample()).unwrap();
        let lines: Vec<Value> = String::from_utf8(buf)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0]["meta"]["schema"], json!(SCHEMA_VERSION));
        assert_eq!(lines[2]["x"], Value::Null);
        assert_eq!(lines[3]["summary"]["n"], json!(2));
    }
}
