use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::Format;
use crate::error::{contract, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Plot-ready table: one row per result, then optional `#` footer lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub footer: Vec<String>,
}

impl ReportTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            if row.len() != self.columns.len() {
                return contract("CSV row width does not match the header");
            }
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format!("{v:.16e}"),
                    Cell::Text(t) if t.contains([',', '"', '\n']) => {
                        format!("\"{}\"", t.replace('"', "\"\""))
                    }
                    Cell::Text(t) => t.clone(),
                    Cell::Empty => String::new(),
                })
                .collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        for line in &self.footer {
            let _ = writeln!(s, "#{line}");
        }
        Ok(s)
    }
}

/// JSON report: config echo, one entry per result, and the failure list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub run: Value,
    pub results: Vec<Value>,
    pub failures: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

/// Writes `<dir>/<stem>.json` and/or `<dir>/<stem>.csv`.
///
/// The table must have one row per result.
pub fn emit_report(
    doc: &ReportDoc,
    table: &ReportTable,
    format: Format,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>> {
    if doc.results.is_empty() {
        return contract("refusing to emit a report with no results");
    }
    if table.rows.len() != doc.results.len() {
        return contract("CSV rows and JSON results disagree in number");
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if matches!(format, Format::Json | Format::Both) {
        let path = dir.join(format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(doc)
            .map_err(|e| crate::Error::Contract(format!("report is not serializable: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text)?;
        written.push(path);
    }
    if matches!(format, Format::Csv | Format::Both) {
        let path = dir.join(format!("{stem}.csv"));
        std::fs::write(&path, table.to_csv()?)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(n: usize) -> (ReportDoc, ReportTable) {
        let mut t = ReportTable::new(&["name", "value"]);
        let mut results = Vec::new();
        for i in 0..n {
            let v = 0.1 * i as f64 + 1.0 / 3.0;
            t.push(vec![Cell::from("x,y"), Cell::Num(v)]);
            results.push(serde_json::json!({ "value": v }));
        }
        (
            ReportDoc {
                run: Value::Null,
                results,
                failures: vec![],
                summary: None,
            },
            t,
        )
    }

    #[test]
    fn empty_results_are_a_contract_error() {
        let dir = tempfile::tempdir().unwrap();
        let (d, t) = doc(0);
        assert!(matches!(
            emit_report(&d, &t, Format::Both, dir.path(), "r"),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn csv_quotes_text_and_keeps_full_precision() {
        let (_, t) = doc(2);
        let csv = t.to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "\"x,y\",3.3333333333333331e-1");
        let back: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(back, 0.1 + 1.0 / 3.0);
    }
}
