//! CSV tables with `#` provenance lines and their JSON mirrors.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::cache::write_atomic;
use crate::error::Result;

/// Provenance written at the top of every output.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub experiment: &'static str,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

/// A table of preformatted cells.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, header: &Header) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(
            format!(
                "# filtlab {}\n# experiment: {}\n# config_sha256: {}\n# seed: {}\n",
                env!("CARGO_PKG_VERSION"),
                header.experiment,
                header.config_sha256,
                header.seed.map_or("none".to_string(), |s| s.to_string()),
            )
            .as_bytes(),
        );
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        drop(w);
        Ok(out)
    }

    /// Rows as JSON objects keyed by column; numeric-looking cells become
    /// numbers.
    pub fn to_json_rows(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| (c.clone(), cell_value(v)))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

fn cell_value(v: &str) -> Value {
    if v.is_empty() {
        return Value::Null;
    }
    if let Ok(i) = v.parse::<i64>() {
        return json!(i);
    }
    match v.parse::<f64>() {
        Ok(f) if f.is_finite() => json!(f),
        _ => Value::String(v.to_string()),
    }
}

/// Shortest round-trip formatting; empty for NaN.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Writes `<stem>.csv` and `<stem>.json` for a named table.
pub fn write_table(
    dir: &Path,
    stem: &str,
    header: &Header,
    table: &Table,
    summary: Value,
) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join(format!("{stem}.csv"));
    write_atomic(&csv_path, &table.to_csv(header)?)?;
    let doc = json!({
        "filtlab": env!("CARGO_PKG_VERSION"),
        "header": header,
        "columns": table.columns,
        "rows": table.to_json_rows(),
        "summary": summary,
    });
    let json_path = dir.join(format!("{stem}.json"));
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    write_atomic(&json_path, &bytes)?;
    Ok(vec![csv_path, json_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["n", "c_n"]);
        t.push(vec!["1".into(), num(0.5)]);
        t.push(vec!["2".into(), num(f64::NAN)]);
        let h = Header {
            experiment: "standardness",
            config_sha256: "ab".into(),
            seed: Some(3),
        };
        let s = String::from_utf8(t.to_csv(&h).unwrap()).unwrap();
        assert!(s.ends_with("n,c_n\n1,0.5\n2,\n"), "{s}");
        assert!(s.contains("# seed: 3\n"));
        assert_eq!(t.to_json_rows()[1]["c_n"], Value::Null);
    }
}
