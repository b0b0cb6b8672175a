use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// A command's result. `ok` drives the exit status.
pub struct Report {
    pub body: Value,
    pub ok: bool,
    /// Printed verbatim instead of `body` in JSON mode (certificate lines).
    pub raw_json: Option<String>,
}

impl Report {
    pub fn new(body: impl Serialize, ok: bool) -> Result<Self> {
        Ok(Self {
            body: serde_json::to_value(body)?,
            ok,
            raw_json: None,
        })
    }

    /// Tags an object report with the seed its sampled numbers came from.
    pub fn seeded(mut self, seed: u64) -> Self {
        if let Value::Object(m) = &mut self.body {
            m.insert("seed".into(), seed.into());
        }
        self
    }

    pub fn emit(&self, format: Format) -> Result<()> {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        match format {
            Format::Json => match &self.raw_json {
                Some(raw) => out.write_all(raw.as_bytes())?,
                None => writeln!(out, "{}", serde_json::to_string_pretty(&self.body)?)?,
            },
            Format::Csv => {
                let (header, rows) = tabulate(&self.body);
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&header)?;
                for r in rows {
                    w.write_record(&r)?;
                }
                w.flush()?;
            }
            Format::Table => {
                let (header, rows) = tabulate(&self.body);
                if rows.len() == 1 {
                    let width = header.iter().map(|h| h.chars().count()).max().unwrap_or(0);
                    for (h, v) in header.iter().zip(&rows[0]) {
                        writeln!(out, "{h:<width$}  {v}")?;
                    }
                } else {
                    let widths: Vec<usize> = (0..header.len())
                        .map(|c| {
                            rows.iter()
                                .map(|r| r[c].chars().count())
                                .chain([header[c].chars().count()])
                                .max()
                                .unwrap_or(0)
                        })
                        .collect();
                    let line = |cells: &[String]| {
                        cells
                            .iter()
                            .zip(&widths)
                            .map(|(c, w)| format!("{c:<w$}"))
                            .collect::<Vec<_>>()
                            .join("  ")
                    };
                    writeln!(out, "{}", line(&header).trim_end())?;
                    for r in &rows {
                        writeln!(out, "{}", line(r).trim_end())?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Flattens a report into a header and rows: an array of objects gives one
/// row per element, anything else a single row.
pub fn tabulate(v: &Value) -> (Vec<String>, Vec<Vec<String>>) {
    let records: Vec<Map<String, Value>> = match v {
        Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
            items.iter().map(|i| flatten(i)).collect()
        }
        _ => vec![flatten(v)],
    };
    let mut header: Vec<String> = Vec::new();
    for r in &records {
        for k in r.keys() {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let rows = records
        .iter()
        .map(|r| {
            header
                .iter()
                .map(|h| r.get(h).map(cell).unwrap_or_default())
                .collect()
        })
        .collect();
    (header, rows)
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Dotted keys for nested objects and arrays of non-scalars; arrays of
/// scalars stay whole as compact JSON.
fn flatten(v: &Value) -> Map<String, Value> {
    fn go(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(m) => {
                for (k, x) in m {
                    go(&key(k), x, out);
                }
            }
            Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
                for (i, x) in items.iter().enumerate() {
                    go(&key(&i.to_string()), x, out);
                }
            }
            other => {
                out.insert(
                    if prefix.is_empty() {
                        "value".into()
                    } else {
                        prefix.into()
                    },
                    other.clone(),
                );
            }
        }
    }
    let mut out = Map::new();
    go("", v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn flattens_nested_objects_and_keeps_scalar_arrays() {
        let (h, rows) = tabulate(&json!({"a": {"b": 1}, "c": [1, 2], "d": [{"e": true}]}));
        assert_eq!(h, ["a.b", "c", "d.0.e"]);
        assert_eq!(
            rows,
            vec![vec!["1".to_string(), "[1,2]".into(), "true".into()]]
        );
    }

    #[test]
    fn arrays_of_objects_become_rows() {
        let (h, rows) = tabulate(&json!([{"id": 1, "x": "p"}, {"id": 2, "y": 3}]));
        assert_eq!(h, ["id", "x", "y"]);
        assert_eq!(rows[1], vec!["2".to_string(), String::new(), "3".into()]);
    }
}
