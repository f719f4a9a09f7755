//! Tabular output in CSV or JSON with fixed numeric formatting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Efficiency scores get a marker in paper style when at least this close to one.
const MARK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Num(f64),
    /// An efficiency score; marked when efficient in paper style.
    Score(f64),
    Int(usize),
    Empty,
}

#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub format: Format,
    pub paper: bool,
}

impl Style {
    fn render(&self, cell: &Cell) -> String {
        match cell {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Empty => String::new(),
            Cell::Num(v) if self.paper => format!("{v:.2}"),
            Cell::Num(v) => format!("{v:.6}"),
            Cell::Score(v) if self.paper => {
                let mark = if *v >= 1.0 - MARK_TOL { "*" } else { "" };
                format!("{v:.2}{mark}")
            }
            Cell::Score(v) => format!("{v:.6}"),
        }
    }

    fn json(&self, cell: &Cell) -> Value {
        match cell {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => Value::from(*i),
            Cell::Empty => Value::Null,
            Cell::Num(_) | Cell::Score(_) => {
                let text = self.render(cell);
                match text.parse::<f64>() {
                    Ok(v) if !self.paper => Value::from(v),
                    _ => Value::String(text),
                }
            }
        }
    }
}

pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    /// Writes `<dir>/<stem>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, stem: &str, style: Style) -> anyhow::Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", style.format.extension()));
        let bytes = match style.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.headers)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(|c| style.render(c)))?;
                }
                w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .headers
                            .iter()
                            .cloned()
                            .zip(row.iter().map(|c| style.json(c)))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut text = serde_json::to_string_pretty(&rows)?;
                text.push('\n');
                text.into_bytes()
            }
        };
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}

/// Reads `(id, score)` pairs from a score table written by this tool (CSV or
/// JSON), using the `score` column, else `total`.
pub fn read_scores(path: &Path) -> anyhow::Result<Vec<(String, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let table = if path.extension().is_some_and(|e| e == "json") {
        json_rows(&text).with_context(|| format!("{}: not a score table", path.display()))?
    } else {
        csv_rows(&text)?
    };
    let (headers, rows) = table;
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id = col("id").with_context(|| format!("{}: no `id` column", path.display()))?;
    let score = col("score")
        .or_else(|| col("total"))
        .with_context(|| format!("{}: no `score` or `total` column", path.display()))?;
    rows.iter()
        .map(|r| {
            let text = r[score].trim_end_matches('*');
            let v: f64 = text
                .parse()
                .with_context(|| format!("{}: bad score `{}` for {}", path.display(), r[score], r[id]))?;
            Ok((r[id].clone(), v))
        })
        .collect()
}

type Rows = (Vec<String>, Vec<Vec<String>>);

pub fn csv_rows(text: &str) -> anyhow::Result<Rows> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((headers, rows))
}

fn json_rows(text: &str) -> anyhow::Result<Rows> {
    let rows: Vec<Map<String, Value>> = serde_json::from_str(text)?;
    let headers: Vec<String> = rows.first().map(|r| r.keys().cloned().collect()).unwrap_or_default();
    let cells = rows
        .iter()
        .map(|r| {
            headers
                .iter()
                .map(|h| match &r[h] {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect()
        })
        .collect();
    Ok((headers, cells))
}
