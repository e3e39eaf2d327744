use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};

use crate::config::{CliResult, Failure, Format};

/// One table cell. Floats are written with the shortest representation that round-trips.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i128),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i128> for Cell {
    fn from(v: i128) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    pub fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
            // exact digits; values beyond 64 bits rely on arbitrary-precision numbers
            Cell::Int(v) => Value::Number(v.to_string().parse().expect("integer literal")),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Missing => Value::Null,
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            Cell::Missing => String::new(),
            Cell::Num(v) if !v.is_finite() => String::new(),
            // CSV fields are unquoted, so commas in free text are replaced
            Cell::Text(s) => s.replace([',', '\n', '\r'], ";"),
            other => other.to_json().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::to_csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.to_json())).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Output of one run: metadata plus a main table and optional extra sections.
#[derive(Debug, Clone)]
pub struct Report {
    pub meta: Value,
    pub main: Table,
    pub sections: Vec<Table>,
}

impl Report {
    pub fn to_json(&self) -> Value {
        let mut top = Map::new();
        top.insert("meta".into(), self.meta.clone());
        top.insert("rows".into(), self.main.to_json());
        for t in &self.sections {
            top.insert(t.name.to_string(), t.to_json());
        }
        Value::Object(top)
    }

    /// Writes the report. JSON goes to one file; CSV puts each extra section in
    /// `<stem>_<section>.csv` and the metadata in `<stem>.meta.json` next to the main file.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> CliResult<()> {
        match (format, out) {
            (Format::Json, None) => write_stdout(&json_text(&self.to_json())),
            (Format::Json, Some(p)) => write_file(p, &json_text(&self.to_json())),
            (Format::Csv, None) => {
                let mut s = self.main.to_csv();
                for t in &self.sections {
                    s.push_str(&format!("\n# {}\n", t.name));
                    s.push_str(&t.to_csv());
                }
                write_stdout(&s)
            }
            (Format::Csv, Some(p)) => {
                write_file(p, &self.main.to_csv())?;
                for t in &self.sections {
                    write_file(&sibling(p, &format!("_{}.csv", t.name)), &t.to_csv())?;
                }
                write_file(&sibling(p, ".meta.json"), &json_text(&self.meta))
            }
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// `dir/stem<suffix>` for an output path `dir/stem.ext`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Failure::Check(format!("cannot write {}: {e}", path.display())))
}

fn write_stdout(text: &str) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Failure::Check(format!("cannot write output: {e}")))
}
