use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float17(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => float_json(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

/// 17 significant digits, scientific notation.
pub fn float17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn float_json(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// Command name plus its full, ordered parameter set.
#[derive(Debug, Clone)]
pub struct Meta {
    pub command: &'static str,
    pub params: Vec<(&'static str, String)>,
}

impl Meta {
    pub fn new(command: &'static str) -> Self {
        Self { command, params: Vec::new() }
    }

    pub fn with(mut self, key: &'static str, value: impl ToString) -> Self {
        self.params.push((key, value.to_string()));
        self
    }

    /// Float parameter in shortest round-trip scientific form.
    pub fn with_f(self, key: &'static str, value: f64) -> Self {
        self.with(key, format!("{value:e}"))
    }

    pub fn comment_line(&self) -> String {
        let mut line = format!("# lcm-spectra {VERSION} {}", self.command);
        for (k, v) in &self.params {
            let _ = write!(line, " {k}={v}");
        }
        line
    }

    fn json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command));
        m.insert("version".into(), Value::from(VERSION));
        for (k, v) in &self.params {
            m.insert((*k).into(), Value::from(v.as_str()));
        }
        Value::Object(m)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone)]
pub enum Body {
    Table(Table),
    /// A single JSON object; rendered as a one-row table in CSV mode.
    Document(Map<String, Value>),
}

/// `(x, y)` series written by `--emit-plot-data`.
#[derive(Debug, Clone)]
pub struct PlotData {
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub meta: Meta,
    pub body: Body,
    pub plot: Option<PlotData>,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json()).expect("serializable");
                s.push('\n');
                s
            }
        }
    }

    fn render_csv(&self) -> String {
        let mut out = self.meta.comment_line();
        out.push('\n');
        match &self.body {
            Body::Table(t) => {
                out.push_str(&t.header.join(","));
                out.push('\n');
                for row in &t.rows {
                    out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
            }
            Body::Document(doc) => {
                out.push_str(&doc.keys().cloned().collect::<Vec<_>>().join(","));
                out.push('\n');
                let values: Vec<String> = doc
                    .values()
                    .map(|v| match v {
                        Value::Number(n) => n.as_f64().map(float17).unwrap_or_else(|| n.to_string()),
                        Value::String(s) => s.clone(),
                        Value::Null => String::new(),
                        other => other.to_string(),
                    })
                    .collect();
                out.push_str(&values.join(","));
                out.push('\n');
            }
        }
        out
    }

    fn json(&self) -> Value {
        match &self.body {
            Body::Table(t) => {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            t.header.iter().zip(row).map(|(k, c)| ((*k).to_string(), c.json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut m = Map::new();
                m.insert("meta".into(), self.meta.json());
                m.insert("rows".into(), Value::Array(rows));
                Value::Object(m)
            }
            Body::Document(doc) => {
                let mut m = doc.clone();
                m.insert("meta".into(), self.meta.json());
                Value::Object(m)
            }
        }
    }

    pub fn render_plot(&self) -> Option<String> {
        let plot = self.plot.as_ref()?;
        let mut out = self.meta.comment_line();
        let _ = write!(out, "\n{},{}\n", plot.x_label, plot.y_label);
        for (x, y) in &plot.points {
            let _ = writeln!(out, "{},{}", float17(*x), float17(*y));
        }
        Some(out)
    }
}

/// Writes to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            match lock.write_all(text.as_bytes()).and_then(|_| lock.flush()) {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}
