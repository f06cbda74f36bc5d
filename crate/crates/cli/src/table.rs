//! Column tables written as CSV (`{:.16e}` floats, LF endings) or JSON.

use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Int(i) => Value::from(*i),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
        }
    }
}

/// 17 significant digits, so values round-trip exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Appended after the rows as a `#` comment line (CSV) or `"failure"` key.
    pub failure: Option<String>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new(), failure: None }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Numeric(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
        }
        let mut out = String::from_utf8(w.into_inner().map_err(|e| CliError::Numeric(e.to_string()))?)
            .expect("csv output is utf-8");
        if let Some(f) = &self.failure {
            out.push_str("# FAILED: ");
            out.push_str(&f.replace('\n', " "));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let m: Map<String, Value> = self.columns.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        top.insert("columns".into(), Value::from(self.columns.clone()));
        top.insert("rows".into(), Value::Array(rows));
        if let Some(f) = &self.failure {
            top.insert("failure".into(), Value::String(f.clone()));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("json encoding");
        s.push('\n');
        s
    }
}

/// Parsed CSV: header, string records and the failure marker if present.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedCsv {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub failure: Option<String>,
}

impl ParsedCsv {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column; `NaN` cells parse as NaN.
    pub fn floats(&self, name: &str) -> CliResult<Vec<f64>> {
        let i = self.column(name).ok_or_else(|| CliError::Config(format!("no column {name}")))?;
        self.rows
            .iter()
            .map(|r| r[i].parse::<f64>().map_err(|e| CliError::Config(format!("column {name}: {e}"))))
            .collect()
    }
}

pub fn parse_csv(text: &str) -> CliResult<ParsedCsv> {
    let failure = text.lines().find_map(|l| l.strip_prefix("# FAILED: ")).map(str::to_string);
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let err = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    let columns = r.headers().map_err(err)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()).map_err(err))
        .collect::<CliResult<_>>()?;
    Ok(ParsedCsv { columns, rows, failure })
}
