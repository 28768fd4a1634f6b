use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Value};

use crate::error::Result;

/// Table writer: a `#`-prefixed JSON metadata line, then CSV (header + rows)
/// or one JSON object per row, then optional `#`-prefixed JSON trailers.
pub struct Output {
    w: Box<dyn Write>,
    json: bool,
    columns: Vec<&'static str>,
}

impl Output {
    pub fn open(path: Option<&Path>, json: bool) -> Result<Self> {
        let w: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { w, json, columns: Vec::new() })
    }

    pub fn begin(&mut self, meta: &Value, columns: &[&'static str]) -> Result<()> {
        self.comment(meta)?;
        self.columns = columns.to_vec();
        if !self.json {
            writeln!(self.w, "{}", columns.join(","))?;
        }
        Ok(())
    }

    pub fn row(&mut self, values: Vec<Value>) -> Result<()> {
        debug_assert_eq!(values.len(), self.columns.len());
        if self.json {
            let obj: Map<String, Value> = self.columns.iter().map(|c| c.to_string()).zip(values).collect();
            writeln!(self.w, "{}", Value::Object(obj))?;
        } else {
            let cells: Vec<String> = values.iter().map(csv_cell).collect();
            writeln!(self.w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn comment(&mut self, v: &Value) -> Result<()> {
        writeln!(self.w, "# {v}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => f.to_string(),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// `Value` for an optional float, `null` when absent or non-finite.
pub fn num(x: Option<f64>) -> Value {
    x.filter(|v| v.is_finite()).map_or(Value::Null, Value::from)
}
