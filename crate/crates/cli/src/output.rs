//! CSV tables and the JSON envelope.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

/// Shortest round-trip decimal; exponent form for very small or large magnitudes.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<u8> for Cell {
    fn from(v: u8) -> Self {
        Cell::I(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

#[derive(Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> csv::Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
    }
}

/// Single JSON document: tool, version, command, parameter echo and result.
pub fn envelope<P: Serialize, R: Serialize>(command: &str, params: &P, result: &R) -> serde_json::Result<String> {
    let doc = serde_json::json!({
        "tool": env!("CARGO_BIN_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "parameters": serde_json::to_value(params)?,
        "result": serde_json::to_value(result)?,
    });
    let mut s = serde_json::to_string_pretty::<Value>(&doc)?;
    s.push('\n');
    Ok(s)
}

pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_formatting() {
        for v in [0.1, 1.0 / 3.0, 1e-20, 6.02e23, -0.998, 0.0, 12345.678] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(0.998), "0.998");
        assert_eq!(fmt_f64(1e-7), "1e-7");
    }

    #[test]
    fn csv_quoting() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["x,y".into(), 1.5.into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n\"x,y\",1.5\n");
    }
}
