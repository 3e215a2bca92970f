//! CSV tables and flat JSON reports.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use super::HarnessError;

/// Doubles in `e` notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
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

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Text with a leading `#` provenance line, then the header row.
    pub fn render(&self, provenance: &str) -> Result<String, HarnessError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(vec![]);
        w.write_record(&self.header).map_err(|e| HarnessError::Io(e.to_string()))?;
        for row in &self.rows {
            let mut fields = Vec::with_capacity(row.len());
            for (c, name) in row.iter().zip(&self.header) {
                fields.push(match c {
                    Cell::Num(v) if !v.is_finite() => return Err(HarnessError::NonFinite(name.clone())),
                    Cell::Num(v) => fmt_f64(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                    Cell::Empty => String::new(),
                });
            }
            w.write_record(&fields).map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        let body = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        let mut out = format!("# {provenance}\r\n");
        out.push_str(&String::from_utf8(body).map_err(|e| HarnessError::Io(e.to_string()))?);
        Ok(out)
    }

    pub fn write(&self, path: &Path, provenance: &str) -> Result<(), HarnessError> {
        write_text(path, &self.render(provenance)?)
    }
}

/// Flat JSON object; every number is checked for finiteness on insert.
#[derive(Debug, Clone, Default)]
pub struct Report {
    map: Map<String, Value>,
    bad: Option<String>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        match serde_json::Number::from_f64(v) {
            Some(n) => {
                self.map.insert(key.into(), Value::Number(n));
            }
            None => {
                self.bad.get_or_insert_with(|| key.to_string());
            }
        }
        self
    }

    pub fn opt(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        match v {
            Some(v) => self.num(key, v),
            None => {
                self.map.insert(key.into(), Value::Null);
                self
            }
        }
    }

    pub fn nums(&mut self, key: &str, vs: &[f64]) -> &mut Self {
        if vs.iter().any(|v| !v.is_finite()) {
            self.bad.get_or_insert_with(|| key.to_string());
            return self;
        }
        self.map.insert(key.into(), Value::Array(vs.iter().map(|&v| serde_json::json!(v)).collect()));
        self
    }

    pub fn int(&mut self, key: &str, v: usize) -> &mut Self {
        self.map.insert(key.into(), Value::from(v as u64));
        self
    }

    pub fn flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.map.insert(key.into(), Value::Bool(v));
        self
    }

    pub fn text(&mut self, key: &str, v: &str) -> &mut Self {
        self.map.insert(key.into(), Value::String(v.into()));
        self
    }

    pub fn render(&self) -> Result<String, HarnessError> {
        if let Some(k) = &self.bad {
            return Err(HarnessError::NonFinite(k.clone()));
        }
        let mut s = serde_json::to_string_pretty(&self.map).map_err(|e| HarnessError::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        write_text(path, &self.render()?)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [2.0 / 3.0, -1e-300, 12.0, std::f64::consts::PI * 1e17] {
            let s = fmt_f64(v);
            assert!(s.contains('e'));
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["label", "x", "d"]);
        t.push(vec!["a,b".into(), 0.5.into(), None.into()]);
        let s = t.render("cfg abc").unwrap();
        let lines: Vec<&str> = s.split("\r\n").collect();
        assert_eq!(lines[0], "# cfg abc");
        assert_eq!(lines[1], "label,x,d");
        assert_eq!(lines[2], "\"a,b\",5.0000000000000000e-1,");
        t.push(vec!["n".into(), f64::NAN.into(), None.into()]);
        assert!(matches!(t.render("p"), Err(HarnessError::NonFinite(c)) if c == "x"));
    }

    #[test]
    fn json_rejects_nan() {
        let mut r = Report::new();
        r.num("sigma0", 2.0 / 3.0).int("n", 3).opt("rate", None);
        assert!(r.render().unwrap().contains("\"sigma0\""));
        r.num("bad", f64::INFINITY);
        assert!(r.render().is_err());
    }
}
