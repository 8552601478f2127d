//! In-memory CSV tables and their deterministic serialization.

use std::path::Path;

use anyhow::{ensure, Context, Result};

/// Twelve significant digits, shortest form: trailing zeros are trimmed and
/// scientific notation is used outside `1e-5 <= |x| < 1e12`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round once in scientific form so the exponent reflects the rounding.
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Empty cell for missing values.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: impl Into<String>, header: Vec<String>) -> Self {
        Self { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed float column; empty cells become `None`.
    pub fn floats(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let c = self.column(name).with_context(|| format!("no column {name} in {}", self.name))?;
        self.rows
            .iter()
            .map(|r| {
                let cell = &r[c];
                if cell.is_empty() {
                    Ok(None)
                } else {
                    Ok(Some(cell.parse::<f64>().with_context(|| format!("cell {cell:?}"))?))
                }
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let path = dir.join(self.file_name());
        std::fs::write(&path, self.to_bytes()?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read_from(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("table").to_string();
        let mut t = Self::with_header(name, header);
        for rec in r.records() {
            let rec = rec?;
            ensure!(rec.len() == t.header.len(), "ragged row in {}", path.display());
            t.rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_f64(1.0 / 6.0), "0.166666666667");
        assert_eq!(fmt_f64(30.0), "30");
        assert_eq!(fmt_f64(-1.0), "-1");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(3f64.sqrt()), "1.73205080757");
        assert_eq!(fmt_f64(1.5e-9), "1.5e-9");
        assert_eq!(fmt_f64(123456.7890123456), "123456.789012");
        assert_eq!(fmt_f64(0.99999999999999), "1");
        assert_eq!(fmt_f64(2.5e15), "2.5e15");
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["a", "b"]);
        t.push(vec![fmt_f64(0.5), String::new()]);
        t.write_to(dir.path()).unwrap();
        let back = Table::read_from(&dir.path().join("demo.csv")).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.floats("a").unwrap(), vec![Some(0.5)]);
        assert_eq!(back.floats("b").unwrap(), vec![None]);
        assert_eq!(std::fs::read_to_string(dir.path().join("demo.csv")).unwrap(), "a,b\n0.5,\n");
    }
}
