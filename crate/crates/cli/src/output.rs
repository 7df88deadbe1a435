//! Tables written as CSV or JSON with identical field values.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde_json::{Map, Number};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

/// One table cell. Numbers are rendered once as text so that both formats
/// carry the same digits.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Null,
    Int(i64),
    Num(f64),
    /// Fixed notation with 12 decimals (amplitude dumps).
    Fixed(f64),
    Str(String),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Self {
        Value::Str(s.into())
    }

    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Value::Null, Value::Num)
    }

    pub fn text(&self) -> String {
        match self {
            Value::Null => String::new(),
            Value::Int(i) => i.to_string(),
            Value::Num(x) => fmt_sig(*x),
            Value::Fixed(x) => fmt_fixed(*x),
            Value::Str(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Num(_) | Value::Fixed(_) => self
                .text()
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map_or(serde_json::Value::Null, serde_json::Value::Number),
            Value::Str(s) => serde_json::Value::String(s.clone()),
        }
    }
}

/// Ten significant digits, trailing zeros dropped. Fixed notation for
/// `1e-4 <= |x| < 1e10`, scientific otherwise.
pub fn fmt_sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string().to_lowercase();
    }
    if x == 0.0 {
        return "0".into();
    }
    // the exponent after rounding to ten digits decides the notation
    let sci = format!("{x:.9e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..10).contains(&exp) {
        let decimals = (9 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".into()
        } else {
            t.into()
        }
    } else {
        s.into()
    }
}

pub fn fmt_fixed(x: f64) -> String {
    let s = format!("{x:.12}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        format!("{:.12}", 0.0)
    } else {
        s
    }
}

/// `re+imi` with both parts at ten significant digits.
pub fn fmt_complex(z: Complex64) -> String {
    let im = fmt_sig(z.im);
    if im.starts_with('-') {
        format!("{}{im}i", fmt_sig(z.re))
    } else {
        format!("{}+{im}i", fmt_sig(z.re))
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    /// Adds a row from `(column, value)` pairs; unnamed columns are empty.
    pub fn push(&mut self, fields: Vec<(&str, Value)>) {
        let mut row = vec![Value::Null; self.columns.len()];
        for (name, v) in fields {
            let i = self
                .columns
                .iter()
                .position(|c| *c == name)
                .unwrap_or_else(|| panic!("unknown column {name}"));
            row[i] = v;
        }
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: impl Write) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv(&self, out: impl Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::text))?;
        }
        w.flush()
    }

    fn write_json(&self, mut out: impl Write) -> std::io::Result<()> {
        let records: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, serde_json::Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::to_writer_pretty(&mut out, &records)?;
        writeln!(out)?;
        out.flush()
    }
}

/// Writes `table` to `path`, or to stdout when no path is given.
pub fn emit(table: &Table, format: Format, path: Option<&Path>) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| match path {
        Some(p) => CliError::Io(format!("cannot write {}: {e}", p.display())),
        None => CliError::Io(format!("cannot write to stdout: {e}")),
    };
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(io_err)?;
            table
                .write(format, std::io::BufWriter::new(f))
                .map_err(io_err)
        }
        None => table
            .write(format, std::io::stdout().lock())
            .map_err(io_err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(2.0 / 3.0), "0.6666666667");
        assert_eq!(fmt_sig(0.015625), "0.015625");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(4.125e-7), "4.125e-7");
        assert_eq!(fmt_sig(1.0 / 3.0 * 1e-5), "3.333333333e-6");
        assert_eq!(fmt_sig(123456.789), "123456.789");
        assert_eq!(fmt_sig(9.99999999999), "10");
        assert_eq!(fmt_sig(0.00099999999999), "0.001");
        assert_eq!(fmt_sig(-0.25), "-0.25");
        assert_eq!(fmt_sig(3e12), "3e12");
    }

    #[test]
    fn complex_and_fixed() {
        assert_eq!(fmt_complex(Complex64::new(0.5, -0.25)), "0.5-0.25i");
        assert_eq!(fmt_complex(Complex64::new(1.0, 0.0)), "1+0i");
        assert_eq!(fmt_fixed(0.5), "0.500000000000");
        assert_eq!(fmt_fixed(-1e-17), "0.000000000000");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new(&["a", "b", "c"]);
        t.push(vec![("a", Value::str("x")), ("b", Value::Num(1.0 / 3.0))]);
        let mut csv_out = Vec::new();
        t.write(Format::Csv, &mut csv_out).unwrap();
        assert_eq!(
            String::from_utf8(csv_out).unwrap(),
            "a,b,c\nx,0.3333333333,\n"
        );
        let mut json_out = Vec::new();
        t.write(Format::Json, &mut json_out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json_out).unwrap();
        assert_eq!(v[0]["b"].to_string(), "0.3333333333");
        assert!(v[0]["c"].is_null());
    }
}
