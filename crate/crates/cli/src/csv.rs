//! Minimal CSV writer: one header row, fixed columns, 12 significant digits.

use std::fmt::Write;

pub struct CsvWriter {
    out: String,
    columns: usize,
}

/// Locale-independent scientific notation with 12 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

pub enum Field<'a> {
    Num(f64),
    Int(usize),
    Text(&'a str),
}

impl CsvWriter {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self {
            out,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "row width must match header");
        let line: Vec<String> = values.iter().map(|&v| format_number(v)).collect();
        self.out.push_str(&line.join(","));
        self.out.push('\n');
    }

    pub fn mixed_row(&mut self, fields: &[Field<'_>]) {
        assert_eq!(fields.len(), self.columns, "row width must match header");
        for (k, f) in fields.iter().enumerate() {
            if k > 0 {
                self.out.push(',');
            }
            match f {
                Field::Num(v) => self.out.push_str(&format_number(*v)),
                Field::Int(n) => {
                    let _ = write!(self.out, "{n}");
                }
                Field::Text(t) => self.out.push_str(t),
            }
        }
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}
