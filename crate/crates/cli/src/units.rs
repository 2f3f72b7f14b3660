//! Quantities with explicit unit suffixes, e.g. `"220 pH"` or `"6.55GHz"`.
//!
//! Only the suffixes in [`UNITS`] are accepted; anything else (including SI
//! prefixes not listed) is an error rather than a guess.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dimension {
    Inductance,
    Capacitance,
    Frequency,
    Time,
    Current,
    Voltage,
    Resistance,
    Length,
    /// Line attenuation, Np/m.
    Attenuation,
    /// Per volt, for gate steepness.
    PerVolt,
}

impl Dimension {
    /// Suffix used when writing values back out; its factor is 1.
    pub fn base_unit(self) -> &'static str {
        match self {
            Dimension::Inductance => "H",
            Dimension::Capacitance => "F",
            Dimension::Frequency => "Hz",
            Dimension::Time => "s",
            Dimension::Current => "A",
            Dimension::Voltage => "V",
            Dimension::Resistance => "ohm",
            Dimension::Length => "m",
            Dimension::Attenuation => "Np/m",
            Dimension::PerVolt => "/V",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Inductance => "inductance",
            Dimension::Capacitance => "capacitance",
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
            Dimension::Current => "current",
            Dimension::Voltage => "voltage",
            Dimension::Resistance => "resistance",
            Dimension::Length => "length",
            Dimension::Attenuation => "attenuation",
            Dimension::PerVolt => "inverse voltage",
        };
        f.write_str(s)
    }
}

use Dimension::*;

pub const UNITS: &[(&str, Dimension, f64)] = &[
    ("pH", Inductance, 1e-12),
    ("nH", Inductance, 1e-9),
    ("H", Inductance, 1.0),
    ("fF", Capacitance, 1e-15),
    ("pF", Capacitance, 1e-12),
    ("F", Capacitance, 1.0),
    ("Hz", Frequency, 1.0),
    ("kHz", Frequency, 1e3),
    ("MHz", Frequency, 1e6),
    ("GHz", Frequency, 1e9),
    ("ps", Time, 1e-12),
    ("ns", Time, 1e-9),
    ("us", Time, 1e-6),
    ("s", Time, 1.0),
    ("uA", Current, 1e-6),
    ("A", Current, 1.0),
    ("mV", Voltage, 1e-3),
    ("V", Voltage, 1.0),
    ("ohm", Resistance, 1.0),
    ("kohm", Resistance, 1e3),
    ("Mohm", Resistance, 1e6),
    ("mm", Length, 1e-3),
    ("m", Length, 1.0),
    ("Np/m", Attenuation, 1.0),
    ("/V", PerVolt, 1.0),
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("missing unit (expected {0}, e.g. \"{1}\")")]
    Missing(Dimension, String),
    #[error("unknown unit `{0}`")]
    Unknown(String),
    #[error("unit `{unit}` is a {got}, expected {want}")]
    WrongDimension { unit: String, got: Dimension, want: Dimension },
    #[error("`{0}` is not a number")]
    BadNumber(String),
}

/// Parses `text` as a quantity of dimension `want` and returns it in SI base units.
pub fn parse_quantity(text: &str, want: Dimension) -> Result<f64, UnitError> {
    let t = text.trim();
    // the number ends where the unit starts: the last char that can belong to a float
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && is_exponent(t, i)))
        })
        .map_or(t.len(), |(i, _)| i);
    let (num, unit) = (t[..split].trim(), t[split..].trim());
    if unit.is_empty() {
        return Err(UnitError::Missing(want, format!("{} {}", if num.is_empty() { "1" } else { num }, example(want))));
    }
    let value: f64 = num.parse().map_err(|_| UnitError::BadNumber(num.to_string()))?;
    if !value.is_finite() {
        return Err(UnitError::BadNumber(num.to_string()));
    }
    let &(_, dim, factor) = UNITS
        .iter()
        .find(|(s, _, _)| *s == unit)
        .ok_or_else(|| UnitError::Unknown(unit.to_string()))?;
    if dim != want {
        return Err(UnitError::WrongDimension {
            unit: unit.to_string(),
            got: dim,
            want,
        });
    }
    Ok(value * factor)
}

fn is_exponent(t: &str, i: usize) -> bool {
    // `e` followed by a digit or a sign is an exponent; otherwise it starts a unit
    let prev_digit = t[..i].chars().last().is_some_and(|c| c.is_ascii_digit() || c == '.');
    let next = t[i + 1..].chars().next();
    prev_digit && next.is_some_and(|c| c.is_ascii_digit() || c == '+' || c == '-')
}

fn example(d: Dimension) -> &'static str {
    UNITS.iter().find(|(_, dim, _)| *dim == d).map_or("", |u| u.0)
}

/// Writes `value` (SI) with its base unit so that parsing gives back the same bits.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:e} {}", dim.base_unit())
}
