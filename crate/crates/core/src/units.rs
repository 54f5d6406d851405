//! Parsing of command-line quantities.

use std::f64::consts::TAU;

use crate::error::{Error, Result};

fn number(text: &str, what: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("cannot parse {what} from {text:?}")))?;
    if !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{what} must be finite, got {text:?}")));
    }
    Ok(v)
}

fn split_suffix<'a>(text: &'a str, suffixes: &[(&str, f64)]) -> (&'a str, f64) {
    let t = text.trim();
    for &(suffix, factor) in suffixes {
        if let Some(stripped) = t.strip_suffix(suffix) {
            return (stripped, factor);
        }
    }
    (t, 1.0)
}

/// Ordinary frequency with optional `Hz`, `kHz` or `MHz` suffix, returned in rad/s.
pub fn parse_frequency(text: &str) -> Result<f64> {
    let (value, factor) = split_suffix(text, &[("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)]);
    Ok(number(value, "frequency")? * factor * TAU)
}

/// Multiple of the nominal Rabi frequency, written `1.5`, `1.5x` or `1.5Ω`.
pub fn parse_rabi_multiple(text: &str) -> Result<f64> {
    let (value, _) = split_suffix(text, &[("Ω", 1.0), ("x", 1.0)]);
    let v = number(value, "multiple of the Rabi frequency")?;
    if v <= 0.0 {
        return Err(Error::InvalidArgument(format!("range must be positive, got {text:?}")));
    }
    Ok(v)
}

/// Fraction written `0.1` or `10%`.
pub fn parse_fraction(text: &str) -> Result<f64> {
    let (value, factor) = split_suffix(text, &[("%", 0.01)]);
    let v = number(value, "fraction")? * factor;
    if !(0.0..1.0).contains(&v) {
        return Err(Error::InvalidArgument(format!("fraction must be in [0, 1), got {text:?}")));
    }
    Ok(v)
}

/// Comma-separated temperatures in µK (an optional `uK`/`µK` suffix is
/// accepted per item), returned in kelvin.
pub fn parse_temperatures(text: &str) -> Result<Vec<f64>> {
    let temps = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (value, _) = split_suffix(item, &[("uK", 1.0), ("µK", 1.0)]);
            let t = number(value, "temperature")?;
            if t <= 0.0 {
                return Err(Error::InvalidArgument(format!("temperature must be positive, got {item:?}")));
            }
            Ok(t * 1e-6)
        })
        .collect::<Result<Vec<f64>>>()?;
    if temps.is_empty() {
        return Err(Error::InvalidArgument("no temperatures given".into()));
    }
    Ok(temps)
}
