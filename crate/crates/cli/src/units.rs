//! "<number> <unit>" strings to SI. The space is optional.

use std::f64::consts::{LN_10, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Length,
    Frequency,
    Energy,
    Loss,
    Nonlinear,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Length => "length",
            Dim::Frequency => "frequency",
            Dim::Energy => "energy",
            Dim::Loss => "loss",
            Dim::Nonlinear => "nonlinear coefficient",
        }
    }

    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Length => &[("m", 1.0), ("cm", 1e-2), ("mm", 1e-3), ("um", 1e-6), ("µm", 1e-6), ("nm", 1e-9)],
            // Cyclic frequency; converted to rad/s by the caller when needed.
            Dim::Frequency => &[("Hz", 1.0), ("kHz", 1e3), ("MHz", 1e6), ("GHz", 1e9), ("THz", 1e12)],
            Dim::Energy => &[("J", 1.0), ("nJ", 1e-9), ("pJ", 1e-12), ("fJ", 1e-15)],
            // Power attenuation α in 1/m; dB values go through 10 log10 e.
            Dim::Loss => &[
                ("/m", 1.0),
                ("1/m", 1.0),
                ("/cm", 1e2),
                ("1/cm", 1e2),
                ("dB/m", LN_10 / 10.0),
                ("dB/cm", 100.0 * LN_10 / 10.0),
            ],
            Dim::Nonlinear => &[("/W/m", 1.0), ("1/(W m)", 1.0), ("1/(W*m)", 1.0), ("/(W m)", 1.0)],
        }
    }
}

/// Parses a quantity into SI (Hz for frequencies).
pub fn parse(text: &str, dim: Dim) -> Result<f64, String> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '+' || c == '-' || ((c == 'e' || c == 'E') && exponent_ok(t, i)))
        })
        .map_or(t.len(), |(i, _)| i);
    let (num, unit) = (t[..split].trim(), t[split..].trim());
    let value: f64 = num.parse().map_err(|_| format!("'{text}': expected '<number> <{} unit>'", dim.name()))?;
    if unit.is_empty() {
        return Err(format!("'{text}': missing {} unit ({})", dim.name(), unit_list(dim)));
    }
    let scale = dim
        .units()
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, s)| *s)
        .ok_or_else(|| format!("'{text}': unknown {} unit '{unit}' ({})", dim.name(), unit_list(dim)))?;
    let v = value * scale;
    if !v.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(v)
}

// An 'e' only belongs to the number when a digit (optionally signed) follows.
fn exponent_ok(t: &str, i: usize) -> bool {
    let rest = &t.as_bytes()[i + 1..];
    match rest.first() {
        Some(b'+') | Some(b'-') => rest.get(1).is_some_and(|b| b.is_ascii_digit()),
        Some(b) => b.is_ascii_digit(),
        None => false,
    }
}

fn unit_list(dim: Dim) -> String {
    dim.units().iter().map(|u| u.0).collect::<Vec<_>>().join(", ")
}

pub fn angular(text: &str) -> Result<f64, String> {
    parse(text, Dim::Frequency).map(|f| 2.0 * PI * f)
}

/// Scalars ("1pJ"), lists ("1pJ,5pJ") and ranges ("1pJ..600pJ:13",
/// inclusive, evenly spaced).
pub fn parse_values(text: &str, dim: Dim) -> Result<Vec<f64>, String> {
    if let Some((range, count)) = text.rsplit_once(':') {
        let (a, b) = range.split_once("..").ok_or_else(|| format!("'{text}': ranges look like 'a..b:count'"))?;
        let (a, b) = (parse(a, dim)?, parse(b, dim)?);
        let n: usize = count.trim().parse().map_err(|_| format!("'{text}': bad point count"))?;
        return match n {
            0 => Err(format!("'{text}': zero points")),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
        };
    }
    text.split(',').map(|s| parse(s, dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_per_cm() {
        let a = parse("0.1 dB/cm", Dim::Loss).unwrap();
        assert!((a - std::f64::consts::LN_10).abs() < 1e-12, "{a}");
    }

    #[test]
    fn compact_and_exponent_forms() {
        assert_eq!(parse("1pJ", Dim::Energy).unwrap(), 1e-12);
        assert!((parse("1.5e2 MHz", Dim::Frequency).unwrap() - 1.5e8).abs() < 1e-6);
        assert!((parse("-0.49 GHz", Dim::Frequency).unwrap() + 0.49e9).abs() < 1e-3);
        assert!((parse("1554.2nm", Dim::Length).unwrap() - 1554.2e-9).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_units() {
        assert!(parse("3", Dim::Energy).unwrap_err().contains("missing"));
        assert!(parse("3 parsec", Dim::Length).unwrap_err().contains("unknown"));
        assert!(parse("GHz", Dim::Frequency).is_err());
    }

    #[test]
    fn ranges_and_lists() {
        let r = parse_values("100pJ..600pJ:6", Dim::Energy).unwrap();
        assert_eq!(r.len(), 6);
        assert!((r[1] - 200e-12).abs() < 1e-24);
        assert_eq!(parse_values("1pJ,2pJ", Dim::Energy).unwrap(), vec![1e-12, 2e-12]);
        assert!(parse_values("1pJ..2pJ:0", Dim::Energy).is_err());
    }
}
