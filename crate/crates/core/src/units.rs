//! Unit handling at the configuration and CLI boundary. Internally every
//! quantity is SI (meters, diopters = 1/m).

use crate::error::{Error, Result};

/// Units accepted at the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Unit {
    Meter,
    Millimeter,
    Micrometer,
    Diopter,
    PerMeter,
    /// Pixels, converted to meters through the given pitch (meters/pixel).
    Pixel { pitch: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Length,
    Power,
}

impl Unit {
    /// Parses a unit suffix. Pixels need a pitch and are not parsed here.
    pub fn parse(s: &str) -> Result<Unit> {
        match s.trim() {
            "m" => Ok(Unit::Meter),
            "mm" => Ok(Unit::Millimeter),
            "um" | "µm" | "μm" => Ok(Unit::Micrometer),
            "dpt" => Ok(Unit::Diopter),
            "1/m" => Ok(Unit::PerMeter),
            other => Err(Error::Parse(format!("unknown unit suffix '{other}'"))),
        }
    }

    fn dimension(self) -> Dimension {
        match self {
            Unit::Meter | Unit::Millimeter | Unit::Micrometer | Unit::Pixel { .. } => {
                Dimension::Length
            }
            Unit::Diopter | Unit::PerMeter => Dimension::Power,
        }
    }

    /// Multiplier from this unit to its SI base.
    fn to_si(self) -> f64 {
        match self {
            Unit::Meter | Unit::Diopter | Unit::PerMeter => 1.0,
            Unit::Millimeter => 1e-3,
            Unit::Micrometer => 1e-6,
            Unit::Pixel { pitch } => pitch,
        }
    }

    fn name(self) -> String {
        match self {
            Unit::Meter => "m".into(),
            Unit::Millimeter => "mm".into(),
            Unit::Micrometer => "µm".into(),
            Unit::Diopter => "dpt".into(),
            Unit::PerMeter => "1/m".into(),
            Unit::Pixel { pitch } => format!("px@{pitch}m"),
        }
    }
}

/// Converts `value` between compatible units.
pub fn unit_convert(value: f64, from: Unit, to: Unit) -> Result<f64> {
    if from.dimension() != to.dimension() {
        return Err(Error::Units {
            from: from.name(),
            to: to.name(),
        });
    }
    for u in [from, to] {
        if let Unit::Pixel { pitch } = u {
            if !(pitch > 0.0 && pitch.is_finite()) {
                return Err(Error::Parameter(format!("pixel pitch must be positive, got {pitch}")));
            }
        }
    }
    if from == to {
        return Ok(value);
    }
    Ok(value * from.to_si() / to.to_si())
}

/// Parses a quantity such as `0.25mm` or `10.7 dpt` and returns it in SI.
/// A bare number is taken as already SI.
pub fn parse_quantity(text: &str) -> Result<f64> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+'
                || ((c == 'e' || c == 'E') && i > 0 && looks_like_exponent(&t[i..])))
        })
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, suffix) = t.split_at(split);
    let value = parse_number(num, t)?;
    let suffix = suffix.trim();
    if suffix.is_empty() {
        return Ok(value);
    }
    let unit = Unit::parse(suffix)?;
    Ok(value * unit.to_si())
}

fn looks_like_exponent(rest: &str) -> bool {
    let mut chars = rest.chars().skip(1);
    match chars.next() {
        Some(c) if c.is_ascii_digit() => true,
        Some('-') | Some('+') => matches!(chars.next(), Some(c) if c.is_ascii_digit()),
        _ => false,
    }
}

fn parse_number(num: &str, whole: &str) -> Result<f64> {
    let v: f64 = num
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("cannot parse quantity '{whole}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite quantity '{whole}'")));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_prefixes() {
        let v = unit_convert(0.25, Unit::Millimeter, Unit::Meter).unwrap();
        assert!((v - 2.5e-4).abs() < 1e-18);
        assert_eq!(unit_convert(10.7, Unit::Diopter, Unit::PerMeter).unwrap(), 10.7);
    }

    #[test]
    fn pitch_defines_pixels() {
        let pitch = 23.44e-6;
        let v = unit_convert(23.44, Unit::Micrometer, Unit::Pixel { pitch }).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn incompatible_pair_is_rejected() {
        assert!(unit_convert(1.0, Unit::Meter, Unit::Diopter).is_err());
        assert!(unit_convert(1.0, Unit::Meter, Unit::Pixel { pitch: 0.0 }).is_err());
    }

    #[test]
    fn quantities_with_suffixes() {
        assert_eq!(parse_quantity("10.7dpt").unwrap(), 10.7);
        assert!((parse_quantity("0.25mm").unwrap() - 2.5e-4).abs() < 1e-18);
        assert!((parse_quantity("20 um").unwrap() - 2e-5).abs() < 1e-18);
        assert!((parse_quantity("1e-3m").unwrap() - 1e-3).abs() < 1e-18);
        assert_eq!(parse_quantity("0.1031").unwrap(), 0.1031);
        assert_eq!(parse_quantity("9.7 1/m").unwrap(), 9.7);
        assert!(parse_quantity("3 furlongs").is_err());
        assert!(parse_quantity("mm").is_err());
    }
}
