//! Compact command-line specifications: `log:lo:hi:n`, `list:a,b,c`,
//! `lo:hi` windows and power denominators.

use super::ParseError;
use crate::analysis::Grid;
use crate::cycle::PowerDenominator;

fn number(what: &'static str, s: &str) -> Result<f64, ParseError> {
    let v: f64 = s.trim().parse().map_err(|_| ParseError::new(what, format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(ParseError::new(what, format!("not finite: {s:?}")));
    }
    Ok(v)
}

/// Parses `log:lo:hi:n` or `list:v1,v2,...` into a validated grid.
pub fn parse_grid(s: &str) -> Result<Grid, ParseError> {
    const WHAT: &str = "grid";
    let (kind, rest) = s.split_once(':').ok_or_else(|| ParseError::new(WHAT, "expected log:lo:hi:n or list:v1,v2,..."))?;
    let grid = match kind.trim() {
        "log" => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [lo, hi, n] = parts.as_slice() else {
                return Err(ParseError::new(WHAT, "log grid needs lo:hi:n"));
            };
            let count: usize = n.trim().parse().map_err(|_| ParseError::new(WHAT, format!("bad point count {n:?}")))?;
            if count > 100_000 {
                return Err(ParseError::new(WHAT, "too many grid points"));
            }
            Grid::log(number(WHAT, lo)?, number(WHAT, hi)?, count)
        }
        "list" => {
            if rest.trim().is_empty() {
                return Err(ParseError::new(WHAT, "empty grid"));
            }
            let values = rest.split(',').map(|v| number(WHAT, v)).collect::<Result<Vec<_>, _>>()?;
            Grid::explicit(values)
        }
        other => return Err(ParseError::new(WHAT, format!("unknown grid kind {other:?}"))),
    };
    grid.map_err(|e| ParseError::new(WHAT, e.to_string()))
}

/// Parses `lo:hi` with `0 < lo < hi`.
pub fn parse_window(s: &str) -> Result<(f64, f64), ParseError> {
    const WHAT: &str = "fit window";
    let (lo, hi) = s.split_once(':').ok_or_else(|| ParseError::new(WHAT, "expected lo:hi"))?;
    let (lo, hi) = (number(WHAT, lo)?, number(WHAT, hi)?);
    if !(lo > 0.0 && hi > lo) {
        return Err(ParseError::new(WHAT, "need 0 < lo < hi"));
    }
    Ok((lo, hi))
}

/// `tau2_only`, `tau1_plus_tau2`, or a positive explicit cycle time.
pub fn parse_power_denominator(s: &str) -> Result<PowerDenominator, ParseError> {
    const WHAT: &str = "power denominator";
    match s.trim() {
        "tau2_only" | "tau2" => Ok(PowerDenominator::Tau2Only),
        "tau1_plus_tau2" | "tau1+tau2" => Ok(PowerDenominator::Tau1PlusTau2),
        other => {
            let t = number(WHAT, other.strip_prefix("explicit:").unwrap_or(other))?;
            if t <= 0.0 {
                return Err(ParseError::new(WHAT, "explicit cycle time must be positive"));
            }
            Ok(PowerDenominator::Explicit(t))
        }
    }
}

pub fn format_power_denominator(p: &PowerDenominator) -> String {
    match p {
        PowerDenominator::Tau2Only => "tau2_only".into(),
        PowerDenominator::Tau1PlusTau2 => "tau1_plus_tau2".into(),
        PowerDenominator::Explicit(t) => format!("explicit:{}", super::fmt_f64(*t)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("log:0.1:100:40").unwrap().values().unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!((g[0], g[39]), (0.1, 100.0));
        assert_eq!(parse_grid("list:1,2.5,10").unwrap().values().unwrap(), vec![1.0, 2.5, 10.0]);
        assert_eq!(parse_grid("list:3").unwrap().values().unwrap(), vec![3.0]);
        for bad in ["", "log", "log:1:2", "log:1:2:0", "list:", "list:2,1", "list:a", "lin:1:2:3", "log:-1:2:3", "list:inf"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("10:100").unwrap(), (10.0, 100.0));
        assert!(parse_window("100:10").is_err());
        assert!(parse_window("0:10").is_err());
        assert!(parse_window("10").is_err());
    }

    #[test]
    fn denominators() {
        assert_eq!(parse_power_denominator("tau2_only").unwrap(), PowerDenominator::Tau2Only);
        assert_eq!(parse_power_denominator("tau1_plus_tau2").unwrap(), PowerDenominator::Tau1PlusTau2);
        assert_eq!(parse_power_denominator("explicit:12.5").unwrap(), PowerDenominator::Explicit(12.5));
        assert_eq!(parse_power_denominator("12.5").unwrap(), PowerDenominator::Explicit(12.5));
        assert!(parse_power_denominator("-1").is_err());
        for p in [PowerDenominator::Tau2Only, PowerDenominator::Tau1PlusTau2, PowerDenominator::Explicit(0.1)] {
            assert_eq!(parse_power_denominator(&format_power_denominator(&p)).unwrap(), p);
        }
    }
}
