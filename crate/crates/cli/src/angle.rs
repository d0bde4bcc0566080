//! Angles on the command line: plain radians or multiples of pi.

use std::f64::consts::PI;

/// Accepts `1.5707`, `pi`, `-pi`, `0.46pi`, `0.46*pi`, `pi/4`, `3pi/4`.
pub fn parse(s: &str) -> Result<f64, String> {
    let t: String = s.trim().to_ascii_lowercase().chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read `{s}` as an angle (use radians or e.g. 0.46pi, 3pi/4)");
    let value = match t.split_once("pi") {
        None => t.parse::<f64>().map_err(|_| bad())?,
        Some((coef, rest)) => {
            let coef = coef.strip_suffix('*').unwrap_or(coef);
            let k = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                c => c.parse::<f64>().map_err(|_| bad())?,
            };
            let div = match rest {
                "" => 1.0,
                r => r.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
            };
            k * PI / div
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse("pi").unwrap(), PI);
        assert_eq!(parse("-pi").unwrap(), -PI);
        assert!((parse("0.46pi").unwrap() - 0.46 * PI).abs() < 1e-15);
        assert!((parse("0.46*pi").unwrap() - 0.46 * PI).abs() < 1e-15);
        assert!((parse("3pi/4").unwrap() - 0.75 * PI).abs() < 1e-15);
        assert!((parse("PI/2").unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(parse("1.25").unwrap(), 1.25);
        assert!(parse("pie").is_err());
        assert!(parse("x").is_err());
        assert!(parse("pi/0").is_err());
    }
}
