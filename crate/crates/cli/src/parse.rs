use std::str::FromStr;

use rqpe_core::bayes::PriorSupport;
use rqpe_core::{rational_from_float, Rational, Theta};

use crate::error::CliError;

/// A fraction `p/q`, an integer, or a decimal rounded to a nearby fraction.
pub fn rational(text: &str, tolerance: f64) -> Result<Rational, CliError> {
    let t = text.trim();
    if let Ok(r) = Rational::from_str(t) {
        return Ok(r);
    }
    let x: f64 = t
        .parse()
        .map_err(|_| CliError::Input(format!("cannot parse `{t}` as a number")))?;
    Ok(rational_from_float(x, tolerance)?)
}

/// Splits on commas, whitespace and newlines, dropping `#` comments.
pub fn list(text: &str, tolerance: f64) -> Result<Vec<Rational>, CliError> {
    let values: Vec<Rational> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split(|c: char| c == ',' || c.is_whitespace()))
        .filter(|s| !s.is_empty())
        .map(|s| rational(s, tolerance))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(CliError::Input("no values given".into()));
    }
    Ok(values)
}

/// Phase in units of π: exact for fractions, radians for decimals.
pub fn theta(text: &str) -> Result<Theta, CliError> {
    let t = text.trim();
    if let Ok(r) = Rational::from_str(t) {
        return Ok(Theta::PiMultiple(r));
    }
    let x: f64 = t
        .parse()
        .map_err(|_| CliError::Input(format!("cannot parse phase `{t}`")))?;
    if !x.is_finite() {
        return Err(CliError::Input(format!("phase `{t}` is not finite")));
    }
    Ok(Theta::Radians(x * std::f64::consts::PI))
}

pub fn bits(text: &str) -> Result<Vec<bool>, CliError> {
    text.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(CliError::Input(format!("bit string contains `{other}`"))),
        })
        .collect()
}

pub fn prior(text: &str) -> Result<PriorSupport, CliError> {
    if text.trim() == "full" {
        return Ok(PriorSupport::FullCircle);
    }
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| CliError::Input(format!("prior must be `full` or `lo:hi`, got `{text}`")))?;
    let pi = std::f64::consts::PI;
    Ok(PriorSupport::Interval {
        lo: rational(lo, 1e-12)?.to_f64() * pi,
        hi: rational(hi, 1e-12)?.to_f64() * pi,
    })
}

/// `21π/64`, `π`, `3π/4`, `0`.
pub fn format_pi(r: &Rational) -> String {
    if r.is_zero() {
        return "0".into();
    }
    let n = r.numer().to_string();
    let num = match n.as_str() {
        "1" => "π".to_string(),
        "-1" => "-π".to_string(),
        _ => format!("{n}π"),
    };
    if r.is_integer() {
        num
    } else {
        format!("{num}/{}", r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_accept_fractions_decimals_and_comments() {
        let v = list("21/64, 0.5\n# skip\n1 -1/3", 1e-9).unwrap();
        assert_eq!(
            v,
            vec![
                Rational::new(21, 64),
                Rational::new(1, 2),
                Rational::from(1),
                Rational::new(-1, 3)
            ]
        );
        assert!(list("  ", 1e-9).is_err());
        assert!(list("abc", 1e-9).is_err());
    }

    #[test]
    fn pi_formatting() {
        assert_eq!(format_pi(&Rational::new(21, 64)), "21π/64");
        assert_eq!(format_pi(&Rational::from(1)), "π");
        assert_eq!(format_pi(&Rational::new(1, 3)), "π/3");
        assert_eq!(format_pi(&Rational::from(0)), "0");
    }

    #[test]
    fn thetas_and_priors() {
        assert_eq!(
            theta("13/12").unwrap(),
            Theta::PiMultiple(Rational::new(13, 12))
        );
        assert!(matches!(theta("0.25").unwrap(), Theta::Radians(_)));
        assert_eq!(bits("101").unwrap(), vec![true, false, true]);
        assert!(bits("12").is_err());
        assert_eq!(prior("full").unwrap(), PriorSupport::FullCircle);
        assert!(matches!(
            prior("1:7/6").unwrap(),
            PriorSupport::Interval { .. }
        ));
        assert!(prior("1").is_err());
    }
}
