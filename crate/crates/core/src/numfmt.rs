//! Number formatting shared by the serializer and the report writers.

/// Formats `x` with `digits` significant digits in the style of C's `%g`.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent value");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Nine significant digits, falling back to the shortest exact form when
/// nine digits would not read back as the same value.
pub fn exact(x: f64) -> String {
    let s = sig(x, 9);
    match s.parse::<f64>() {
        Ok(v) if v == x => s,
        _ => format!("{x:?}"),
    }
}

/// Standard nine-significant-digit report formatting.
pub fn num(x: f64) -> String {
    sig(x, 9)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_style() {
        assert_eq!(sig(250.0, 9), "250");
        assert_eq!(sig(0.1, 9), "0.1");
        assert_eq!(sig(1.0 / 3.0, 9), "0.333333333");
        assert_eq!(sig(1.5e-7, 9), "1.5e-07");
        assert_eq!(sig(123456789012.0, 9), "1.23456789e+11");
        assert_eq!(sig(-42.0, 9), "-42");
    }

    #[test]
    fn exact_falls_back() {
        let x = 0.123456789012345;
        assert_eq!(exact(x).parse::<f64>().unwrap(), x);
        assert_eq!(exact(0.25), "0.25");
    }
}
