//! Shortest round-trip float text in the style of Python's `repr`:
//! plain notation for decimal exponents in [-4, 16), scientific otherwise
//! with a signed, at least two-digit exponent (`2.5e-06`, `1e+16`).

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0.0".into() } else { "0.0".into() };
    }
    // `{:e}` yields the shortest round-trip digit count; formatting again
    // at that precision picks the nearest such digits when two qualify.
    let shortest = format!("{:e}", v.abs());
    let count = shortest.split_once('e').expect("exponent present").0.replace('.', "").len();
    let sci = format!("{:.*e}", count - 1, v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if v < 0.0 { "-" } else { "" };
    if (-4..16).contains(&exp) {
        let body = if exp >= 0 {
            let e = exp as usize;
            if digits.len() > e + 1 {
                format!("{}.{}", &digits[..=e], &digits[e + 1..])
            } else {
                format!("{}{}.0", digits, "0".repeat(e + 1 - digits.len()))
            }
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        format!("{sign}{body}")
    } else {
        let m = if digits.len() > 1 {
            format!("{}.{}", &digits[..1], &digits[1..])
        } else {
            digits
        };
        let es = if exp < 0 { '-' } else { '+' };
        format!("{sign}{m}e{es}{:02}", exp.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::format_float;
    use proptest::prelude::*;

    #[test]
    fn matches_python_repr() {
        let cases = [
            (2.5e-6, "2.5e-06"),
            (6.5e-7, "6.5e-07"),
            (0.2, "0.2"),
            (0.515, "0.515"),
            (4096.0, "4096.0"),
            (1e-4, "0.0001"),
            (1e-5, "1e-05"),
            (1e16, "1e+16"),
            (1234567890123456.0, "1234567890123456.0"),
            (-3.25e-5, "-3.25e-05"),
            (0.1 + 0.2, "0.30000000000000004"),
            (100.0, "100.0"),
            (1.5e300, "1.5e+300"),
            (5e-324, "5e-324"),
            (251268343567354.125, "251268343567354.12"),
            (1573626427739.15625, "1573626427739.1562"),
            (0.0, "0.0"),
            (-0.0, "-0.0"),
            (f64::INFINITY, "inf"),
        ];
        for (v, want) in cases {
            assert_eq!(format_float(v), want, "{v:e}");
        }
        assert_eq!(format_float(f64::NAN), "nan");
    }

    proptest! {
        #[test]
        fn round_trips(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = format_float(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
