/// Decimal rendering with 17 significant digits. Plain notation for
/// exponents in `[-5, 16]`, scientific otherwise.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let exponent: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("integer exponent");
    if (-5..=16).contains(&exponent) {
        let decimals = (16 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(0.0), "0");
        assert_eq!(fmt17(1.0), "1.0000000000000000");
        assert_eq!(fmt17(0.1), "0.10000000000000001");
        assert_eq!(fmt17(-2.5e-7), "-2.4999999999999999e-7");
        assert_eq!(fmt17(123.456), "123.45600000000000");
        assert_eq!(fmt17(f64::NAN), "NaN");
        for x in [0.612_699_836_780_282, 1e-300, 3.0e20, -7.25] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
