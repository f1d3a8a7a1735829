//! Number formatting shared by every CSV the harness writes.

/// Rounds to 9 significant digits and prints the shortest decimal that reads
/// back as the rounded value. Non-finite values print as `nan`, `inf`, `-inf`.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        // drop the sign of negative zero
        return "0".into();
    }
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_nine_digits() {
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(-0.0), "0");
        assert_eq!(sig9(1000.0), "1000");
        assert_eq!(sig9(0.25), "0.25");
        assert_eq!(sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(sig9(123456789012.0), "123456789000");
        assert_eq!(sig9(1.5e-7), "0.00000015");
        assert_eq!(sig9(f64::NAN), "nan");
    }
}
