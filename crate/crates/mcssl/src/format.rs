/// `x` rounded to 6 significant digits.
pub fn round6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// Shortest decimal form of `x` at 6 significant digits.
pub fn fmt6(x: f64) -> String {
    fmt_full(round6(x))
}

/// Shortest decimal form that parses back to `x`; `inf`, `-inf`, `nan` for
/// non-finite values.
pub fn fmt_full(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

/// Inverse of [`fmt_full`].
pub fn parse_float(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}
