//! Fixed-precision number formatting for CSV output.

/// `x` with 15 significant digits in scientific notation.
pub fn sig15(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{x:.14e}")
}

/// `x` rounded to the precision written by [`sig15`].
pub fn round15(x: f64) -> f64 {
    sig15(x).parse().unwrap_or(x)
}
