/// Format a float with 17 significant digits, the precision used by every
/// CSV this crate writes. Parsing the output recovers the exact value.
pub fn f64_17(v: f64) -> String {
    format!("{v:.16e}")
}
