//! Number formatting shared by the CSV and JSON writers.

/// Scientific notation with 17 significant digits, which round-trips every
/// `f64` exactly.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }
}
