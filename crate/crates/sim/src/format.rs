//! Number formatting shared by the CSV writers.

/// 17 significant digits, `.` decimal.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Empty field for undefined values.
pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// Finite numbers as JSON numbers, everything else as `null`.
pub fn json_real(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

pub fn json_opt(x: Option<f64>) -> serde_json::Value {
    x.map_or(serde_json::Value::Null, json_real)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.5e-300, -123456.789, 0.0] {
            let s = real(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(real(0.25), "2.5000000000000000e-1");
        assert_eq!(opt_real(None), "");
        assert_eq!(json_real(f64::NAN), serde_json::Value::Null);
    }
}
