//! Number formatting shared by the CLI and CSV writers.

use serde_json::Value;

/// Significant digits kept in printed output.
pub const SIG_DIGITS: usize = 12;

/// `x` rounded to [`SIG_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest decimal that reads back as `round_sig(x)`.
pub fn fmt_sig(x: f64) -> String {
    format!("{:?}", round_sig(x))
}

/// Rounds every float inside a JSON value in place.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round_sig(x))) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(2.5), 2.5);
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_sig(-123456.7890123456), -123456.789012);
        assert_eq!(fmt_sig(1.0), "1.0");
        assert_eq!(fmt_sig(1e-20 / 3.0), "3.33333333333e-21");
        let mut v = json!({"a": [1.0000000000001, 2], "b": {"c": 0.30000000000000004}});
        round_json(&mut v);
        assert_eq!(v, json!({"a": [1.0, 2], "b": {"c": 0.3}}));
    }
}
