use std::fmt;

/// A number printed with 6 significant digits, or the shortest round-trip
/// form when the flag is set. Infinities print as `inf` / `-inf`.
#[derive(Clone, Copy)]
pub struct Num(pub f64, pub bool);

impl Num {
    fn value(self) -> f64 {
        if self.1 || !self.0.is_finite() {
            self.0
        } else {
            format!("{:.5e}", self.0).parse().expect("formatted float")
        }
    }

    /// JSON form: a bare number, or a string token when not finite.
    pub fn json(self) -> String {
        let v = self.value();
        match serde_json::Number::from_f64(v) {
            Some(n) => n.to_string(),
            None => format!("\"{self}\""),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.value();
        if v == f64::INFINITY {
            f.write_str("inf")
        } else if v == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else if v.is_nan() {
            f.write_str("nan")
        } else {
            write!(f, "{v}")
        }
    }
}
