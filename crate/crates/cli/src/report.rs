//! Diff-friendly key=value reports with a JSON mirror.
//!
//! Every numeric entry carries an error estimate or the token `exact`;
//! identical configurations produce byte-identical output (floats print in
//! shortest round-trip form, keys in insertion order, JSON keys sorted).

use serde_json::{json, Map, Value};

pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        let mut r = Report { entries: Vec::new() };
        r.text("config.command", command);
        r
    }

    pub fn text(&mut self, key: &str, value: &str) {
        self.entries.push((key.to_string(), Value::String(value.to_string())));
    }

    pub fn int(&mut self, key: &str, value: i64) {
        self.entries.push((key.to_string(), json!(value)));
    }

    /// A numeric whose value is exact (no quadrature error attached).
    pub fn exact(&mut self, key: &str, value: f64) {
        self.num_raw(key, value);
        self.text(&format!("{key}_err"), "exact");
    }

    /// A numeric with an error estimate.
    pub fn with_err(&mut self, key: &str, value: f64, err: f64) {
        self.num_raw(key, value);
        self.num_raw(&format!("{key}_err"), err);
    }

    fn num_raw(&mut self, key: &str, value: f64) {
        self.entries.push((key.to_string(), json!(value)));
    }

    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            let mut map = Map::new();
            for (k, v) in &self.entries {
                map.insert(k.clone(), v.clone());
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(map)).unwrap();
            s.push('\n');
            s
        } else {
            let mut out = String::new();
            for (k, v) in &self.entries {
                let rendered = match v {
                    Value::String(s) => s.clone(),
                    Value::Number(n) => match n.as_f64() {
                        Some(x) if n.is_f64() => format_float(x),
                        _ => n.to_string(),
                    },
                    other => other.to_string(),
                };
                out.push_str(&format!("{k}={rendered}\n"));
            }
            out
        }
    }
}

/// Shortest round-trip decimal form.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}
