//! Canonical writer for the flat JSON records used by traces, task files, metrics
//! and the session protocol.

use std::fmt::{Display, Write};

/// Builds one record line. Fields appear in the order they are added.
#[derive(Debug)]
pub struct Record {
    buf: String,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        let mut buf = String::with_capacity(96);
        buf.push_str("{\"type\":");
        buf.push_str(&quote(kind));
        Self { buf }
    }

    fn key(&mut self, key: &str) {
        self.buf.push(',');
        self.buf.push_str(&quote(key));
        self.buf.push(':');
    }

    /// Fixed six-decimal number.
    pub fn num(mut self, key: &str, value: f64) -> Self {
        debug_assert!(value.is_finite(), "{key} is not finite");
        self.key(key);
        let _ = write!(self.buf, "{value:.6}");
        self
    }

    /// Shortest decimal that parses back to the same `f64`.
    pub fn exact(mut self, key: &str, value: f64) -> Self {
        debug_assert!(value.is_finite(), "{key} is not finite");
        self.key(key);
        let _ = write!(self.buf, "{value}");
        self
    }

    pub fn opt_num(self, key: &str, value: Option<f64>) -> Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.null(key),
        }
    }

    pub fn int(mut self, key: &str, value: impl Display) -> Self {
        self.key(key);
        let _ = write!(self.buf, "{value}");
        self
    }

    pub fn opt_int(self, key: &str, value: Option<impl Display>) -> Self {
        match value {
            Some(v) => self.int(key, v),
            None => self.null(key),
        }
    }

    pub fn boolean(mut self, key: &str, value: bool) -> Self {
        self.key(key);
        self.buf.push_str(if value { "true" } else { "false" });
        self
    }

    pub fn text(mut self, key: &str, value: &str) -> Self {
        self.key(key);
        self.buf.push_str(&quote(value));
        self
    }

    pub fn null(mut self, key: &str) -> Self {
        self.key(key);
        self.buf.push_str("null");
        self
    }

    pub fn finish(mut self) -> String {
        self.buf.push('}');
        self.buf
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialise")
}

/// Reads the `type` discriminator of a record line.
pub fn record_type(line: &str) -> Option<String> {
    #[derive(serde::Deserialize)]
    struct Tag {
        #[serde(rename = "type")]
        kind: String,
    }
    serde_json::from_str::<Tag>(line).ok().map(|t| t.kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_flat_objects() {
        let line = Record::new("x")
            .num("a", 1.0 / 3.0)
            .exact("b", 16.0 / 9.0)
            .int("c", 7)
            .text("d", "q\"uote")
            .opt_num("e", None)
            .boolean("f", true)
            .finish();
        assert_eq!(
            line,
            r#"{"type":"x","a":0.333333,"b":1.7777777777777777,"c":7,"d":"q\"uote","e":null,"f":true}"#
        );
        assert_eq!(record_type(&line).as_deref(), Some("x"));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["b"].as_f64().unwrap(), 16.0 / 9.0);
    }
}
