//! Errors, exit codes and JSON output.

use std::path::Path;

use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};
use transport_core::io::format_number;

/// Exit codes: 0 success, 2 configuration or usage error, 3 numerical
/// failure, 4 file-system error.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(transport_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> Value {
        let mut m = Map::new();
        m.insert("kind".into(), self.kind().into());
        m.insert("exit_code".into(), self.exit_code().into());
        m.insert("message".into(), self.to_string().into());
        if let CliError::Numeric(e) = self {
            m.insert("detail".into(), format!("{e:?}").into());
        }
        let mut top = Map::new();
        top.insert("error".into(), Value::Object(m));
        Value::Object(top)
    }
}

/// Input errors from the library are configuration errors; the rest are
/// numerical.
impl From<transport_core::Error> for CliError {
    fn from(e: transport_core::Error) -> Self {
        match e {
            transport_core::Error::Io(m) => CliError::Io(m),
            e if e.is_numeric() => CliError::Numeric(e),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// `x` as a JSON number with 17 significant digits; `null` if not finite.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format_number(x).parse::<Number>().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

/// Rewrites every non-integer number in `v` with 17 significant digits.
pub fn normalize_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => n.as_f64().map_or(Value::Number(n), num),
        Value::Array(a) => Value::Array(a.into_iter().map(normalize_numbers).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize_numbers(v))).collect()),
        other => other,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn object(entries: Vec<(&str, Value)>) -> Value {
    Value::Object(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        let v = num(0.1);
        assert_eq!(v.to_string(), "1.0000000000000001e-1");
        let back: f64 = serde_json::from_str(&v.to_string()).unwrap();
        assert_eq!(back, 0.1);
        assert_eq!(num(f64::NAN), Value::Null);
        let nested = normalize_numbers(serde_json::json!({"a": [0.5, 3], "b": {"c": 2.5e-7}}));
        assert_eq!(nested.to_string(), r#"{"a":[5.0000000000000000e-1,3],"b":{"c":2.4999999999999999e-7}}"#);
    }

    #[test]
    fn exit_codes_are_distinct() {
        let config = CliError::Config("x".into());
        let numeric = CliError::Numeric(transport_core::Error::Unstable { step: 3 });
        let io = CliError::Io("x".into());
        assert_eq!((config.exit_code(), numeric.exit_code(), io.exit_code()), (2, 3, 4));
        assert_eq!(numeric.record()["error"]["kind"], "numeric");
        let mapped: CliError = transport_core::Error::InvalidParameter("bad".into()).into();
        assert_eq!(mapped.exit_code(), 2);
        let mapped: CliError = transport_core::Error::FrameEscape { t: 1.0, ratio: 1.0 }.into();
        assert_eq!(mapped.exit_code(), 3);
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
