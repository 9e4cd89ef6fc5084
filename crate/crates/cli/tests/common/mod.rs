#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn discerr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discerr")).args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Largest absolute difference between two JSON documents of the same shape;
/// `None` if the shapes or non-numeric values differ.
pub fn max_numeric_diff(a: &serde_json::Value, b: &serde_json::Value) -> Option<f64> {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => Some((x.as_f64()? - y.as_f64()?).abs()),
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            x.iter().zip(y).try_fold(0.0_f64, |m, (u, v)| Some(m.max(max_numeric_diff(u, v)?)))
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x
            .iter()
            .try_fold(0.0_f64, |m, (k, u)| Some(m.max(max_numeric_diff(u, y.get(k)?)?))),
        _ if a == b => Some(0.0),
        _ => None,
    }
}

pub const DEMO_FILES: [&str; 8] = [
    "observations.csv",
    "residuals.csv",
    "errors.csv",
    "blocks.csv",
    "problem.json",
    "solution.json",
    "ellipses.csv",
    "coverage.csv",
];
