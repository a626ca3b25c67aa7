use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{Map, Number, Value};

/// 17 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        // -0.0 prints as 0
        Value::Number(format!("{:.16e}", x + 0.0).parse::<Number>().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builder for one JSON record.
#[derive(Default)]
pub struct Record(Map<String, Value>);

impl Record {
    pub fn new() -> Self {
        Record(Map::new())
    }

    pub fn f(mut self, key: &str, x: f64) -> Self {
        self.0.insert(key.into(), num(x));
        self
    }

    pub fn s(mut self, key: &str, v: impl Into<String>) -> Self {
        self.0.insert(key.into(), Value::String(v.into()));
        self
    }

    pub fn v(mut self, key: &str, v: Value) -> Self {
        self.0.insert(key.into(), v);
        self
    }

    pub fn print(self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "{}", Value::Object(self.0))
    }
}

/// File at `path`, or stdout when absent or "-".
pub fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    match path {
        Some(p) if p.as_os_str() != "-" => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Ok(Box::new(BufWriter::new(File::create(p)?)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn create(dir: &Path, name: &str) -> io::Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}
