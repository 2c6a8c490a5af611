//! Output records: flat `key=value` lines, or an aligned table.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_owned())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

/// Nine significant digits; fixed notation for moderate magnitudes.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000000".into();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        let s = format!("{v:.decimals$}");
        // rounding can carry into a new digit, e.g. 9.999999999 -> 10.00000000
        if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > (exp + 1).max(1) as usize {
            return format!("{v:.prec$}", prec = decimals.saturating_sub(1));
        }
        s
    } else {
        format!("{v:.8e}")
    }
}

impl Value {
    pub fn render(&self) -> String {
        match self {
            Value::Float(v) => format_float(*v),
            Value::Int(v) => v.to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(s) if s.is_empty() => "-".into(),
            Value::Text(s) => s.replace(char::is_whitespace, "_"),
        }
    }
}

/// One logical result: ordered key/value pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record(pub Vec<(String, Value)>);

impl Record {
    pub fn new() -> Self {
        Record(Vec::new())
    }

    pub fn with(mut self, key: impl Into<String>, value: impl Into<Value>) -> Self {
        self.0.push((key.into(), value.into()));
        self
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.0.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn line(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={}", v.render())).collect();
        parts.join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    Table,
    #[default]
    Records,
}

/// Header plus results of one command invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub command: String,
    pub config_digest: String,
    pub outputs: Vec<Record>,
}

impl RunRecord {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Records => self.render_records(),
            Format::Table => self.render_table(),
        }
    }

    fn render_records(&self) -> String {
        let mut out = Record::new()
            .with("command", self.command.as_str())
            .with("config.sha256", self.config_digest.as_str())
            .line();
        out.push('\n');
        for r in &self.outputs {
            out.push_str(&r.line());
            out.push('\n');
        }
        out
    }

    fn render_table(&self) -> String {
        let stamp =
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "# {}  config {}  unix time {stamp}", self.command, self.config_digest);
        for r in &self.outputs {
            let width = r.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &r.0 {
                let _ = writeln!(out, "  {k:<width$}  {}", v.render());
            }
            out.push('\n');
        }
        out
    }
}
