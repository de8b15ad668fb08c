use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

/// One quantitative check with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            expected: Some(expected),
            tolerance: Some(tolerance),
            passed: (value - expected).abs() <= tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, value: f64, passed: bool) -> Self {
        Self { name: name.into(), value, expected: None, tolerance: None, passed }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub workers: usize,
    pub parameters: serde_json::Value,
    pub cells: Vec<serde_json::Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(out, "{verdict} {}: {:.6e}", c.name, c.value);
            if let (Some(e), Some(t)) = (c.expected, c.tolerance) {
                let _ = write!(out, " (expected {e:.6e} +/- {t:.3e})");
            }
            out.push('\n');
        }
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{verdict} {} ({:.1} s)", self.experiment, self.wall_clock_seconds);
        out
    }
}

/// An auxiliary output such as a CSV grid or a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub files: Vec<OutputFile>,
}

impl Outcome {
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.report).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(format!("{}.json", self.report.experiment)), json + "\n")?;
        for f in &self.files {
            std::fs::write(dir.join(&f.name), &f.contents)?;
        }
        Ok(())
    }
}

/// CSV with a header row; floats carry 17 significant digits.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        let parts: Vec<String> = fields.iter().map(CsvField::render).collect();
        self.text.push_str(&parts.join(","));
        self.text.push('\n');
    }

    pub fn finish(self, name: impl Into<String>) -> OutputFile {
        OutputFile { name: name.into(), contents: self.text }
    }
}

pub enum CsvField {
    Int(u64),
    Float(f64),
    Text(String),
}

impl CsvField {
    fn render(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => format!("{v:.16e}"),
            Self::Text(s) => s.clone(),
        }
    }
}
