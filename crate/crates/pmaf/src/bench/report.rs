//! CSV report assembly. Numeric cells use Rust's shortest round-trip
//! float formatting; headers are fixed per experiment.

use crate::{Error, Result};
use std::io::Write;
use std::path::Path;

/// A finished report: fixed header plus data rows.
#[derive(Debug, Clone)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new<S: Into<String>>(header: Vec<S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row arity");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => {
                if let Some(dir) = p.parent() {
                    if !dir.as_os_str().is_empty() {
                        std::fs::create_dir_all(dir)?;
                    }
                }
                std::fs::write(p, self.to_csv())?;
            }
            None => {
                std::io::stdout().write_all(self.to_csv().as_bytes())?;
            }
        }
        Ok(())
    }

    /// Looks up a column index by header name.
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("no column `{name}`")))
    }
}

/// Formats a float with full round-trip precision.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
