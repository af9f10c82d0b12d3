//! Report emission: versioned JSON envelopes and plain CSV series. Output
//! bytes are a pure function of the run configuration and seed (no
//! timestamps), so identical runs produce identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn wants_json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
    pub fn wants_csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: u32,
    tool_version: &'a str,
    command: &'a str,
    #[serde(flatten)]
    payload: &'a T,
}

pub struct Reporter {
    out_dir: PathBuf,
    format: Format,
    pub written: Vec<PathBuf>,
}

impl Reporter {
    pub fn new(out_dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Reporter {
            out_dir: out_dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    pub fn json<T: Serialize>(
        &mut self,
        command: &str,
        name: &str,
        payload: &T,
    ) -> Result<(), CliError> {
        if !self.format.wants_json() {
            return Ok(());
        }
        let envelope = Envelope {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            payload,
        };
        let body = serde_json::to_string_pretty(&envelope)
            .map_err(|e| CliError::numeric(format!("serialization failed: {e}")))?;
        let path = self.out_dir.join(format!("{name}.json"));
        fs::write(&path, body + "\n")
            .map_err(|e| CliError::numeric(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes a CSV file from a header and preformatted rows.
    pub fn csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<(), CliError> {
        if !self.format.wants_csv() {
            return Ok(());
        }
        let mut body = String::with_capacity(rows.len() * 32 + header.len() + 1);
        body.push_str(header);
        body.push('\n');
        for row in rows {
            body.push_str(row);
            body.push('\n');
        }
        let path = self.out_dir.join(format!("{name}.csv"));
        fs::write(&path, body)
            .map_err(|e| CliError::numeric(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }
}

/// Formats an optional log-scale value as a linear probability for CSV.
pub fn ln_to_prob(ln: Option<f64>) -> f64 {
    ln.map_or(0.0, f64::exp)
}
