//! Artifact assembly and writing.
//!
//! Artifacts are built fully in memory and written afterwards, so file
//! contents never depend on thread scheduling. Floats use Rust's shortest
//! round-trip formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;
use crate::schema;

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "MERGEMON_OUT";
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Float cell: plain notation for moderate magnitudes, shortest
/// round-trip scientific notation otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F(pub f64);

impl std::fmt::Display for F {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.0;
        let a = v.abs();
        if v == 0.0 || !v.is_finite() || (1e-4..1e6).contains(&a) {
            write!(f, "{v}")
        } else {
            write!(f, "{v:e}")
        }
    }
}

/// CSV table with a fixed header.
pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            columns: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[&dyn std::fmt::Display]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            let _ = write!(self.text, "{c}");
        }
        self.text.push('\n');
    }

    pub fn into_artifact(self, name: impl Into<String>) -> Artifact {
        Artifact {
            name: name.into(),
            contents: self.text,
        }
    }
}

/// Serialize a report and check it against its schema.
pub fn json_artifact<T: Serialize>(name: &str, report: &T, schema_text: &str) -> Result<Artifact, CliError> {
    let value = serde_json::to_value(report).map_err(|e| CliError::Internal(e.to_string()))?;
    schema::check(schema_text, &value).map_err(|e| CliError::Internal(format!("{name} violates its schema: {e}")))?;
    let mut contents = serde_json::to_string_pretty(&value).map_err(|e| CliError::Internal(e.to_string()))?;
    contents.push('\n');
    Ok(Artifact {
        name: name.to_string(),
        contents,
    })
}

/// Output directory: command line, then environment, then config, then
/// the default.
pub fn resolve_out_dir(flag: Option<&Path>, config_dir: Option<&str>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(v) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(v);
    }
    PathBuf::from(config_dir.unwrap_or(DEFAULT_OUT_DIR))
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.contents).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

/// File name of the spectrum trace at `power_dbm`, e.g. `spectrum_+15.0dBm.csv`.
pub fn spectrum_file_name(power_dbm: f64) -> String {
    format!("spectrum_{power_dbm:+.1}dBm.csv")
}
