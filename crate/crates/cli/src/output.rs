//! Output-file conventions: header lines, metadata blocks, and CSV
//! formatting (full double precision in files, 2-dp on the console).

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool_version: &'static str,
    pub config_sha256: String,
    pub master_seed: u64,
}

impl Meta {
    pub fn new(config_text: Option<&str>, master_seed: u64) -> Self {
        use sha2::{Digest, Sha256};
        let config_sha256 = match config_text {
            Some(text) => {
                let mut hasher = Sha256::new();
                hasher.update(text.as_bytes());
                format!("{:x}", hasher.finalize())
            }
            None => "none".into(),
        };
        Self { tool_version: TOOL_VERSION, config_sha256, master_seed }
    }

    /// Comment line placed at the top of text-based outputs.
    pub fn header_line(&self) -> String {
        format!(
            "# ofa {} config_sha256={} seed={}",
            self.tool_version, self.config_sha256, self.master_seed
        )
    }
}

/// Shortest round-trip decimal representation of an `f64`.
pub fn full(x: f64) -> String {
    format!("{x}")
}

pub fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Write a CSV file: header comment, column row, then data rows.
pub fn write_csv(
    path: &Path,
    meta: &Meta,
    columns: &str,
    rows: impl IntoIterator<Item = String>,
) -> anyhow::Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{}", meta.header_line())?;
    writeln!(out, "{columns}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

/// Write a JSON file as `{"meta": ..., "result": ...}`.
pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, result: &T) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Document<'a, T> {
        meta: &'a Meta,
        result: &'a T,
    }
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &Document { meta, result })?;
    writeln!(out)?;
    Ok(())
}
