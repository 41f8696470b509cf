//! File formats: CSV tables with a leading `# key: value` comment block, JSON
//! event lists, and a JSON manifest next to every output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lunar_polar::integrator::IntegratorConfig;
use serde::Serialize;
use sha1::{Digest, Sha1};

use crate::CliError;

/// Fixed 17 significant digits, so values round-trip exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Sibling path of `out` holding its manifest.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}

pub struct Table {
    comments: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, key: &str, value: impl ToString) {
        self.comments.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, out: &Path) -> Result<(), CliError> {
        let mut w = BufWriter::new(File::create(out)?);
        writeln!(w, "# manifest: {}", file_name(&manifest_path(out)))?;
        for (k, v) in &self.comments {
            writeln!(w, "# {k}: {v}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.header)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(out: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(out)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Object id git would give the file contents as a blob.
pub fn git_blob_id(bytes: &[u8]) -> String {
    let mut h = Sha1::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: usize,
    pub git_blob_id: String,
}

#[derive(Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub command: &'static str,
    pub parameters: &'a P,
    pub tool_version: &'static str,
    pub integrator: &'a IntegratorConfig,
    pub wall_time_s: f64,
    pub status: String,
    pub output: OutputEntry,
}

impl<P: Serialize> RunManifest<'_, P> {
    pub fn write_for(&self, out: &Path) -> Result<(), CliError> {
        write_json(&manifest_path(out), self)
    }
}

pub fn describe_output(out: &Path) -> Result<OutputEntry, CliError> {
    let bytes = std::fs::read(out)?;
    Ok(OutputEntry {
        path: file_name(out),
        bytes: bytes.len(),
        git_blob_id: git_blob_id(&bytes),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_id_matches_git() {
        // `printf 'hello\n' | git hash-object --stdin`
        assert_eq!(git_blob_id(b"hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
        assert_eq!(git_blob_id(b""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0252437, 1e-300, 2f64.cbrt(), -0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("a/b.csv")), Path::new("a/b.manifest.json"));
        assert_eq!(manifest_path(Path::new("ev.json")), Path::new("ev.manifest.json"));
    }
}
