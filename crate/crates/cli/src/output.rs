//! Atomic file output and run manifests.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

/// Writes `path` through a temporary file in the same directory and
/// renames it into place once `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Flat `key=value` record of everything that determines a run's output.
#[derive(Debug, Clone)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &str, output: &Path) -> Self {
        let mut m = Self { entries: Vec::new() };
        m.set("subcommand", subcommand);
        m.set("tool_version", env!("CARGO_PKG_VERSION"));
        m.set("output", output.display());
        m
    }

    pub fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Records the path and content hash of an input file.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<(), CliError> {
        let hash = sha256_file(path)?;
        self.set(&format!("input.{name}.path"), path.display());
        self.set(&format!("input.{name}.sha256"), hash);
        Ok(())
    }

    pub fn seed(&mut self, seed: Option<u64>) {
        match seed {
            Some(s) => self.set("seed", s),
            None => self.set("seed", "none"),
        }
    }

    /// Path of the manifest written next to `output`.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest");
        output.with_file_name(name)
    }

    pub fn write(&self, output: &Path) -> Result<(), CliError> {
        let path = Self::path_for(output);
        write_atomic(&path, |w| {
            for (k, v) in &self.entries {
                writeln!(w, "{k}={v}").map_err(|e| CliError::Io(e.to_string()))?;
            }
            Ok(())
        })
    }
}
