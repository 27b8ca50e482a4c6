//! Run manifests: the effective configuration, content digests of every
//! input, and the tool version, written beside primary outputs. No
//! timestamps, so reruns with identical inputs produce identical manifests.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{LexError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Effective settings after flag/config/default resolution.
    pub config: BTreeMap<String, String>,
    /// Input path -> sha256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "lexbridge".to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            ..RunManifest::default()
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> Result<&mut Self> {
        let path = path.as_ref();
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: impl AsRef<Path>) -> &mut Self {
        self.outputs.push(path.as_ref().display().to_string());
        self
    }

    /// Writes the manifest as pretty JSON (keys already sorted by BTreeMap).
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| LexError::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)
            .map_err(|e| LexError::InvalidInput(format!("manifest serialization: {e}")))?;
        writeln!(w).map_err(|e| LexError::io(path, e))?;
        w.flush().map_err(|e| LexError::io(path, e))
    }
}

/// Hex sha256 of a file's contents.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| LexError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| LexError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}
