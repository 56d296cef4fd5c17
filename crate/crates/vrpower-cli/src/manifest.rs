//! Run manifests: a JSON sidecar written next to every produced file that
//! records the exact command, parameters, and sha256 digests of all inputs
//! and outputs, so any artifact can be traced back to the run that made it.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use vrpower::{Error, Result};

/// A path with the sha256 of its content at manifest time.
#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record for one CLI invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    /// Subcommand that produced the outputs.
    pub command: String,
    pub tool_version: String,
    /// RFC 3339 UTC creation time. Excluded from any byte-for-byte
    /// reproducibility comparison; everything else is deterministic.
    pub created_utc: String,
    /// Effective parameter values after defaulting, stringified.
    pub parameters: BTreeMap<String, String>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path)
        .map_err(|e| Error::io(format!("reading {} for digest", path.display()), e))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            schema_version: 1,
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            parameters: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Records one effective parameter value.
    pub fn param(&mut self, key: &str, value: impl Display) {
        self.parameters.insert(key.to_string(), value.to_string());
    }

    /// Records and digests an input file.
    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    /// Records and digests an output file (call after writing it).
    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(digest(path)?);
        Ok(())
    }

    /// Writes the manifest next to `primary` as `<stem>.manifest.json` and
    /// returns that path.
    pub fn write_next_to(&self, primary: &Path) -> Result<PathBuf> {
        let path = primary.with_extension("manifest.json");
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("serializing manifest: {e}")))?;
        text.push('\n');
        fs::write(&path, text)
            .map_err(|e| Error::io(format!("writing manifest {}", path.display()), e))?;
        Ok(path)
    }
}
