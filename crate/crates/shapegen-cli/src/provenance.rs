//! `run.json` provenance records.
//!
//! Every command that writes artifacts also writes a record of what went
//! in and what came out: the subcommand, its arguments, SHA-256 hashes of
//! input and output files, the fully resolved configuration, and format
//! versions. Records carry no timestamps, so identical invocations over
//! identical inputs produce byte-identical records — provenance itself is
//! reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use shapegen::obsgen::write_atomic;
use shapegen::{Error, Result};

/// Hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

/// One command invocation's provenance.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    /// Subcommand name (e.g. `fit-sdf`).
    pub command: String,
    /// Full argument vector as invoked.
    pub argv: Vec<String>,
    /// Input file → SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output file → SHA-256 (hashed after writing).
    pub outputs: BTreeMap<String, String>,
    /// Fully resolved configuration the command ran with.
    pub config: serde_json::Value,
    /// Tool and file-format versions.
    pub versions: BTreeMap<String, String>,
}

impl RunRecord {
    pub fn new(command: &str, argv: &[String], config: serde_json::Value) -> RunRecord {
        let mut versions = BTreeMap::new();
        versions.insert("shapegen-cli".into(), env!("CARGO_PKG_VERSION").into());
        for fmt in ["library-manifest", "episode-manifest", "plan", "generated-episode", "sgpc"] {
            versions.insert(format!("format/{fmt}"), "1".into());
        }
        RunRecord {
            command: command.into(),
            argv: argv.to_vec(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            config,
            versions,
        }
    }

    /// Record an input file's hash (missing files were caught earlier;
    /// errors here still surface normally).
    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Record an output file's hash.
    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    /// Write the record as pretty JSON, atomically.
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::validation(format!("cannot encode run record: {e}")))?;
        write_atomic(path, text.as_bytes())
    }
}

/// Where a command's record goes: an explicit `--run-record` wins,
/// otherwise the command's default location.
pub fn record_path(explicit: &Option<PathBuf>, default: PathBuf) -> PathBuf {
    explicit.clone().unwrap_or(default)
}

/// Default record path for commands whose primary output is a single
/// file: a sibling named `<file>.run.json`.
pub fn sibling_record(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_reproducible_and_timestamp_free() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.bin");
        std::fs::write(&input, b"hello").unwrap();
        let argv = vec!["shapegen".to_string(), "export-ply".to_string()];
        let mut rec = RunRecord::new("export-ply", &argv, serde_json::json!({"n": 1}));
        rec.input(&input).unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        rec.write(&p1).unwrap();
        rec.write(&p2).unwrap();
        let a = std::fs::read(&p1).unwrap();
        assert_eq!(a, std::fs::read(&p2).unwrap());
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("export-ply"));
        assert!(!text.to_lowercase().contains("time"), "no timestamps: {text}");
        // Known SHA-256 of "hello".
        assert!(text
            .contains("2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"));
    }

    #[test]
    fn sibling_record_appends_suffix() {
        assert_eq!(
            sibling_record(Path::new("out/net.sgnet")),
            PathBuf::from("out/net.sgnet.run.json")
        );
    }
}
