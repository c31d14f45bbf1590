//! Structured outputs: CSV tables and the self-describing run manifest.
//!
//! CSV bodies are deterministic for a fixed config and seed; the manifest
//! keeps its timestamp in a separate field so the embedded config hash and
//! report payload stay byte-reproducible.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Shortest round-trip decimal form of a float (Rust's `Display`).
pub fn fmt_f64(v: f64) -> String {
    format!("{}", v)
}

pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<()> {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    /// Fully resolved config this run used.
    pub config_toml: String,
    /// SHA-256 of `config_toml`.
    pub config_sha256: String,
    /// Files written by the run, relative to the manifest directory.
    pub outputs: Vec<String>,
    /// Command-specific result summary.
    pub summary: serde_json::Value,
    /// Wall-clock creation time (seconds since the epoch); not hashed.
    pub created_unix: u64,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config_toml: String) -> Self {
        let config_sha256 = hex_sha256(&config_toml);
        Manifest {
            command: command.to_string(),
            seed,
            config_toml,
            config_sha256,
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn record_output(&mut self, path: &Path, dir: &Path) {
        let rel = path.strip_prefix(dir).unwrap_or(path);
        self.outputs.push(rel.display().to_string());
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, json)?;
        Ok(path)
    }
}

pub fn hex_sha256(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{:02x}", byte));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_roundtrip_through_display() {
        for v in [
            0.1,
            -3.5e-17,
            std::f64::consts::PI,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            123456789.123456789,
        ] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{}", s);
        }
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            hex_sha256(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
