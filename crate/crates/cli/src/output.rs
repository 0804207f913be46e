//! Run artifacts: sequential writes through temp files and a hashed manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST: &str = "manifest.json";

/// Every file name any subcommand can emit; stale copies from earlier runs
/// are removed so the manifest always describes the whole directory.
pub const ARTIFACTS: &[&str] = &[
    "wigner.csv",
    "wigner.json",
    "quadratures.csv",
    "chi.csv",
    "dipole.csv",
    "spectrum.csv",
    "harmonics.csv",
    "g1.csv",
    "g2.csv",
    "two_color.csv",
    "covariance.csv",
    "mean.csv",
    "diagnostics.json",
    "weights.csv",
    "field.csv",
];

/// Outputs of one subcommand, held in memory until the run succeeds.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    pub diagnostics: Map<String, Value>,
    pub notes: Vec<String>,
}

impl Artifacts {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        debug_assert!(ARTIFACTS.contains(&name), "unregistered artifact {name}");
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json(&mut self, name: &str, value: &Value) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("json values serialize");
        bytes.push(b'\n');
        self.add(name, bytes);
    }

    pub fn diag(&mut self, key: &str, value: Value) {
        self.diagnostics.insert(key.to_string(), value);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Writes every file, then the manifest, each via rename from a temp file.
    pub fn commit(self, command: &str, cfg: &RunConfig) -> io::Result<PathBuf> {
        let dir = &cfg.output_dir;
        fs::create_dir_all(dir)?;
        for name in ARTIFACTS.iter().chain([&MANIFEST]) {
            let path = dir.join(name);
            if path.is_file() {
                fs::remove_file(path)?;
            }
        }
        let mut listed = Vec::new();
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
            listed.push(json!({
                "file": name,
                "bytes": bytes.len(),
                "sha256": sha256_hex(bytes),
            }));
        }
        let manifest = json!({
            "tool": { "name": "hhgq", "version": env!("CARGO_PKG_VERSION") },
            "command": command,
            "config": cfg.echo,
            "conventions": {
                "units": "atomic units, hbar = 1",
                "quadratures": "x = sqrt(2) Re(alpha), p = sqrt(2) Im(alpha), vacuum variance 1/2",
                "wigner_normalization": "integral of W over (x, p) = 1, vacuum W(0,0) = 1/pi",
                "float_format": "17 significant digits",
            },
            "artifacts": listed,
            "diagnostics": self.diagnostics,
            "notes": self.notes,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("json values serialize");
        bytes.push(b'\n');
        let path = dir.join(MANIFEST);
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}
