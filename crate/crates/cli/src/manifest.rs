use std::path::Path;

use serde::{Deserialize, Serialize};
use tumorsim::compose::{GeneratorConfig, SampleRecord};
use tumorsim::volume::Spacing;

use crate::error::{CliError, Result};
use crate::io::{file_digest, read_text, write_text};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RECORD_FILE: &str = "record.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Path relative to the manifest directory.
    pub path: String,
    /// First 8 bytes of SHA-256, hex.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub name: String,
    pub digest: String,
}

/// Everything that determines the output bytes. Worker count and
/// absolute paths are left out on purpose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub seed: u64,
    pub count: usize,
    pub spacing: Option<Spacing>,
    pub roi: Option<PoolEntry>,
    pub pool: Vec<PoolEntry>,
    pub generator: GeneratorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub index: usize,
    pub dir: String,
    /// RNG stream for this sample under `config.seed`.
    pub stream: u64,
    pub alpha: f64,
    pub x: FileEntry,
    pub x_n: FileEntry,
    pub s: FileEntry,
    pub m: FileEntry,
    pub record: SampleRecord,
}

impl SampleEntry {
    pub fn files(&self) -> [&FileEntry; 4] {
        [&self.x, &self.x_n, &self.s, &self.m]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: ConfigSnapshot,
    pub samples: Vec<SampleEntry>,
}

/// Per-sample `record.json`, so a sample directory stands on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub alpha: f64,
    pub record: SampleRecord,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = read_text(&path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path,
            reason: e.to_string(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_text(&dir.join(MANIFEST_FILE), &(text + "\n"))
    }

    /// Recompute every file digest; returns one line per problem.
    pub fn check(&self, dir: &Path) -> Vec<String> {
        let mut problems = Vec::new();
        for entry in &self.samples {
            for f in entry.files() {
                match file_digest(&dir.join(&f.path)) {
                    Ok(d) if d == f.digest => {}
                    Ok(d) => problems.push(format!("{}: digest {d}, expected {}", f.path, f.digest)),
                    Err(e) => problems.push(format!("{}: {e}", f.path)),
                }
            }
        }
        problems
    }
}

impl SampleFile {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(RECORD_FILE);
        let text = read_text(&path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Config {
            path,
            reason: e.to_string(),
        })
    }
}

pub fn sample_dir_name(index: usize) -> String {
    format!("sample_{index:04}")
}
