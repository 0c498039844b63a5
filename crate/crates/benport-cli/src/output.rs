//! Output bookkeeping: every command writes its artifacts through a
//! tracker so that a failing run removes partial files, and finishes by
//! writing a manifest with the resolved configuration, the seed, and a
//! SHA-256 hash of every artifact.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Formats a float at 10 significant digits so emitted files are stable
/// across platforms.
pub fn fmt10(v: f64) -> String {
    format!("{v:.9e}")
}

/// Optional float: empty field when absent (plot-ready CSV convention).
pub fn fmt10_opt(v: Option<f64>) -> String {
    v.map(fmt10).unwrap_or_default()
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    /// The resolved configuration as TOML text; saving it to a file and
    /// rerunning with `--config` reproduces the artifacts byte for byte.
    config_toml: String,
    artifacts: BTreeMap<String, String>,
}

/// Collects artifacts written by one command run.
pub struct OutputTracker {
    out_dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputTracker {
    pub fn new(out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes the run manifest, hashing every artifact written so far.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<()> {
        let mut artifacts = BTreeMap::new();
        for path in &self.written {
            let bytes = fs::read(path)?;
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            let name = path
                .file_name()
                .expect("artifact paths have file names")
                .to_string_lossy()
                .into_owned();
            artifacts.insert(name, hex);
        }
        let manifest = Manifest {
            command,
            seed: config.seed,
            config,
            config_toml: toml::to_string_pretty(config).context("serializing config")?,
            artifacts,
        };
        let json = serde_json::to_vec_pretty(&manifest)?;
        let name = format!("{command}_manifest.json");
        self.write(&name, &json)?;
        self.written.clear(); // success: nothing left to clean up
        Ok(())
    }

    /// Removes everything written during a failed run.
    pub fn clean_up(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}
