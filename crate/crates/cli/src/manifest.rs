//! Run inventory: each command records every file it writes together with a
//! content hash, then re-reads the files to prove the inventory is faithful.

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub started: String,
    pub finished: String,
    pub config_path: String,
    /// Exact bytes of the configuration file, so a run can be reproduced
    /// from the manifest alone.
    pub config_text: String,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub struct RunWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunWriter {
    pub fn new(dir: &Path, command: &str, seed: u64, config_path: &Path, raw: &str) -> Result<RunWriter> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                master_seed: seed,
                started: timestamp(),
                finished: String::new(),
                config_path: config_path.display().to_string(),
                config_text: raw.to_string(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(OutputFile {
            path: name.to_string(),
            bytes: contents.len() as u64,
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(path)
    }

    /// Stamp the end time, write `manifest.json`, then re-read every listed
    /// output and check its hash against the inventory.
    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.finished = timestamp();
        let text = serde_json::to_string_pretty(&self.manifest).context("encoding manifest")?;
        let path = self.dir.join("manifest.json");
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        for entry in &self.manifest.outputs {
            let on_disk = fs::read(self.dir.join(&entry.path))
                .with_context(|| format!("re-reading {}", entry.path))?;
            if sha256_hex(&on_disk) != entry.sha256 {
                bail!("output {} changed between write and verification", entry.path);
            }
        }
        Ok(path)
    }
}
