//! Artifact writing: every file is written to a temporary sibling and
//! renamed into place, and each run ends with a manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;

/// Output directory plus the artifacts written so far.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `name` atomically from the bytes produced by `fill`.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> anyhow::Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> anyhow::Result<()>,
    {
        let mut bytes = Vec::new();
        fill(&mut bytes)?;
        let path = self.path(name);
        write_atomic(&path, &bytes)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        self.write_with(name, |buf| {
            serde_json::to_writer_pretty(&mut *buf, value)?;
            buf.push(b'\n');
            Ok(())
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

/// Everything needed to re-run a command identically.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub artifacts: Vec<String>,
    pub seed: u64,
    pub version: &'static str,
    pub exit_code: i32,
    pub wall_time_s: f64,
}

pub fn write_manifest(artifacts: &Artifacts, manifest: &RunManifest<'_>) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    write_atomic(&artifacts.path("manifest.json"), &bytes)
}
