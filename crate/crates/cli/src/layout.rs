use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use augbench_core::checkpoint::FORMAT_VERSION;

use crate::config::SCHEMA_VERSION;

/// `runs/<name>/{config, results, checkpoints, reports}`.
pub struct RunLayout {
    pub root: PathBuf,
    pub config: PathBuf,
    pub results: PathBuf,
    pub checkpoints: PathBuf,
    pub reports: PathBuf,
}

impl RunLayout {
    pub fn create(root: &Path) -> Result<Self> {
        let layout = Self {
            root: root.to_path_buf(),
            config: root.join("config"),
            results: root.join("results"),
            checkpoints: root.join("checkpoints"),
            reports: root.join("reports"),
        };
        for dir in [&layout.config, &layout.results, &layout.checkpoints, &layout.reports] {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        Ok(layout)
    }
}

#[derive(Serialize)]
struct Versions {
    augbench: &'static str,
    config_schema: u32,
    checkpoint_format: u32,
}

/// Everything needed to rerun a command: its arguments, the seeds that
/// drove it and the effective settings. No timestamps, so identical runs
/// write identical records.
#[derive(Serialize)]
pub struct ReproRecord<'a, S: Serialize> {
    command: &'a str,
    args: Vec<String>,
    seeds: Vec<u64>,
    versions: Versions,
    settings: &'a S,
}

impl<'a, S: Serialize> ReproRecord<'a, S> {
    pub fn new(command: &'a str, seeds: Vec<u64>, settings: &'a S) -> Self {
        Self {
            command,
            args: std::env::args().skip(1).collect(),
            seeds,
            versions: Versions {
                augbench: env!("CARGO_PKG_VERSION"),
                config_schema: SCHEMA_VERSION,
                checkpoint_format: FORMAT_VERSION,
            },
            settings,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
        }
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}

/// `<file>.repro.json` next to a single-file output.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".repro.json");
    path.with_file_name(name)
}
