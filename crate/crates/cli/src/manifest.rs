use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// One line of `manifest.jsonl`, appended after every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn append(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(dir.join(MANIFEST_FILE))?;
        writeln!(f, "{}", serde_json::to_string(self).expect("manifest serializes"))
    }
}

pub fn read_manifests(dir: &Path) -> std::io::Result<Vec<RunManifest>> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
    text.lines()
        .map(|l| serde_json::from_str(l).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
        .collect()
}
