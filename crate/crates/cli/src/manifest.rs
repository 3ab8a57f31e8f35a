//! Run manifests: everything needed to replay a training run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toruse::kg_data::split_paths;
use toruse::TrainConfig;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub split: String,
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifacts {
    pub model: PathBuf,
    pub vocab: PathBuf,
    pub metrics: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: TrainConfig,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub data_files: Vec<FileChecksum>,
    pub counts: DatasetCounts,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub wall_seconds: f64,
    pub artifacts: Artifacts,
}

pub fn sha256_file(path: &Path) -> CliResult<(String, u64)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

pub fn checksum_splits(dir: &Path) -> CliResult<Vec<FileChecksum>> {
    ["train", "valid", "test"]
        .iter()
        .zip(split_paths(dir))
        .map(|(split, path)| {
            let (sha256, bytes) = sha256_file(&path)?;
            Ok(FileChecksum {
                split: split.to_string(),
                path,
                sha256,
                bytes,
            })
        })
        .collect()
}

/// Fails with a consistency error if any split file changed since `recorded`.
pub fn verify_checksums(recorded: &[FileChecksum]) -> CliResult<()> {
    for entry in recorded {
        let (sha256, _) = sha256_file(&entry.path)?;
        if sha256 != entry.sha256 {
            return Err(toruse::Error::Consistency(format!(
                "{} changed since the manifest was written (sha256 {} != {})",
                entry.path.display(),
                sha256,
                entry.sha256
            ))
            .into());
        }
    }
    Ok(())
}

impl RunManifest {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}
