//! Run manifests written next to every CLI artifact.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SprintError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileChecksum {
    pub fn of(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Ok(Self {
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
        })
    }
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| SprintError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Every resolved option, keyed by flag name without the leading `--`.
    /// Feeding this file back through `--config` repeats the run.
    pub options: serde_json::Map<String, serde_json::Value>,
    pub inputs: Vec<FileChecksum>,
    pub outputs: Vec<FileChecksum>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        options: serde_json::Map<String, serde_json::Value>,
        inputs: &[&Path],
        outputs: &[&Path],
        seed: Option<u64>,
        elapsed: Duration,
    ) -> Result<Self> {
        Ok(Self {
            command: command.to_string(),
            options,
            inputs: inputs.iter().map(FileChecksum::of).collect::<Result<_>>()?,
            outputs: outputs.iter().map(FileChecksum::of).collect::<Result<_>>()?,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: elapsed.as_secs_f64(),
        })
    }

    /// `<artifact>.manifest.json`
    pub fn path_for(artifact: &Path) -> PathBuf {
        let mut name = artifact.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        artifact.with_file_name(name)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(path, text).map_err(|e| SprintError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SprintError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SprintError::parse(path.display().to_string(), e))
    }

    /// Files whose current checksum differs from the recorded one.
    pub fn changed_files(&self) -> Result<Vec<PathBuf>> {
        let mut changed = Vec::new();
        for entry in self.inputs.iter().chain(&self.outputs) {
            if file_sha256(&entry.path)? != entry.sha256 {
                changed.push(entry.path.clone());
            }
        }
        Ok(changed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_and_verifies_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, "abc").unwrap();
        let m = RunManifest::new("test", Default::default(), &[&input], &[], Some(3), Duration::ZERO).unwrap();
        assert_eq!(
            m.inputs[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(m.changed_files().unwrap().is_empty());
        let path = RunManifest::path_for(&dir.path().join("model.sprint"));
        assert!(path.ends_with("model.sprint.manifest.json"));
        m.save(&path).unwrap();
        assert_eq!(RunManifest::load(&path).unwrap(), m);
        std::fs::write(&input, "abd").unwrap();
        assert_eq!(m.changed_files().unwrap(), vec![input]);
    }
}
