//! Run manifests and output-directory locking.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex SHA-256 of the raw config bytes; ties outputs to the exact input.
pub fn config_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Written atomically when a run finishes (normally or not).
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config_sha256: String,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
    pub exit_status: i32,
}

impl RunManifest {
    pub fn begin(config_sha256: String) -> Self {
        RunManifest {
            config_sha256,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0,
            outputs: Vec::new(),
            exit_status: 0,
        }
    }

    pub fn finish(&mut self, exit_status: i32) {
        self.finished_unix = unix_now();
        self.exit_status = exit_status;
    }

    /// Atomic write: temp file then rename.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = String::new();
        text.push_str(&format!("config_sha256 = \"{}\"\n", self.config_sha256));
        text.push_str(&format!("code_version = \"{}\"\n", self.code_version));
        text.push_str(&format!("started_unix = {}\n", self.started_unix));
        text.push_str(&format!("finished_unix = {}\n", self.finished_unix));
        text.push_str(&format!("exit_status = {}\n", self.exit_status));
        text.push_str("outputs = [\n");
        for o in &self.outputs {
            text.push_str(&format!("  \"{o}\",\n"));
        }
        text.push_str("]\n");
        let tmp = dir.join("manifest.toml.tmp");
        fs::write(&tmp, text)?;
        fs::rename(tmp, dir.join("manifest.toml"))?;
        Ok(())
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Exclusive lock on an output directory; the lock file is removed on drop.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<DirLock> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".nlagg.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::OutputLocked(dir.display().to_string()))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn sha_is_stable_and_hex() {
        let h = config_sha256(b"hello");
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_sha256(b"hello"));
        assert_ne!(h, config_sha256(b"hello "));
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempdir().unwrap();
        let l1 = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(
            DirLock::acquire(dir.path()),
            Err(Error::OutputLocked(_))
        ));
        drop(l1);
        let _l2 = DirLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn manifest_writes_and_lists_outputs() {
        let dir = tempdir().unwrap();
        let mut m = RunManifest::begin("abc".into());
        m.outputs.push("ledger.csv".into());
        m.finish(0);
        m.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        assert!(text.contains("config_sha256 = \"abc\""));
        assert!(text.contains("ledger.csv"));
        let parsed: toml::Value = text.parse().unwrap();
        assert_eq!(parsed["exit_status"].as_integer(), Some(0));
    }
}
