//! Run manifests written next to every output.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Environment variable that relocates relative output paths.
pub const OUT_DIR_ENV: &str = "NETIDENT_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub input: String,
    pub input_sha256: String,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
    pub exit_code: i32,
}

impl RunManifest {
    pub fn new(command: &str, input: &Path, input_bytes: &[u8], parameters: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input: input.display().to_string(),
            input_sha256: sha256_hex(input_bytes),
            parameters,
            outputs: Vec::new(),
            exit_code: 0,
        }
    }

    /// Writes `<stem>.manifest.json` beside `primary`.
    pub fn write_beside(&self, primary: &Path) -> Result<PathBuf, CliError> {
        let path = sidecar(primary, "manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `dir/stem.suffix` for `dir/stem.ext`.
pub fn sidecar(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{stem}.{suffix}"))
}

/// Resolves an output path against [`OUT_DIR_ENV`] and creates its parent.
pub fn resolve_output(path: &Path) -> Result<PathBuf, CliError> {
    let resolved = match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path.to_path_buf(),
    };
    if let Some(parent) = resolved.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("out/run.csv"), "manifest.json"), PathBuf::from("out/run.manifest.json"));
        assert_eq!(sidecar(Path::new("run"), "summary.json"), PathBuf::from("run.summary.json"));
    }
}
