//! Effective-configuration snapshots written next to every output.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// SHA-256 of the compact JSON form of `config` (keys sorted).
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let bytes = serde_json::to_vec(&value).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn snapshot_path(output: &Path) -> PathBuf {
    sidecar(output, "config.json")
}

/// `<output>.<suffix>` in the same directory.
pub fn sidecar(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    output.with_file_name(name)
}

#[derive(Serialize)]
struct Snapshot<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config_hash: &'a str,
    config: &'a T,
}

/// Write the snapshot for `output` and return the config hash.
pub fn write_snapshot<T: Serialize>(output: &Path, command: &str, config: &T) -> CliResult<String> {
    let hash = config_hash(config);
    let snap = Snapshot {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: &hash,
        config,
    };
    let path = snapshot_path(output);
    let text = serde_json::to_string_pretty(&snap).expect("snapshot serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(hash)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
