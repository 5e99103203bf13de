//! Artifact files: atomic writes and JSON sidecars carrying the config hash.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use deformfield::grid::GridValue;
use deformfield::Field;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Metadata stored next to an artifact as `<file>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub config_hash: String,
    pub kind: String,
    #[serde(default)]
    pub details: Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    let mut text = serde_json::to_string_pretty(sidecar).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(&sidecar_path(path), text.as_bytes())
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let p = sidecar_path(path);
    let f = fs::File::open(&p).map_err(|e| CliError::io(&p, e))?;
    serde_json::from_reader(BufReader::new(f)).map_err(|e| CliError::io(&p, e))
}

/// Fails unless the artifact's sidecar carries `hash` (or `force` is set).
pub fn check_hash(path: &Path, hash: &str, force: bool) -> Result<()> {
    let side = read_sidecar(path)?;
    if side.config_hash != hash {
        if force {
            log::warn!("{} was produced by config {}, continuing under --force", path.display(), side.config_hash);
        } else {
            return Err(CliError::Config(format!(
                "{} was produced by config {}, not {hash}; rerun the earlier stages or pass --force",
                path.display(),
                side.config_hash
            )));
        }
    }
    Ok(())
}

pub fn write_grid<T: GridValue>(path: &Path, grid: &Field<T>, sidecar: &Sidecar) -> Result<()> {
    write_atomic(path, &grid.to_grd1_bytes())?;
    write_sidecar(path, sidecar)
}

pub fn read_grid<T: GridValue>(path: &Path) -> Result<Field<T>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Field::from_grd1_bytes(&bytes).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str, sidecar: Option<&Sidecar>) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    if let Some(s) = sidecar {
        write_sidecar(path, s)?;
    }
    Ok(())
}
