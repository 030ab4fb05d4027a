pub mod embed;
pub mod eval;
pub mod gen;
pub mod label;
pub mod pretrain;
pub mod reproduce;

use std::collections::BTreeMap;
use std::path::Path;

use crate::digest::sha256_file;
use crate::errors::AppError;

/// Digest an output file under `root` and record it by its relative path.
pub(crate) fn record_output(
    outputs: &mut BTreeMap<String, String>,
    root: &Path,
    rel: &str,
) -> Result<(), AppError> {
    outputs.insert(rel.to_string(), sha256_file(&root.join(rel))?);
    Ok(())
}

/// Write a file and create its parent directories as needed.
pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)
        .map_err(|e| AppError::data(format!("cannot write {}: {e}", path.display())))
}
