use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use satvq_core::cnf::parse_dimacs;
use satvq_core::manifest::{self, ManifestEntry};
use satvq_core::CnfFormula;

use crate::digest::{sha256_bytes, sha256_file};
use crate::errors::AppError;

/// A manifest plus every formula it points at, in manifest order.
pub struct Corpus {
    pub manifest_path: PathBuf,
    pub entries: Vec<(ManifestEntry, CnfFormula)>,
    /// Digest over the manifest bytes and each CNF file's digest, in order.
    pub digest: String,
}

impl Corpus {
    /// Input digests for a run record: the manifest and every CNF file.
    pub fn input_digests(&self) -> Result<BTreeMap<String, String>, AppError> {
        let mut inputs = BTreeMap::new();
        inputs.insert(
            self.manifest_path.display().to_string(),
            sha256_file(&self.manifest_path)?,
        );
        let root = manifest_dir(&self.manifest_path);
        for (entry, _) in &self.entries {
            let path = root.join(&entry.path);
            inputs.insert(path.display().to_string(), sha256_file(&path)?);
        }
        Ok(inputs)
    }

    pub fn formulas(&self) -> Vec<(String, CnfFormula)> {
        self.entries.iter().map(|(e, f)| (e.id.clone(), f.clone())).collect()
    }
}

fn manifest_dir(manifest_path: &Path) -> PathBuf {
    manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf()
}

/// Load a manifest and parse every CNF file it references (paths are
/// relative to the manifest's directory). DIMACS warnings are tolerated;
/// parse errors are data errors.
pub fn load(manifest_path: &Path) -> Result<Corpus, AppError> {
    let manifest_bytes = std::fs::read(manifest_path)
        .map_err(|e| AppError::data(format!("cannot read {}: {e}", manifest_path.display())))?;
    let text = String::from_utf8(manifest_bytes.clone())
        .map_err(|_| AppError::data(format!("{} is not UTF-8", manifest_path.display())))?;
    let entries = manifest::parse_manifest(&text)?;
    if entries.is_empty() {
        return Err(AppError::data(format!("{} lists no instances", manifest_path.display())));
    }

    let root = manifest_dir(manifest_path);
    let mut loaded = Vec::with_capacity(entries.len());
    let mut digest_feed = sha256_bytes(&manifest_bytes);
    for entry in entries {
        let path = root.join(&entry.path);
        let bytes = std::fs::read(&path).map_err(|e| {
            AppError::data(format!("{}: cannot read {}: {e}", entry.id, path.display()))
        })?;
        digest_feed.push('\n');
        digest_feed.push_str(&sha256_bytes(&bytes));
        let text = String::from_utf8(bytes)
            .map_err(|_| AppError::data(format!("{} is not UTF-8", path.display())))?;
        let (formula, _warnings) = parse_dimacs(&text)
            .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        if formula.num_vars() != entry.num_vars || formula.num_clauses() != entry.num_clauses {
            return Err(AppError::data(format!(
                "{}: manifest says {} vars / {} clauses but file has {} / {}",
                entry.id,
                entry.num_vars,
                entry.num_clauses,
                formula.num_vars(),
                formula.num_clauses()
            )));
        }
        loaded.push((entry, formula));
    }

    Ok(Corpus {
        manifest_path: manifest_path.to_path_buf(),
        entries: loaded,
        digest: sha256_bytes(digest_feed.as_bytes()),
    })
}
