//! Corpus manifests: one tab-separated line per instance, linking an id to
//! its family, feasibility label, size, and CNF file path.

use crate::generators::Family;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("line {line}: expected 6 tab-separated fields, got {got}")]
    FieldCount { line: usize, got: usize },
    #[error("line {line}: {0}", .message)]
    BadField { line: usize, message: String },
    #[error("duplicate instance id {0:?}")]
    DuplicateId(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One corpus instance. `label` is the feasibility ground truth where known:
/// `Some(true)` satisfiable, `Some(false)` unsatisfiable, `None` unknown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub family: Family,
    pub label: Option<bool>,
    pub num_vars: usize,
    pub num_clauses: usize,
    /// CNF file path, relative to the manifest's directory.
    pub path: String,
}

impl ManifestEntry {
    /// Group key combining family and feasibility, e.g. `clique/sat`.
    /// Instances with unknown labels group under `<family>/unknown`.
    pub fn group(&self) -> String {
        format!("{}/{}", self.family, label_str(self.label))
    }
}

/// Canonical feasibility string: `sat`, `unsat`, or `unknown`.
pub fn label_str(label: Option<bool>) -> &'static str {
    match label {
        Some(true) => "sat",
        Some(false) => "unsat",
        None => "unknown",
    }
}

/// Inverse of [`label_str`]; `None` when the string is not a known label.
pub fn parse_label(s: &str) -> Option<Option<bool>> {
    match s {
        "sat" => Some(Some(true)),
        "unsat" => Some(Some(false)),
        "unknown" => Some(None),
        _ => None,
    }
}

const HEADER: &str = "# id\tfamily\tlabel\tnum_vars\tnum_clauses\tpath";

/// Render entries as manifest text (header comment plus one line each).
pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for e in entries {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            e.id,
            e.family,
            label_str(e.label),
            e.num_vars,
            e.num_clauses,
            e.path
        ));
    }
    out
}

/// Parse manifest text. Blank lines and lines starting with `#` are skipped.
pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(ManifestError::FieldCount { line: line_no, got: fields.len() });
        }
        let bad = |message: String| ManifestError::BadField { line: line_no, message };
        let family: Family = fields[1].parse().map_err(bad)?;
        let label = match fields[2] {
            "sat" => Some(true),
            "unsat" => Some(false),
            "unknown" => None,
            other => return Err(bad(format!("unknown label {other:?}"))),
        };
        let num_vars: usize =
            fields[3].parse().map_err(|e| bad(format!("bad num_vars: {e}")))?;
        let num_clauses: usize =
            fields[4].parse().map_err(|e| bad(format!("bad num_clauses: {e}")))?;
        let entry = ManifestEntry {
            id: fields[0].to_string(),
            family,
            label,
            num_vars,
            num_clauses,
            path: fields[5].to_string(),
        };
        if !seen.insert(entry.id.clone()) {
            return Err(ManifestError::DuplicateId(entry.id));
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn load(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    parse_manifest(&std::fs::read_to_string(path)?)
}

pub fn save(path: &Path, entries: &[ManifestEntry]) -> Result<(), ManifestError> {
    std::fs::write(path, write_manifest(entries))?;
    Ok(())
}
