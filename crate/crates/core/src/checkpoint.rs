//! Versioned binary checkpoints.
//!
//! Layout:
//!
//! ```text
//! magic  "SVQCKPT\0"                      8 bytes
//! version u32 LE                          4 bytes
//! header length u64 LE                    8 bytes
//! header JSON                             (length bytes)
//! parameter blobs, f64 LE, header order   (sum of rows*cols*8)
//! SHA-256 of everything above            32 bytes
//! ```
//!
//! The header records the feature schema, padded feature width, frozen
//! standardizer, training config, a digest of the training corpus, and the
//! name/shape of every parameter blob. Loading verifies the checksum, the
//! version, and each parameter's shape, so corrupted or truncated files are
//! rejected rather than silently misread. Save followed by load reproduces
//! parameters bit for bit.

use crate::features::{FeatureSchema, Standardizer, PADDED_WIDTH};
use crate::model::{TrainConfig, VqGae};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"SVQCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("checkpoint corrupted: checksum mismatch")]
    ChecksumMismatch,
    #[error("checkpoint truncated")]
    Truncated,
    #[error("malformed checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("parameter list mismatch: {0}")]
    ParamMismatch(String),
    #[error("padded feature width {found} does not match this build ({expected})")]
    WidthMismatch { found: usize, expected: usize },
    #[error("invalid stored config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamInfo {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    schema: FeatureSchema,
    padded_width: usize,
    standardizer: Standardizer,
    config: TrainConfig,
    corpus_digest: String,
    params: Vec<ParamInfo>,
}

/// A checkpoint loaded back into memory.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: VqGae,
    pub standardizer: Standardizer,
    pub corpus_digest: String,
}

impl Checkpoint {
    pub fn schema(&self) -> FeatureSchema {
        self.model.schema
    }

    pub fn config(&self) -> TrainConfig {
        self.model.config
    }
}

/// Serialize the model, its frozen standardizer, and the corpus digest.
pub fn save(
    path: &Path,
    model: &VqGae,
    standardizer: &Standardizer,
    corpus_digest: &str,
) -> Result<(), CheckpointError> {
    let params = model.params();
    let header = Header {
        schema: model.schema,
        padded_width: PADDED_WIDTH,
        standardizer: standardizer.clone(),
        config: model.config,
        corpus_digest: corpus_digest.to_string(),
        params: params
            .iter()
            .map(|p| ParamInfo {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
            })
            .collect(),
    };
    let header_json = serde_json::to_vec(&header)?;

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header_json);
    for p in &params {
        for v in p.value.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);

    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Read a checkpoint back, verifying checksum, version, width, and shapes.
pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < MAGIC.len() + 4 + 8 + 32 {
        return Err(CheckpointError::Truncated);
    }

    let (body, stored_digest) = bytes.split_at(bytes.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != stored_digest {
        return Err(CheckpointError::ChecksumMismatch);
    }

    let (magic, rest) = body.split_at(MAGIC.len());
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let (version_bytes, rest) = rest.split_at(4);
    let version = u32::from_le_bytes(version_bytes.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let (len_bytes, rest) = rest.split_at(8);
    let header_len = u64::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
    if rest.len() < header_len {
        return Err(CheckpointError::Truncated);
    }
    let (header_bytes, mut blob) = rest.split_at(header_len);
    let header: Header = serde_json::from_slice(header_bytes)?;

    if header.padded_width != PADDED_WIDTH {
        return Err(CheckpointError::WidthMismatch {
            found: header.padded_width,
            expected: PADDED_WIDTH,
        });
    }
    header
        .config
        .validate()
        .map_err(|e| CheckpointError::BadConfig(e.to_string()))?;

    let mut model = VqGae::init(header.schema, header.config)
        .map_err(|e| CheckpointError::BadConfig(e.to_string()))?;
    {
        let mut params = model.params_mut();
        if params.len() != header.params.len() {
            return Err(CheckpointError::ParamMismatch(format!(
                "expected {} parameters, header lists {}",
                params.len(),
                header.params.len()
            )));
        }
        for (param, info) in params.iter_mut().zip(&header.params) {
            if param.name != info.name {
                return Err(CheckpointError::ParamMismatch(format!(
                    "expected parameter {}, header lists {}",
                    param.name, info.name
                )));
            }
            if param.value.rows() != info.rows || param.value.cols() != info.cols {
                return Err(CheckpointError::ParamMismatch(format!(
                    "parameter {} has shape {}x{}, header lists {}x{}",
                    param.name,
                    param.value.rows(),
                    param.value.cols(),
                    info.rows,
                    info.cols
                )));
            }
            let n_bytes = info.rows * info.cols * 8;
            if blob.len() < n_bytes {
                return Err(CheckpointError::Truncated);
            }
            let (chunk, rest) = blob.split_at(n_bytes);
            blob = rest;
            for (value, raw) in param.value.values_mut().iter_mut().zip(chunk.chunks_exact(8)) {
                *value = f64::from_le_bytes(raw.try_into().unwrap());
            }
        }
    }
    if !blob.is_empty() {
        return Err(CheckpointError::ParamMismatch(format!(
            "{} trailing bytes after final parameter",
            blob.len()
        )));
    }

    Ok(Checkpoint {
        model,
        standardizer: header.standardizer,
        corpus_digest: header.corpus_digest,
    })
}
