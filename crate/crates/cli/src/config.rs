use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use satvq_core::generators::{CliqueParams, RandomKsatParams, SrParams, VertexCoverParams};

use crate::errors::AppError;

/// Optional TOML config file; every key mirrors a command-line flag and is
/// overridden by it. Precedence: flag > config file > built-in default.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub variant: Option<String>,
    pub k: Option<usize>,
    pub restarts: Option<usize>,
    pub trials: Option<usize>,
    pub eval_seeds: Option<usize>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub gen: GenSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub latent_dim: Option<usize>,
    pub codebook_size: Option<usize>,
    pub lr: Option<f64>,
    pub beta: Option<f64>,
    pub lambda_edge: Option<f64>,
    pub neg_ratio: Option<f64>,
    pub reinit_period: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSection {
    pub families: Option<Vec<String>>,
    pub count: Option<usize>,
    pub balanced: Option<bool>,
    pub budget: Option<u64>,
    pub random_ksat: Option<RandomKsatParams>,
    pub clique: Option<CliqueParams>,
    pub vertex_cover: Option<VertexCoverParams>,
    pub sr: Option<SrParams>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile, AppError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| AppError::usage(format!("bad config {}: {e}", path.display())))
    }
}
