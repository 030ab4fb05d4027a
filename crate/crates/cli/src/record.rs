//! Run records: every subcommand writes a JSON record of its fully resolved
//! configuration plus input/output digests, and `reproduce` replays the
//! record and compares digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use satvq_core::generators::{CliqueParams, Family, RandomKsatParams, SrParams, VertexCoverParams};
use satvq_core::TrainConfig;

use crate::errors::AppError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub families: Vec<Family>,
    /// Instances kept per family (sr yields this many pairs · 2).
    pub count: usize,
    pub balanced: bool,
    pub budget: u64,
    pub random_ksat: RandomKsatParams,
    pub clique: CliqueParams,
    pub vertex_cover: VertexCoverParams,
    pub sr: SrParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub budget: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub corpus: PathBuf,
    pub out: PathBuf,
    pub variant: String,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbedConfig {
    pub corpus: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub variant: String,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalConfig {
    pub tables: Vec<PathBuf>,
    pub out: PathBuf,
    /// Cluster count; `None` means "number of ground-truth groups".
    pub k: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub num_seeds: usize,
    pub trials: usize,
    pub require: Vec<String>,
}

/// A subcommand with every effective value resolved (flag > config file >
/// default). Replaying this struct reruns the command exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum ResolvedCommand {
    Gen(GenConfig),
    Label(LabelConfig),
    Pretrain(PretrainConfig),
    Embed(EmbedConfig),
    Eval(EvalConfig),
}

impl ResolvedCommand {
    pub fn name(&self) -> &'static str {
        match self {
            ResolvedCommand::Gen(_) => "gen",
            ResolvedCommand::Label(_) => "label",
            ResolvedCommand::Pretrain(_) => "pretrain",
            ResolvedCommand::Embed(_) => "embed",
            ResolvedCommand::Eval(_) => "eval",
        }
    }

    /// The root all output digests are keyed against: a directory for gen,
    /// pretrain, and eval; the output file's parent for label and embed.
    pub fn out_root(&self) -> &Path {
        match self {
            ResolvedCommand::Gen(c) => &c.out,
            ResolvedCommand::Label(c) => c.out.parent().unwrap_or(Path::new(".")),
            ResolvedCommand::Pretrain(c) => &c.out,
            ResolvedCommand::Embed(c) => c.out.parent().unwrap_or(Path::new(".")),
            ResolvedCommand::Eval(c) => &c.out,
        }
    }

    /// Rewrite the output location to `root`, keeping file names for the
    /// single-file commands. Used by `reproduce` to rerun into scratch space.
    pub fn redirect_out(&self, root: &Path) -> ResolvedCommand {
        let mut copy = self.clone();
        match &mut copy {
            ResolvedCommand::Gen(c) => c.out = root.to_path_buf(),
            ResolvedCommand::Pretrain(c) => c.out = root.to_path_buf(),
            ResolvedCommand::Eval(c) => c.out = root.to_path_buf(),
            ResolvedCommand::Label(c) => {
                let name = c.out.file_name().expect("label output is a file");
                c.out = root.join(name);
            }
            ResolvedCommand::Embed(c) => {
                let name = c.out.file_name().expect("embed output is a file");
                c.out = root.join(name);
            }
        }
        copy
    }
}

/// What a finished subcommand leaves behind, beyond its files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    #[serde(flatten)]
    pub command: ResolvedCommand,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    /// Input path (as given) -> SHA-256.
    pub inputs: BTreeMap<String, String>,
    /// Output path relative to the command's out root -> SHA-256.
    pub outputs: BTreeMap<String, String>,
    /// Free-form facts about the run (transfer flag, summary counts, ...).
    pub notes: BTreeMap<String, serde_json::Value>,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunRecord {
    pub fn start(command: ResolvedCommand, inputs: BTreeMap<String, String>) -> RunRecord {
        RunRecord {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command,
            started_unix: now_unix(),
            finished_unix: None,
            inputs,
            outputs: BTreeMap::new(),
            notes: BTreeMap::new(),
        }
    }

    pub fn finish(
        &mut self,
        outputs: BTreeMap<String, String>,
        notes: BTreeMap<String, serde_json::Value>,
    ) {
        self.outputs = outputs;
        self.notes = notes;
        self.finished_unix = Some(now_unix());
    }

    /// Record file name for a subcommand, e.g. `run-pretrain.json`.
    pub fn file_name(command_name: &str) -> String {
        format!("run-{command_name}.json")
    }

    pub fn path_for(&self) -> PathBuf {
        self.command.out_root().join(RunRecord::file_name(self.command.name()))
    }

    pub fn write(&self) -> Result<PathBuf, AppError> {
        let path = self.path_for();
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<RunRecord, AppError> {
        let text = fs::read_to_string(path)
            .map_err(|e| AppError::data(format!("cannot read record {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| AppError::data(format!("bad record {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunRecord {
        let cfg = EmbedConfig {
            corpus: PathBuf::from("corpus/manifest.tsv"),
            checkpoint: Some(PathBuf::from("model.ckpt")),
            variant: "forge-mip-sat".to_string(),
            out: PathBuf::from("out/table.tsv"),
        };
        let mut inputs = BTreeMap::new();
        inputs.insert("model.ckpt".to_string(), "ab".repeat(32));
        RunRecord::start(ResolvedCommand::Embed(cfg), inputs)
    }

    #[test]
    fn record_roundtrips_through_json() {
        let mut record = sample();
        let mut outputs = BTreeMap::new();
        outputs.insert("table.tsv".to_string(), "cd".repeat(32));
        let mut notes = BTreeMap::new();
        notes.insert("transfer".to_string(), serde_json::json!(true));
        record.finish(outputs, notes);

        let text = serde_json::to_string(&record).unwrap();
        let back: RunRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert_eq!(back.command.name(), "embed");
        assert!(back.finished_unix.is_some());
    }

    #[test]
    fn redirect_keeps_file_names() {
        let record = sample();
        let moved = record.command.redirect_out(Path::new("/tmp/scratch"));
        match moved {
            ResolvedCommand::Embed(c) => {
                assert_eq!(c.out, PathBuf::from("/tmp/scratch/table.tsv"));
                // Inputs are untouched by redirection.
                assert_eq!(c.corpus, PathBuf::from("corpus/manifest.tsv"));
            }
            _ => unreachable!(),
        }
    }
}
