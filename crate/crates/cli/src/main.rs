//! satvq: generate SAT corpora, pretrain the VQ graph autoencoder, embed
//! instances, and evaluate the embeddings by clustering.

mod cmds;
mod config;
mod corpus;
mod digest;
mod errors;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use satvq_core::generators::{CliqueParams, Family, RandomKsatParams, VertexCoverParams};
use satvq_core::TrainConfig;

use crate::config::ConfigFile;
use crate::errors::AppError;
use crate::record::{
    EmbedConfig, EvalConfig, GenConfig, LabelConfig, PretrainConfig,
};

/// Caps the rayon worker pool when set (a positive thread count).
const WORKERS_ENV: &str = "SATVQ_WORKERS";

const DEFAULT_SEED: u64 = 42;
const DEFAULT_SOLVE_BUDGET: u64 = 200_000;
const DEFAULT_COUNT: usize = 40;
const DEFAULT_RESTARTS: usize = 10;
const DEFAULT_TRIALS: usize = 1000;
const DEFAULT_EVAL_SEEDS: usize = 3;

/// Generator parameters sized so DPLL labels everything quickly and each
/// family lands near a 50/50 sat/unsat split at the default seed.
fn default_ksat() -> RandomKsatParams {
    RandomKsatParams { num_vars: 25, num_clauses: 112, k: 3 }
}

fn default_clique() -> CliqueParams {
    CliqueParams { num_vertices: 10, edge_prob: 0.43, clique_size: 4 }
}

fn default_vcover() -> VertexCoverParams {
    VertexCoverParams { num_vertices: 9, edge_prob: 0.35, cover_size: 4 }
}

#[derive(Parser)]
#[command(
    name = "satvq",
    version,
    about = "SAT instance embeddings via a vector-quantized graph autoencoder"
)]
struct Cli {
    /// TOML config file; command-line flags override its keys.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Global RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a labeled corpus of CNF instances.
    Gen(GenArgs),
    /// Re-solve a corpus and write a freshly labeled manifest.
    Label(LabelArgs),
    /// Train a VQ graph autoencoder and write a checkpoint.
    Pretrain(PretrainArgs),
    /// Embed a corpus with a chosen variant.
    Embed(EmbedArgs),
    /// Cluster embedding tables and report NMI/purity metrics.
    Eval(EvalArgs),
    /// Replay a run record and verify output digests.
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output corpus directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated families: random-ksat, sr, clique, vcover.
    #[arg(long, value_name = "LIST")]
    families: Option<String>,
    /// Instances kept per family.
    #[arg(long)]
    count: Option<usize>,
    /// Keep an equal sat/unsat split per family (true/false).
    #[arg(long, value_name = "BOOL")]
    balanced: Option<bool>,
    /// DPLL decision budget per labeling call.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(Args)]
struct LabelArgs {
    /// Corpus manifest to re-solve.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Where to write the relabeled manifest.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// DPLL decision budget per instance.
    #[arg(long)]
    budget: Option<u64>,
}

/// TrainConfig overrides, shared by flags and the config file.
#[derive(Args)]
struct TrainArgs {
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Encoder hidden width.
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Latent (codeword) dimension.
    #[arg(long)]
    latent_dim: Option<usize>,
    /// Number of codewords.
    #[arg(long)]
    codebook_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Commitment-loss weight.
    #[arg(long)]
    beta: Option<f64>,
    /// Edge-loss weight.
    #[arg(long)]
    lambda_edge: Option<f64>,
    /// Negative samples per true edge.
    #[arg(long)]
    neg_ratio: Option<f64>,
    /// Re-seed dead codewords every N epochs (0 disables).
    #[arg(long, value_name = "N")]
    reinit_period: Option<usize>,
}

#[derive(Args)]
struct PretrainArgs {
    /// Corpus manifest to train on.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Output directory for the checkpoint and loss log.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Pretraining variant: forge-sat or forge-mip.
    #[arg(long)]
    variant: Option<String>,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct EmbedArgs {
    /// Corpus manifest to embed.
    #[arg(long, value_name = "FILE")]
    corpus: Option<PathBuf>,
    /// Pretrained checkpoint (required by the forge-* variants).
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    /// Variant: forge-mip, forge-mip-sat, forge-sat, or static-sat.
    #[arg(long)]
    variant: Option<String>,
    /// Output embedding table (TSV).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Embedding tables to evaluate together.
    #[arg(long, value_name = "FILE", num_args = 1..)]
    tables: Vec<PathBuf>,
    /// Output directory for metrics and scatter plots.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Cluster count (default: the number of ground-truth groups).
    #[arg(long)]
    k: Option<usize>,
    /// k-means restarts per clustering seed.
    #[arg(long)]
    restarts: Option<usize>,
    /// Permutation-null trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Number of clustering seeds (seed, seed+1, ...).
    #[arg(long)]
    eval_seeds: Option<usize>,
    /// Comma-separated variants that must be present among the tables.
    #[arg(long, value_name = "LIST")]
    require: Option<String>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Run record to replay.
    #[arg(long, value_name = "FILE")]
    record: PathBuf,
    /// Scratch directory for the rerun (a temp dir when omitted).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests land here too; only real parse
            // errors map to the usage exit code.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_workers() -> Result<(), AppError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            AppError::usage(format!("{WORKERS_ENV}={raw:?} is not a positive thread count"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| AppError::data(format!("cannot size worker pool: {e}")))
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    init_workers()?;
    let file = ConfigFile::load(cli.config.as_deref())?;
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);

    match cli.cmd {
        Cmd::Gen(args) => {
            let cfg = resolve_gen(args, &file, seed)?;
            cmds::gen::run(&cfg)?;
        }
        Cmd::Label(args) => {
            let cfg = resolve_label(args, &file)?;
            cmds::label::run(&cfg)?;
        }
        Cmd::Pretrain(args) => {
            let cfg = resolve_pretrain(args, &file, seed)?;
            cmds::pretrain::run(&cfg)?;
        }
        Cmd::Embed(args) => {
            let cfg = resolve_embed(args, &file)?;
            cmds::embed::run(&cfg)?;
        }
        Cmd::Eval(args) => {
            let cfg = resolve_eval(args, &file, seed)?;
            cmds::eval::run(&cfg)?;
        }
        Cmd::Reproduce(args) => {
            let cfg = cmds::reproduce::ReproduceConfig { record: args.record, out: args.out };
            cmds::reproduce::run(&cfg)?;
        }
    }
    Ok(())
}

fn require_out(flag: Option<PathBuf>, file: &ConfigFile, what: &str) -> Result<PathBuf, AppError> {
    flag.or_else(|| file.out.clone())
        .ok_or_else(|| AppError::usage(format!("{what} needs --out (or `out` in the config file)")))
}

fn require_corpus(flag: Option<PathBuf>, file: &ConfigFile, what: &str) -> Result<PathBuf, AppError> {
    flag.or_else(|| file.corpus.clone()).ok_or_else(|| {
        AppError::usage(format!("{what} needs --corpus (or `corpus` in the config file)"))
    })
}

fn parse_families(raw: &str) -> Result<Vec<Family>, AppError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Family>().map_err(AppError::Usage))
        .collect()
}

fn resolve_gen(args: GenArgs, file: &ConfigFile, seed: u64) -> Result<GenConfig, AppError> {
    let families = match args.families {
        Some(raw) => parse_families(&raw)?,
        None => match &file.gen.families {
            Some(list) => list
                .iter()
                .map(|s| s.parse::<Family>().map_err(AppError::Usage))
                .collect::<Result<_, _>>()?,
            None => vec![Family::RandomKsat, Family::Clique, Family::VertexCover],
        },
    };
    let budget = args.budget.or(file.gen.budget).unwrap_or(DEFAULT_SOLVE_BUDGET);
    let mut sr = file.gen.sr.unwrap_or_default();
    sr.solve_budget = budget;
    Ok(GenConfig {
        out: require_out(args.out, file, "gen")?,
        seed,
        families,
        count: args.count.or(file.gen.count).unwrap_or(DEFAULT_COUNT),
        balanced: args.balanced.or(file.gen.balanced).unwrap_or(true),
        budget,
        random_ksat: file.gen.random_ksat.unwrap_or_else(default_ksat),
        clique: file.gen.clique.unwrap_or_else(default_clique),
        vertex_cover: file.gen.vertex_cover.unwrap_or_else(default_vcover),
        sr,
    })
}

fn resolve_label(args: LabelArgs, file: &ConfigFile) -> Result<LabelConfig, AppError> {
    Ok(LabelConfig {
        corpus: require_corpus(args.corpus, file, "label")?,
        out: require_out(args.out, file, "label")?,
        budget: args.budget.or(file.gen.budget).unwrap_or(DEFAULT_SOLVE_BUDGET),
    })
}

fn resolve_train(args: &TrainArgs, file: &ConfigFile, seed: u64) -> TrainConfig {
    let d = TrainConfig::default();
    let f = &file.train;
    TrainConfig {
        hidden_dim: args.hidden_dim.or(f.hidden_dim).unwrap_or(d.hidden_dim),
        latent_dim: args.latent_dim.or(f.latent_dim).unwrap_or(d.latent_dim),
        codebook_size: args.codebook_size.or(f.codebook_size).unwrap_or(d.codebook_size),
        lr: args.lr.or(f.lr).unwrap_or(d.lr),
        beta: args.beta.or(f.beta).unwrap_or(d.beta),
        lambda_edge: args.lambda_edge.or(f.lambda_edge).unwrap_or(d.lambda_edge),
        neg_ratio: args.neg_ratio.or(f.neg_ratio).unwrap_or(d.neg_ratio),
        epochs: args.epochs.or(f.epochs).unwrap_or(d.epochs),
        seed,
        reinit_period: args.reinit_period.or(f.reinit_period).unwrap_or(d.reinit_period),
    }
}

fn resolve_pretrain(
    args: PretrainArgs,
    file: &ConfigFile,
    seed: u64,
) -> Result<PretrainConfig, AppError> {
    Ok(PretrainConfig {
        corpus: require_corpus(args.corpus, file, "pretrain")?,
        out: require_out(args.out, file, "pretrain")?,
        variant: args
            .variant
            .or_else(|| file.variant.clone())
            .unwrap_or_else(|| "forge-sat".to_string()),
        train: resolve_train(&args.train, file, seed),
    })
}

fn resolve_embed(args: EmbedArgs, file: &ConfigFile) -> Result<EmbedConfig, AppError> {
    Ok(EmbedConfig {
        corpus: require_corpus(args.corpus, file, "embed")?,
        checkpoint: args.checkpoint.or_else(|| file.checkpoint.clone()),
        variant: args
            .variant
            .or_else(|| file.variant.clone())
            .ok_or_else(|| AppError::usage("embed needs --variant"))?,
        out: require_out(args.out, file, "embed")?,
    })
}

fn resolve_eval(args: EvalArgs, file: &ConfigFile, seed: u64) -> Result<EvalConfig, AppError> {
    if args.tables.is_empty() {
        return Err(AppError::usage("eval needs at least one --tables file"));
    }
    let require = match args.require {
        Some(raw) => raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };
    Ok(EvalConfig {
        tables: args.tables,
        out: require_out(args.out, file, "eval")?,
        k: args.k.or(file.k),
        restarts: args.restarts.or(file.restarts).unwrap_or(DEFAULT_RESTARTS),
        seed,
        num_seeds: args.eval_seeds.or(file.eval_seeds).unwrap_or(DEFAULT_EVAL_SEEDS),
        trials: args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        require,
    })
}
