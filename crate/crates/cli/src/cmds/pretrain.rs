use std::collections::BTreeMap;
use std::fmt::Write as _;

use satvq_core::embed::{prepare_corpus, Variant};
use satvq_core::{checkpoint, model};

use crate::cmds::{record_output, write_file};
use crate::corpus;
use crate::errors::AppError;
use crate::record::{PretrainConfig, ResolvedCommand, RunRecord};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOSS_LOG_FILE: &str = "loss_log.tsv";

pub fn run(cfg: &PretrainConfig) -> Result<RunRecord, AppError> {
    let variant: Variant = cfg
        .variant
        .parse()
        .map_err(|e: String| AppError::usage(e))?;
    let schema = match variant {
        Variant::ForgeSat | Variant::ForgeMip => variant.embedding_schema().unwrap(),
        other => {
            return Err(AppError::usage(format!(
                "pretraining builds a checkpoint from scratch; use forge-sat or forge-mip, not {}",
                other.cli_name()
            )))
        }
    };
    cfg.train.validate()?;

    let corpus = corpus::load(&cfg.corpus)?;
    let mut record =
        RunRecord::start(ResolvedCommand::Pretrain(cfg.clone()), corpus.input_digests()?);
    record.write()?;

    let formulas = corpus.formulas();
    let (standardizer, instances) = prepare_corpus(schema, &formulas);
    println!(
        "training {} on {} instances ({} epochs)...",
        variant.cli_name(),
        instances.len(),
        cfg.train.epochs
    );
    let (trained, loss_log) = model::train(schema, cfg.train, &instances)?;

    std::fs::create_dir_all(&cfg.out)?;
    // Write through a temp name and rename, so an abort leaves no partial
    // checkpoint behind.
    let ckpt_path = cfg.out.join(CHECKPOINT_FILE);
    let tmp_path = cfg.out.join(format!("{CHECKPOINT_FILE}.tmp"));
    if let Err(e) = checkpoint::save(&tmp_path, &trained, &standardizer, &corpus.digest) {
        let _ = std::fs::remove_file(&tmp_path);
        return Err(e.into());
    }
    std::fs::rename(&tmp_path, &ckpt_path)?;

    let mut log_text = String::from("epoch\tfeature\tedge\tcode\tcommit\ttotal\n");
    for (i, l) in loss_log.iter().enumerate() {
        let _ = writeln!(
            log_text,
            "{}\t{}\t{}\t{}\t{}\t{}",
            i + 1,
            l.feature,
            l.edge,
            l.code,
            l.commit,
            l.total
        );
    }
    write_file(&cfg.out.join(LOSS_LOG_FILE), &log_text)?;

    let mut outputs = BTreeMap::new();
    record_output(&mut outputs, &cfg.out, CHECKPOINT_FILE)?;
    record_output(&mut outputs, &cfg.out, LOSS_LOG_FILE)?;

    let first = loss_log.first().map(|l| l.total).unwrap_or(f64::NAN);
    let last = loss_log.last().map(|l| l.total).unwrap_or(f64::NAN);
    let codewords_in_use = trained.codebook.usage.iter().filter(|&&u| u > 0).count();
    println!(
        "loss {first:.6} -> {last:.6} over {} epochs; {codewords_in_use}/{} codewords in use",
        loss_log.len(),
        trained.codebook.size()
    );

    let mut notes = BTreeMap::new();
    notes.insert("corpus_digest".to_string(), serde_json::json!(corpus.digest));
    notes.insert("first_total_loss".to_string(), serde_json::json!(first));
    notes.insert("final_total_loss".to_string(), serde_json::json!(last));
    notes.insert("codewords_in_use".to_string(), serde_json::json!(codewords_in_use));
    record.finish(outputs, notes);
    record.write()?;
    Ok(record)
}
