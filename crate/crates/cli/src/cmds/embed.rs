use std::collections::BTreeMap;

use satvq_core::checkpoint;
use satvq_core::embed::{embed_corpus, embed_corpus_static, Variant};
use satvq_core::FeatureSchema;

use crate::cmds::{record_output, write_file};
use crate::corpus;
use crate::digest::sha256_file;
use crate::errors::AppError;
use crate::record::{EmbedConfig, ResolvedCommand, RunRecord};

/// Which checkpoint schema each codeword variant expects to load.
fn required_checkpoint_schema(variant: Variant) -> Option<FeatureSchema> {
    match variant {
        Variant::ForgeMip | Variant::ForgeMipSat => Some(FeatureSchema::Mip),
        Variant::ForgeSat => Some(FeatureSchema::Sat),
        Variant::StaticSat => None,
    }
}

pub fn run(cfg: &EmbedConfig) -> Result<RunRecord, AppError> {
    let variant: Variant = cfg.variant.parse().map_err(|e: String| AppError::usage(e))?;
    match (variant.needs_checkpoint(), &cfg.checkpoint) {
        (true, None) => {
            return Err(AppError::usage(format!(
                "variant {} needs --checkpoint",
                variant.cli_name()
            )))
        }
        (false, Some(_)) => {
            return Err(AppError::usage(format!(
                "variant {} is checkpoint-free; drop --checkpoint",
                variant.cli_name()
            )))
        }
        _ => {}
    }

    let corpus = corpus::load(&cfg.corpus)?;
    let mut inputs = corpus.input_digests()?;
    if let Some(ckpt) = &cfg.checkpoint {
        inputs.insert(ckpt.display().to_string(), sha256_file(ckpt)?);
    }
    let mut record = RunRecord::start(ResolvedCommand::Embed(cfg.clone()), inputs);
    record.write()?;

    // The transfer path keeps the pretrained weights but swaps the node
    // featurization, so the embedding schema differs from the checkpoint's.
    let transfer = variant == Variant::ForgeMipSat;
    let table = match variant {
        Variant::StaticSat => embed_corpus_static(&corpus.entries)?,
        _ => {
            let ckpt = checkpoint::load(cfg.checkpoint.as_ref().unwrap())?;
            let want = required_checkpoint_schema(variant).unwrap();
            if ckpt.schema() != want {
                return Err(AppError::data(format!(
                    "variant {} needs a {:?}-schema checkpoint, but {} was trained on {:?}",
                    variant.cli_name(),
                    want,
                    cfg.checkpoint.as_ref().unwrap().display(),
                    ckpt.schema()
                )));
            }
            embed_corpus(&ckpt.model, &ckpt.standardizer, variant, &corpus.entries)?
        }
    };

    write_file(&cfg.out, &table.to_tsv())?;
    let root = record.command.out_root().to_path_buf();
    let rel = cfg.out.file_name().unwrap().to_string_lossy().to_string();
    let mut outputs = BTreeMap::new();
    record_output(&mut outputs, &root, &rel)?;

    println!(
        "embedded {} instances as {} ({}-dim) -> {}",
        table.rows.len(),
        variant.tag(),
        table.dim,
        cfg.out.display()
    );
    let mut notes = BTreeMap::new();
    notes.insert("transfer".to_string(), serde_json::json!(transfer));
    notes.insert("dim".to_string(), serde_json::json!(table.dim));
    notes.insert("instances".to_string(), serde_json::json!(table.rows.len()));
    record.finish(outputs, notes);
    record.write()?;
    Ok(record)
}
