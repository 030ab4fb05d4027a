use std::collections::BTreeMap;

use rayon::prelude::*;

use satvq_core::dpll::{solve, SolveResult};
use satvq_core::manifest;

use crate::cmds::record_output;
use crate::corpus;
use crate::errors::AppError;
use crate::record::{LabelConfig, ResolvedCommand, RunRecord};

/// Re-solve every instance in a corpus and write a manifest with fresh
/// feasibility labels. The input manifest is left untouched.
pub fn run(cfg: &LabelConfig) -> Result<RunRecord, AppError> {
    if cfg.out == cfg.corpus {
        return Err(AppError::usage(
            "label does not rewrite its input; pass a different --out manifest path",
        ));
    }
    let corpus = corpus::load(&cfg.corpus)?;
    let mut record =
        RunRecord::start(ResolvedCommand::Label(cfg.clone()), corpus.input_digests()?);
    record.write()?;

    let relabeled: Vec<_> = corpus
        .entries
        .par_iter()
        .map(|(entry, formula)| {
            let label = match solve(formula, cfg.budget) {
                SolveResult::Satisfiable(_) => Some(true),
                SolveResult::Unsatisfiable => Some(false),
                SolveResult::BudgetExceeded => None,
            };
            let mut entry = entry.clone();
            entry.label = label;
            entry
        })
        .collect();

    let (mut sat, mut unsat, mut unknown) = (0usize, 0usize, 0usize);
    for e in &relabeled {
        match e.label {
            Some(true) => sat += 1,
            Some(false) => unsat += 1,
            None => unknown += 1,
        }
    }

    if let Some(parent) = cfg.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    manifest::save(&cfg.out, &relabeled)?;

    let root = record.command.out_root().to_path_buf();
    let rel = cfg.out.file_name().unwrap().to_string_lossy().to_string();
    let mut outputs = BTreeMap::new();
    record_output(&mut outputs, &root, &rel)?;

    println!("labeled {} instances: {sat} sat, {unsat} unsat, {unknown} unknown", relabeled.len());
    let mut notes = BTreeMap::new();
    notes.insert("sat".to_string(), serde_json::json!(sat));
    notes.insert("unsat".to_string(), serde_json::json!(unsat));
    notes.insert("unknown".to_string(), serde_json::json!(unknown));
    record.finish(outputs, notes);
    record.write()?;
    Ok(record)
}
