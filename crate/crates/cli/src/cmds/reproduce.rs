use std::path::{Path, PathBuf};

use crate::cmds;
use crate::digest::sha256_file;
use crate::errors::AppError;
use crate::record::{ResolvedCommand, RunRecord};

#[derive(Debug, Clone)]
pub struct ReproduceConfig {
    pub record: PathBuf,
    /// Scratch directory for the rerun's outputs; a temp dir when absent.
    pub out: Option<PathBuf>,
}

fn rerun(command: &ResolvedCommand) -> Result<RunRecord, AppError> {
    match command {
        ResolvedCommand::Gen(c) => cmds::gen::run(c),
        ResolvedCommand::Label(c) => cmds::label::run(c),
        ResolvedCommand::Pretrain(c) => cmds::pretrain::run(c),
        ResolvedCommand::Embed(c) => cmds::embed::run(c),
        ResolvedCommand::Eval(c) => cmds::eval::run(c),
    }
}

pub fn run(cfg: &ReproduceConfig) -> Result<(), AppError> {
    let record = RunRecord::load(&cfg.record)?;
    let mut divergences: Vec<String> = Vec::new();

    for (path, expected) in &record.inputs {
        match sha256_file(Path::new(path)) {
            Ok(found) if &found == expected => {}
            Ok(found) => divergences.push(format!(
                "input {path}: digest {found} != recorded {expected}"
            )),
            Err(_) => divergences.push(format!("input {path}: missing or unreadable")),
        }
    }
    if !divergences.is_empty() {
        for d in &divergences {
            println!("DIVERGED {d}");
        }
        return Err(AppError::Divergence(format!(
            "{} input(s) no longer match the record; rerun would not be comparable",
            divergences.len()
        )));
    }

    // Rerun into scratch space so the original outputs stay untouched.
    let tempdir;
    let scratch: &Path = match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            dir
        }
        None => {
            tempdir = tempfile::tempdir()?;
            tempdir.path()
        }
    };
    println!("replaying {} into {}", record.command.name(), scratch.display());
    let fresh = rerun(&record.command.redirect_out(scratch))?;

    for (rel, expected) in &record.outputs {
        match fresh.outputs.get(rel) {
            Some(found) if found == expected => {}
            Some(found) => divergences.push(format!(
                "output {rel}: digest {found} != recorded {expected}"
            )),
            None => divergences.push(format!("output {rel}: not produced by the rerun")),
        }
    }
    for rel in fresh.outputs.keys() {
        if !record.outputs.contains_key(rel) {
            divergences.push(format!("output {rel}: produced but absent from the record"));
        }
    }

    if divergences.is_empty() {
        println!("reproduce: all {} output digest(s) match", record.outputs.len());
        Ok(())
    } else {
        for d in &divergences {
            println!("DIVERGED {d}");
        }
        Err(AppError::Divergence(format!("{} digest divergence(s)", divergences.len())))
    }
}
