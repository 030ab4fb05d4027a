use std::collections::BTreeMap;

use satvq_core::cnf::write_dimacs;
use satvq_core::dpll::{solve, SolveResult};
use satvq_core::generators::{
    random_clique, random_ksat, random_vertex_cover, sr_pair, Family, GenError,
};
use satvq_core::manifest::{self, ManifestEntry};
use satvq_core::CnfFormula;

use crate::cmds::{record_output, write_file};
use crate::errors::AppError;
use crate::record::{GenConfig, ResolvedCommand, RunRecord};

/// Give up after this many candidate draws per requested instance.
const ATTEMPT_FACTOR: u64 = 50;

struct FamilySummary {
    sat: usize,
    unsat: usize,
    unknown: usize,
    attempts: u64,
}

fn label_of(formula: &CnfFormula, budget: u64) -> Option<bool> {
    match solve(formula, budget) {
        SolveResult::Satisfiable(_) => Some(true),
        SolveResult::Unsatisfiable => Some(false),
        SolveResult::BudgetExceeded => None,
    }
}

/// Draw candidates until `count` instances are kept. In balanced mode only
/// instances that fill the remaining sat/unsat quota are kept; otherwise
/// every draw is kept, including budget-exhausted unknowns.
fn generate_family(
    cfg: &GenConfig,
    family: Family,
    family_index: usize,
) -> Result<(Vec<(Option<bool>, CnfFormula)>, FamilySummary), AppError> {
    let count = cfg.count;
    if cfg.balanced && count % 2 != 0 {
        return Err(AppError::usage(format!(
            "balanced generation needs an even per-family count, got {count}"
        )));
    }
    let target_each = count / 2;
    // Decorrelate the per-family salt ranges so families never share streams.
    let salt_base = (family_index as u64) << 32;
    let cap = ATTEMPT_FACTOR * count as u64;

    let mut kept: Vec<(Option<bool>, CnfFormula)> = Vec::with_capacity(count);
    let mut summary = FamilySummary { sat: 0, unsat: 0, unknown: 0, attempts: 0 };

    if family == Family::Sr {
        // sr draws labeled pairs, so balance is structural.
        if count % 2 != 0 {
            return Err(AppError::usage(format!(
                "sr generates pairs and needs an even count, got {count}"
            )));
        }
        let mut params = cfg.sr;
        params.solve_budget = cfg.budget;
        while kept.len() < count && summary.attempts < cap {
            let salt = salt_base + summary.attempts;
            summary.attempts += 1;
            match sr_pair(&params, cfg.seed, salt) {
                Ok(pair) => {
                    kept.push((Some(true), pair.sat));
                    kept.push((Some(false), pair.unsat));
                    summary.sat += 1;
                    summary.unsat += 1;
                }
                Err(GenError::BudgetExceeded) | Err(GenError::ClauseCapReached(_)) => {
                    summary.unknown += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
    } else {
        while kept.len() < count && summary.attempts < cap {
            let salt = salt_base + summary.attempts;
            summary.attempts += 1;
            let formula = match family {
                Family::RandomKsat => random_ksat(&cfg.random_ksat, cfg.seed, salt)?,
                Family::Clique => random_clique(&cfg.clique, cfg.seed, salt)?,
                Family::VertexCover => random_vertex_cover(&cfg.vertex_cover, cfg.seed, salt)?,
                Family::Sr => unreachable!(),
            };
            let label = label_of(&formula, cfg.budget);
            if cfg.balanced {
                match label {
                    Some(true) if summary.sat < target_each => summary.sat += 1,
                    Some(false) if summary.unsat < target_each => summary.unsat += 1,
                    _ => {
                        if label.is_none() {
                            summary.unknown += 1;
                        }
                        continue;
                    }
                }
            } else {
                match label {
                    Some(true) => summary.sat += 1,
                    Some(false) => summary.unsat += 1,
                    None => summary.unknown += 1,
                }
            }
            kept.push((label, formula));
        }
    }

    if kept.len() < count {
        return Err(AppError::data(format!(
            "{family}: kept only {} of {count} instances after {} attempts; \
             relax the balance targets or adjust the generator parameters",
            kept.len(),
            summary.attempts
        )));
    }
    Ok((kept, summary))
}

pub fn run(cfg: &GenConfig) -> Result<RunRecord, AppError> {
    if cfg.families.is_empty() {
        return Err(AppError::usage("gen needs at least one family"));
    }
    if cfg.count == 0 {
        return Err(AppError::usage("gen needs a positive per-family count"));
    }
    let mut seen = std::collections::HashSet::new();
    for f in &cfg.families {
        if !seen.insert(*f) {
            return Err(AppError::usage(format!("family {f} listed twice")));
        }
    }

    let mut record = RunRecord::start(ResolvedCommand::Gen(cfg.clone()), BTreeMap::new());
    record.write()?;

    let mut entries: Vec<ManifestEntry> = Vec::new();
    let mut files: Vec<(String, String)> = Vec::new();
    let mut notes = BTreeMap::new();
    for (family_index, &family) in cfg.families.iter().enumerate() {
        let (kept, summary) = generate_family(cfg, family, family_index)?;
        for (idx, (label, formula)) in kept.into_iter().enumerate() {
            let id = format!("{family}-{idx:04}");
            let path = format!("cnf/{id}.cnf");
            entries.push(ManifestEntry {
                id,
                family,
                label,
                num_vars: formula.num_vars(),
                num_clauses: formula.num_clauses(),
                path: path.clone(),
            });
            files.push((path, write_dimacs(&formula)));
        }
        println!(
            "{family}: {} sat, {} unsat, {} unknown ({} attempts)",
            summary.sat, summary.unsat, summary.unknown, summary.attempts
        );
        notes.insert(
            family.to_string(),
            serde_json::json!({
                "sat": summary.sat,
                "unsat": summary.unsat,
                "unknown": summary.unknown,
                "attempts": summary.attempts,
            }),
        );
    }

    let mut outputs = BTreeMap::new();
    for (rel, text) in &files {
        write_file(&cfg.out.join(rel), text)?;
        record_output(&mut outputs, &cfg.out, rel)?;
    }
    let manifest_path = cfg.out.join("manifest.tsv");
    manifest::save(&manifest_path, &entries)?;
    record_output(&mut outputs, &cfg.out, "manifest.tsv")?;

    println!("wrote {} instances to {}", entries.len(), cfg.out.display());
    record.finish(outputs, notes);
    record.write()?;
    Ok(record)
}
