use std::collections::BTreeMap;

use satvq_core::embed::EmbeddingTable;
use satvq_core::eval::{pca_2d, report, write_metrics_tsv};
use satvq_core::plot::scatter_svg;

use crate::cmds::{record_output, write_file};
use crate::digest::sha256_file;
use crate::errors::AppError;
use crate::record::{EvalConfig, ResolvedCommand, RunRecord};

pub const METRICS_FILE: &str = "metrics.tsv";

pub fn run(cfg: &EvalConfig) -> Result<RunRecord, AppError> {
    if cfg.tables.is_empty() {
        return Err(AppError::usage("eval needs at least one --tables file"));
    }
    if cfg.restarts == 0 || cfg.num_seeds == 0 {
        return Err(AppError::usage("restarts and eval seeds must be positive"));
    }

    let mut inputs = BTreeMap::new();
    for path in &cfg.tables {
        inputs.insert(path.display().to_string(), sha256_file(path)?);
    }
    let mut record = RunRecord::start(ResolvedCommand::Eval(cfg.clone()), inputs);
    record.write()?;

    let mut tables = Vec::with_capacity(cfg.tables.len());
    for path in &cfg.tables {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::data(format!("cannot read {}: {e}", path.display())))?;
        let table = EmbeddingTable::from_tsv(&text)
            .map_err(|e| AppError::data(format!("{}: {e}", path.display())))?;
        tables.push(table);
    }
    for want in &cfg.require {
        if !tables.iter().any(|t| t.variant.cli_name() == want || t.variant.tag() == want) {
            return Err(AppError::data(format!("required variant {want} has no table")));
        }
    }

    // Instances without a feasibility label have no composite group, so they
    // are dropped from the clustering evaluation (and the drop is reported).
    let mut excluded = 0usize;
    for table in &mut tables {
        let before = table.rows.len();
        table.rows.retain(|r| r.label.is_some());
        excluded += before - table.rows.len();
    }
    if let Some(empty) = tables.iter().find(|t| t.rows.is_empty()) {
        return Err(AppError::data(format!(
            "table {} has no labeled instances left to evaluate",
            empty.variant
        )));
    }
    if excluded > 0 {
        println!("excluded {excluded} unknown-feasibility rows across {} tables", tables.len());
    }

    let groups = {
        let mut distinct: Vec<String> = Vec::new();
        for g in tables[0].groups() {
            if !distinct.contains(&g) {
                distinct.push(g);
            }
        }
        distinct
    };
    let k = cfg.k.unwrap_or(groups.len());
    let seeds: Vec<u64> = (0..cfg.num_seeds as u64).map(|i| cfg.seed + i).collect();

    let refs: Vec<&EmbeddingTable> = tables.iter().collect();
    let evaluations = report(&refs, k, cfg.restarts, &seeds, Some(cfg.trials), cfg.seed)?;

    std::fs::create_dir_all(&cfg.out)?;
    let rows: Vec<_> = evaluations.iter().map(|e| e.row.clone()).collect();
    write_file(&cfg.out.join(METRICS_FILE), &write_metrics_tsv(&rows))?;
    let mut outputs = BTreeMap::new();
    record_output(&mut outputs, &cfg.out, METRICS_FILE)?;

    let mut notes = BTreeMap::new();
    notes.insert("excluded_unknown".to_string(), serde_json::json!(excluded));
    notes.insert("k".to_string(), serde_json::json!(k));
    notes.insert("groups".to_string(), serde_json::json!(groups));
    for (table, evaluation) in tables.iter().zip(&evaluations) {
        let (coords, explained) = pca_2d(&table.matrix())?;
        let title = format!(
            "{} — PCA of instance embeddings ({:.0}% + {:.0}% variance)",
            table.variant.tag(),
            100.0 * explained[0],
            100.0 * explained[1]
        );
        let svg = scatter_svg(&coords, &table.groups(), &title);
        let rel = format!("scatter-{}.svg", table.variant.cli_name());
        write_file(&cfg.out.join(&rel), &svg)?;
        record_output(&mut outputs, &cfg.out, &rel)?;

        let null_note = evaluation
            .null
            .as_ref()
            .map(|n| format!(", null pctile {:.1} (p99 {:.4})", n.percentile, n.null_p99))
            .unwrap_or_default();
        println!(
            "{}: NMI {:.4} ± {:.4}, purity {:.4}/{:.4} (macro/weighted), k={k}{null_note}",
            evaluation.row.variant,
            evaluation.row.nmi_mean,
            evaluation.row.nmi_std,
            evaluation.row.purity_macro_mean,
            evaluation.row.purity_weighted_mean,
        );
        notes.insert(
            format!("nmi:{}", table.variant.cli_name()),
            serde_json::json!(evaluation.row.nmi_mean),
        );
        if let Some(null) = &evaluation.null {
            notes.insert(
                format!("null_percentile:{}", table.variant.cli_name()),
                serde_json::json!(null.percentile),
            );
        }
    }

    record.finish(outputs, notes);
    record.write()?;
    Ok(record)
}
