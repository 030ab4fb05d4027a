//! Embedding products: instance-level codeword histograms, per-node
//! codeword embeddings, the static feature-mean baseline, and the delimited
//! embedding table they are exported through.

use crate::cnf::CnfFormula;
use crate::features::{mip_features, sat_features, FeatureSchema, Standardizer};
use crate::manifest::{label_str, parse_label, ManifestEntry};
use crate::mip::{mip_to_graph, sat_to_mip};
use crate::model::{GraphInstance, VqGae};
use crate::numerics::Matrix;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("instance {0} has no nodes to embed")]
    EmptyInstance(String),
    #[error("cannot build a histogram from an empty code list")]
    EmptyCodes,
    #[error("code {code} out of range for codebook size {k}")]
    CodeOutOfRange { code: usize, k: usize },
    #[error("formula has no clauses or no variables after normalization")]
    EmptyFormula,
    #[error("malformed embedding table: {0}")]
    Table(String),
}

/// The embedding pipelines ("variants") the toolkit distinguishes. The
/// first three are codeword histograms from a pretrained model; the last is
/// the fixed feature-mean baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// MIP-schema checkpoint embedding MIP-featurized instances.
    ForgeMip,
    /// MIP-schema checkpoint reused on SAT-featurized instances (transfer).
    ForgeMipSat,
    /// SAT-schema checkpoint embedding SAT-featurized instances.
    ForgeSat,
    /// Raw SAT feature means; no learned parameters.
    StaticSat,
}

impl Variant {
    /// Uppercase tag used in embedding tables and reports.
    pub fn tag(self) -> &'static str {
        match self {
            Variant::ForgeMip => "FORGE-MIP",
            Variant::ForgeMipSat => "FORGE-MIP-SAT",
            Variant::ForgeSat => "FORGE-SAT",
            Variant::StaticSat => "STATIC-SAT",
        }
    }

    /// Lowercase name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Variant::ForgeMip => "forge-mip",
            Variant::ForgeMipSat => "forge-mip-sat",
            Variant::ForgeSat => "forge-sat",
            Variant::StaticSat => "static-sat",
        }
    }

    pub fn all() -> [Variant; 4] {
        [Variant::ForgeMip, Variant::ForgeMipSat, Variant::ForgeSat, Variant::StaticSat]
    }

    /// The feature schema this variant applies to instances at embedding
    /// time (None for the static baseline, which bypasses the model).
    pub fn embedding_schema(self) -> Option<FeatureSchema> {
        match self {
            Variant::ForgeMip => Some(FeatureSchema::Mip),
            Variant::ForgeMipSat | Variant::ForgeSat => Some(FeatureSchema::Sat),
            Variant::StaticSat => None,
        }
    }

    pub fn needs_checkpoint(self) -> bool {
        !matches!(self, Variant::StaticSat)
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        for v in Variant::all() {
            if s.eq_ignore_ascii_case(v.cli_name()) || s.eq_ignore_ascii_case(v.tag()) {
                return Ok(v);
            }
        }
        Err(format!(
            "unknown variant {s:?} (expected one of: forge-mip, forge-mip-sat, forge-sat, static-sat)"
        ))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Translate a formula and package it as a model-ready instance under the
/// requested feature schema, standardized with the supplied statistics.
pub fn prepare(
    tag: impl Into<String>,
    formula: &CnfFormula,
    schema: FeatureSchema,
    standardizer: &Standardizer,
) -> GraphInstance {
    let (mip, _) = sat_to_mip(formula);
    let graph = mip_to_graph(&mip);
    let features = match schema {
        FeatureSchema::Sat => sat_features(&mip),
        FeatureSchema::Mip => mip_features(&mip),
    };
    GraphInstance::new(tag, graph, &standardizer.apply(&features))
}

/// Featurize a corpus, fit the standardizer on it, and return the
/// standardized model-ready instances (the pretraining input path).
pub fn prepare_corpus(
    schema: FeatureSchema,
    formulas: &[(String, CnfFormula)],
) -> (Standardizer, Vec<GraphInstance>) {
    let translated: Vec<_> = formulas
        .iter()
        .map(|(tag, f)| {
            let (mip, _) = sat_to_mip(f);
            let graph = mip_to_graph(&mip);
            let features = match schema {
                FeatureSchema::Sat => sat_features(&mip),
                FeatureSchema::Mip => mip_features(&mip),
            };
            (tag, graph, features)
        })
        .collect();
    let refs: Vec<_> = translated.iter().map(|(_, _, f)| f).collect();
    let standardizer = Standardizer::fit(&refs);
    let instances = translated
        .into_iter()
        .map(|(tag, graph, features)| {
            GraphInstance::new(tag.clone(), graph, &standardizer.apply(&features))
        })
        .collect();
    (standardizer, instances)
}

/// Normalized histogram of code assignments: `histogram[k] = count(code ==
/// k) / len(codes)`.
pub fn instance_embedding(codes: &[usize], k: usize) -> Result<Vec<f64>, EmbedError> {
    if codes.is_empty() {
        return Err(EmbedError::EmptyCodes);
    }
    let mut histogram = vec![0.0; k];
    for &code in codes {
        if code >= k {
            return Err(EmbedError::CodeOutOfRange { code, k });
        }
        histogram[code] += 1.0;
    }
    let n = codes.len() as f64;
    for h in histogram.iter_mut() {
        *h /= n;
    }
    Ok(histogram)
}

/// Per-node codes and their codeword vectors, split by side.
#[derive(Debug, Clone)]
pub struct NodeEmbeddingSet {
    pub clause_codes: Vec<usize>,
    pub clause_vectors: Matrix,
    pub variable_codes: Vec<usize>,
    pub variable_vectors: Matrix,
}

/// Assign every node its nearest codeword; the embedding vectors are exact
/// codebook rows.
pub fn node_embeddings(model: &VqGae, inst: &GraphInstance) -> NodeEmbeddingSet {
    let (z_c, z_v) = model.encode(inst);
    let (clause_codes, clause_vectors) = model.codebook.quantize(&z_c);
    let (variable_codes, variable_vectors) = model.codebook.quantize(&z_v);
    NodeEmbeddingSet { clause_codes, clause_vectors, variable_codes, variable_vectors }
}

/// Codeword-histogram embedding of one prepared instance: codes over all
/// nodes of both sides, pooled into a single K-bin distribution.
pub fn embed_instance(model: &VqGae, inst: &GraphInstance) -> Result<Vec<f64>, EmbedError> {
    if inst.num_nodes() == 0 {
        return Err(EmbedError::EmptyInstance(inst.tag.clone()));
    }
    let (mut codes, var_codes) = model.assign_codes(inst);
    codes.extend(var_codes);
    instance_embedding(&codes, model.codebook.size())
}

/// The fixed baseline: means of the raw (unstandardized) SAT features — 4
/// clause columns then 6 variable columns, 10 entries total.
pub fn static_instance_embedding(formula: &CnfFormula) -> Result<Vec<f64>, EmbedError> {
    let (mip, _) = sat_to_mip(formula);
    let features = sat_features(&mip);
    let nc = features.constraints.rows();
    let nv = features.variables.rows();
    if nc == 0 || nv == 0 {
        return Err(EmbedError::EmptyFormula);
    }
    let schema = FeatureSchema::Sat;
    let mut out = Vec::with_capacity(schema.constraint_width() + schema.variable_width());
    for c in 0..schema.constraint_width() {
        let mut sum = 0.0;
        for r in 0..nc {
            sum += features.constraints.get(r, c);
        }
        out.push(sum / nc as f64);
    }
    for c in 0..schema.variable_width() {
        let mut sum = 0.0;
        for r in 0..nv {
            sum += features.variables.get(r, c);
        }
        out.push(sum / nv as f64);
    }
    Ok(out)
}

pub const STATIC_EMBEDDING_WIDTH: usize = 10;

/// One labeled embedding row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub id: String,
    pub family: String,
    pub label: Option<bool>,
    pub vector: Vec<f64>,
}

impl EmbeddingRow {
    /// Ground-truth group key, `family/feasibility`.
    pub fn group(&self) -> String {
        format!("{}/{}", self.family, label_str(self.label))
    }
}

/// Instance embeddings for one variant, in manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub variant: Variant,
    pub dim: usize,
    pub rows: Vec<EmbeddingRow>,
}

impl EmbeddingTable {
    pub fn new(variant: Variant, dim: usize) -> Self {
        EmbeddingTable { variant, dim, rows: Vec::new() }
    }

    pub fn push(&mut self, row: EmbeddingRow) {
        assert_eq!(row.vector.len(), self.dim, "embedding width mismatch");
        self.rows.push(row);
    }

    /// Row vectors stacked into a matrix (N x dim).
    pub fn matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            m.row_mut(i).copy_from_slice(&row.vector);
        }
        m
    }

    /// Group key per row, aligned with `matrix()` rows.
    pub fn groups(&self) -> Vec<String> {
        self.rows.iter().map(EmbeddingRow::group).collect()
    }

    /// Tab-separated serialization with a header row:
    /// `id family feasibility variant v0.. v{D-1}`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        out.push_str("id\tfamily\tfeasibility\tvariant");
        for i in 0..self.dim {
            let _ = write!(out, "\tv{i}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(
                out,
                "{}\t{}\t{}\t{}",
                row.id,
                row.family,
                label_str(row.label),
                self.variant.tag()
            );
            for v in &row.vector {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<EmbeddingTable, EmbedError> {
        let bad = |line: usize, msg: String| EmbedError::Table(format!("line {line}: {msg}"));
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| EmbedError::Table("empty file".to_string()))?;
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() < 5 || cols[..4] != ["id", "family", "feasibility", "variant"] {
            return Err(EmbedError::Table(format!("unexpected header {header:?}")));
        }
        let dim = cols.len() - 4;
        let mut table: Option<EmbeddingTable> = None;
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != dim + 4 {
                return Err(bad(
                    line_no,
                    format!("expected {} fields, found {}", dim + 4, fields.len()),
                ));
            }
            let label = parse_label(fields[2])
                .ok_or_else(|| bad(line_no, format!("unknown feasibility {:?}", fields[2])))?;
            let variant: Variant =
                fields[3].parse().map_err(|e: String| bad(line_no, e))?;
            let table = table.get_or_insert_with(|| EmbeddingTable::new(variant, dim));
            if table.variant != variant {
                return Err(bad(
                    line_no,
                    format!("mixed variants: {} then {}", table.variant, variant),
                ));
            }
            let mut vector = Vec::with_capacity(dim);
            for f in &fields[4..] {
                vector.push(
                    f.parse::<f64>()
                        .map_err(|e| bad(line_no, format!("bad value {f:?}: {e}")))?,
                );
            }
            table.push(EmbeddingRow {
                id: fields[0].to_string(),
                family: fields[1].to_string(),
                label,
                vector,
            });
        }
        table.ok_or_else(|| EmbedError::Table("no data rows".to_string()))
    }
}

/// Embed an already-loaded corpus with a pretrained model, preserving input
/// order. The caller picks the featurization schema via the variant and
/// supplies the checkpoint's frozen standardizer.
pub fn embed_corpus(
    model: &VqGae,
    standardizer: &Standardizer,
    variant: Variant,
    corpus: &[(ManifestEntry, CnfFormula)],
) -> Result<EmbeddingTable, EmbedError> {
    let schema = variant
        .embedding_schema()
        .expect("codeword variants only; use embed_corpus_static for the baseline");
    let mut table = EmbeddingTable::new(variant, model.codebook.size());
    for (entry, formula) in corpus {
        let inst = prepare(&entry.id, formula, schema, standardizer);
        let vector = embed_instance(model, &inst)?;
        table.push(EmbeddingRow {
            id: entry.id.clone(),
            family: entry.family.to_string(),
            label: entry.label,
            vector,
        });
    }
    Ok(table)
}

/// Embed an already-loaded corpus with the static baseline.
pub fn embed_corpus_static(
    corpus: &[(ManifestEntry, CnfFormula)],
) -> Result<EmbeddingTable, EmbedError> {
    let mut table = EmbeddingTable::new(Variant::StaticSat, STATIC_EMBEDDING_WIDTH);
    for (entry, formula) in corpus {
        let vector = static_instance_embedding(formula)?;
        table.push(EmbeddingRow {
            id: entry.id.clone(),
            family: entry.family.to_string(),
            label: entry.label,
            vector,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Clause;
    use crate::generators::Family;
    use crate::model::TrainConfig;

    fn formula(num_vars: usize, clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::new(
            num_vars,
            clauses.iter().map(|c| Clause::from_codes(c).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(
            instance_embedding(&[0, 0, 1], 4).unwrap(),
            vec![2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]
        );
        assert_eq!(instance_embedding(&[3], 4).unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(instance_embedding(&[], 4), Err(EmbedError::EmptyCodes)));
        assert!(matches!(
            instance_embedding(&[4], 4),
            Err(EmbedError::CodeOutOfRange { code: 4, k: 4 })
        ));
    }

    #[test]
    fn histogram_is_permutation_invariant_and_sums_to_one() {
        let codes = [2usize, 0, 1, 2, 2, 3, 0];
        let mut shuffled = codes;
        shuffled.reverse();
        let a = instance_embedding(&codes, 5).unwrap();
        let b = instance_embedding(&shuffled, 5).unwrap();
        assert_eq!(a, b);
        let sum: f64 = a.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn static_embedding_single_clause_example() {
        // (x1 v -x2 v x3): clause features [3, 2, 1, 2.0].
        let f = formula(3, &[&[1, -2, 3]]);
        let e = static_instance_embedding(&f).unwrap();
        assert_eq!(e.len(), STATIC_EMBEDDING_WIDTH);
        assert_eq!(&e[..4], &[3.0, 2.0, 1.0, 2.0]);
        // Variable means: degrees all 1, pos [1,0,1], neg [0,1,0],
        // ratios pos/max(neg,1) = [1,0,1], pos_norm = pos/(2/3), neg_norm = neg/(1/3).
        let expect_var = [
            1.0,
            2.0 / 3.0,
            1.0 / 3.0,
            2.0 / 3.0,
            (1.5 + 0.0 + 1.5) / 3.0,
            (0.0 + 3.0 + 0.0) / 3.0,
        ];
        for (got, want) in e[4..].iter().zip(expect_var) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn static_embedding_rejects_empty() {
        let f = CnfFormula::new(3, vec![]).unwrap();
        assert!(matches!(static_instance_embedding(&f), Err(EmbedError::EmptyFormula)));
    }

    #[test]
    fn node_embeddings_are_codebook_rows() {
        let f = formula(4, &[&[1, -2], &[2, 3, -4], &[-1, 4]]);
        let cfg = TrainConfig {
            hidden_dim: 8,
            latent_dim: 4,
            codebook_size: 4,
            ..TrainConfig::default()
        };
        let model = VqGae::init(FeatureSchema::Sat, cfg).unwrap();
        let inst = prepare("t", &f, FeatureSchema::Sat, &Standardizer::identity());
        let set = node_embeddings(&model, &inst);
        assert_eq!(set.clause_codes.len(), 3);
        assert_eq!(set.variable_codes.len(), 4);
        for (i, &code) in set.clause_codes.iter().enumerate() {
            assert!(code < model.codebook.size());
            assert_eq!(set.clause_vectors.row(i), model.codebook.codeword(code));
        }
        for (i, &code) in set.variable_codes.iter().enumerate() {
            assert_eq!(set.variable_vectors.row(i), model.codebook.codeword(code));
        }
    }

    #[test]
    fn embedding_invariant_under_renaming_and_reordering() {
        let f1 = formula(3, &[&[1, -2], &[2, 3], &[-1, 3]]);
        // Swap variables 1 and 3 and reorder clauses.
        let f2 = formula(3, &[&[-3, 1], &[3, -2], &[2, 1]]);
        let cfg = TrainConfig {
            hidden_dim: 8,
            latent_dim: 4,
            codebook_size: 8,
            ..TrainConfig::default()
        };
        let model = VqGae::init(FeatureSchema::Sat, cfg).unwrap();
        let std = Standardizer::identity();
        let e1 =
            embed_instance(&model, &prepare("a", &f1, FeatureSchema::Sat, &std)).unwrap();
        let e2 =
            embed_instance(&model, &prepare("b", &f2, FeatureSchema::Sat, &std)).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn table_roundtrip() {
        let mut table = EmbeddingTable::new(Variant::ForgeSat, 3);
        table.push(EmbeddingRow {
            id: "a-0".to_string(),
            family: Family::Clique.to_string(),
            label: Some(true),
            vector: vec![0.5, 0.25, 0.25],
        });
        table.push(EmbeddingRow {
            id: "a-1".to_string(),
            family: Family::RandomKsat.to_string(),
            label: None,
            vector: vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        });
        let text = table.to_tsv();
        let back = EmbeddingTable::from_tsv(&text).unwrap();
        assert_eq!(back, table);
        assert_eq!(back.rows[0].group(), "clique/sat");
        assert!(EmbeddingTable::from_tsv("nope\n").is_err());
        assert!(EmbeddingTable::from_tsv("id\tfamily\tfeasibility\tvariant\tv0\n").is_err());
    }

    #[test]
    fn corpus_embedding_preserves_order_and_normalization() {
        let entries: Vec<(ManifestEntry, CnfFormula)> = (0..5)
            .map(|i| {
                let f = crate::generators::random_ksat(
                    &crate::generators::RandomKsatParams { num_vars: 6, num_clauses: 10, k: 3 },
                    11,
                    i,
                )
                .unwrap();
                (
                    ManifestEntry {
                        id: format!("rk-{i}"),
                        family: Family::RandomKsat,
                        label: Some(i % 2 == 0),
                        num_vars: 6,
                        num_clauses: 10,
                        path: format!("cnf/rk-{i}.cnf"),
                    },
                    f,
                )
            })
            .collect();
        let cfg = TrainConfig {
            hidden_dim: 8,
            latent_dim: 4,
            codebook_size: 6,
            ..TrainConfig::default()
        };
        let model = VqGae::init(FeatureSchema::Sat, cfg).unwrap();
        let table =
            embed_corpus(&model, &Standardizer::identity(), Variant::ForgeSat, &entries).unwrap();
        assert_eq!(table.rows.len(), 5);
        assert_eq!(table.dim, 6);
        for (row, (entry, _)) in table.rows.iter().zip(&entries) {
            assert_eq!(row.id, entry.id);
            let sum: f64 = row.vector.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12);
        }
        let static_table = embed_corpus_static(&entries).unwrap();
        assert_eq!(static_table.dim, STATIC_EMBEDDING_WIDTH);
        assert_eq!(static_table.rows.len(), 5);
    }
}
