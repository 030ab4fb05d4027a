//! Raw node features for both schemas, padding to a shared width, and the
//! per-side column standardizer whose statistics travel with a checkpoint.

use crate::mip::{MipInstance, Sense, VarType};
use crate::numerics::Matrix;
use serde::{Deserialize, Serialize};

/// Every feature matrix is padded with zero columns to this width so that
/// checkpoints trained on one schema can consume features from the other.
pub const PADDED_WIDTH: usize = 7;

/// Padded features plus a leading side-indicator column (1 for constraints,
/// 0 for variables).
pub const MODEL_INPUT_WIDTH: usize = PADDED_WIDTH + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSchema {
    Sat,
    Mip,
}

impl FeatureSchema {
    /// Number of meaningful (non-padding) constraint-side columns.
    pub fn constraint_width(self) -> usize {
        match self {
            FeatureSchema::Sat => 4,
            FeatureSchema::Mip => 6,
        }
    }

    /// Number of meaningful (non-padding) variable-side columns.
    pub fn variable_width(self) -> usize {
        match self {
            FeatureSchema::Sat => 6,
            FeatureSchema::Mip => 7,
        }
    }

    pub fn constraint_feature_names(self) -> &'static [&'static str] {
        match self {
            FeatureSchema::Sat => &["width", "pos_count", "neg_count", "pos_neg_ratio"],
            FeatureSchema::Mip => &["is_ge", "is_le", "is_eq", "rhs", "nnz", "mean_abs_coeff"],
        }
    }

    pub fn variable_feature_names(self) -> &'static [&'static str] {
        match self {
            FeatureSchema::Sat => {
                &["degree", "pos_deg", "neg_deg", "pos_neg_ratio", "pos_deg_norm", "neg_deg_norm"]
            }
            FeatureSchema::Mip => {
                &["is_binary", "is_integer", "is_continuous", "lb", "ub", "obj", "degree"]
            }
        }
    }
}

impl std::fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureSchema::Sat => "sat",
            FeatureSchema::Mip => "mip",
        })
    }
}

/// Per-node feature rows for one instance, padded to `PADDED_WIDTH`. Row i
/// of `constraints` describes constraint i of the translated instance (kept
/// clauses, in order); row i of `variables` describes variable i.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatures {
    pub schema: FeatureSchema,
    pub constraints: Matrix,
    pub variables: Matrix,
}

fn padded(rows: Vec<Vec<f64>>, native_width: usize) -> Matrix {
    let mut m = Matrix::zeros(rows.len(), PADDED_WIDTH);
    for (i, row) in rows.iter().enumerate() {
        debug_assert_eq!(row.len(), native_width);
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

/// SAT-schema features for a translated formula. Counts come from the
/// coefficient signs of the translation, so they reflect the clause list
/// after duplicate-literal merging and tautology dropping:
///
/// * constraint: width (distinct literals), positive-literal count,
///   negative-literal count, and pos/max(neg, 1);
/// * variable: occurrence degree, positive and negative occurrence degrees,
///   pos/max(neg, 1), and each polarity degree divided by its mean over the
///   instance's variables (zero when that mean is zero).
pub fn sat_features(mip: &MipInstance) -> NodeFeatures {
    let schema = FeatureSchema::Sat;
    let num_vars = mip.variables.len();

    let mut cons_rows = Vec::with_capacity(mip.constraints.len());
    let mut pos_deg = vec![0.0f64; num_vars];
    let mut neg_deg = vec![0.0f64; num_vars];
    for constraint in &mip.constraints {
        let mut pos = 0.0f64;
        let mut neg = 0.0f64;
        for &(v, coeff) in &constraint.coeffs {
            if coeff > 0.0 {
                pos += 1.0;
                pos_deg[v] += 1.0;
            } else if coeff < 0.0 {
                neg += 1.0;
                neg_deg[v] += 1.0;
            }
        }
        cons_rows.push(vec![pos + neg, pos, neg, pos / neg.max(1.0)]);
    }

    let pos_mean = mean(&pos_deg);
    let neg_mean = mean(&neg_deg);
    let mut var_rows = Vec::with_capacity(num_vars);
    for v in 0..num_vars {
        let (p, n) = (pos_deg[v], neg_deg[v]);
        var_rows.push(vec![
            p + n,
            p,
            n,
            p / n.max(1.0),
            if pos_mean > 0.0 { p / pos_mean } else { 0.0 },
            if neg_mean > 0.0 { n / neg_mean } else { 0.0 },
        ]);
    }

    NodeFeatures {
        schema,
        constraints: padded(cons_rows, schema.constraint_width()),
        variables: padded(var_rows, schema.variable_width()),
    }
}

/// MIP-schema features:
///
/// * constraint: sense one-hot (>=, <=, ==), right-hand side, non-zero
///   count, mean |coefficient| (zero for empty rows);
/// * variable: type one-hot (binary, integer, continuous), bounds, objective
///   coefficient, and occurrence degree.
pub fn mip_features(mip: &MipInstance) -> NodeFeatures {
    let schema = FeatureSchema::Mip;
    let num_vars = mip.variables.len();

    let mut degree = vec![0.0f64; num_vars];
    let mut cons_rows = Vec::with_capacity(mip.constraints.len());
    for constraint in &mip.constraints {
        let sense = match constraint.sense {
            Sense::Ge => [1.0, 0.0, 0.0],
            Sense::Le => [0.0, 1.0, 0.0],
            Sense::Eq => [0.0, 0.0, 1.0],
        };
        let mut nnz = 0.0;
        let mut abs_sum = 0.0;
        for &(v, coeff) in &constraint.coeffs {
            if coeff != 0.0 {
                nnz += 1.0;
                abs_sum += coeff.abs();
                degree[v] += 1.0;
            }
        }
        let mean_abs = if nnz > 0.0 { abs_sum / nnz } else { 0.0 };
        cons_rows.push(vec![sense[0], sense[1], sense[2], constraint.rhs, nnz, mean_abs]);
    }

    let mut var_rows = Vec::with_capacity(num_vars);
    for (v, variable) in mip.variables.iter().enumerate() {
        let ty = match variable.var_type {
            VarType::Binary => [1.0, 0.0, 0.0],
            VarType::Integer => [0.0, 1.0, 0.0],
            VarType::Continuous => [0.0, 0.0, 1.0],
        };
        var_rows.push(vec![ty[0], ty[1], ty[2], variable.lb, variable.ub, variable.obj, degree[v]]);
    }

    NodeFeatures {
        schema,
        constraints: padded(cons_rows, schema.constraint_width()),
        variables: padded(var_rows, schema.variable_width()),
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Columns whose standard deviation is at or below this are treated as
/// constant and passed through unstandardized.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-side, per-column z-score statistics fitted on a training corpus and
/// frozen into the checkpoint. Constant columns (population std below
/// `STD_FLOOR`) pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub cons_mean: Vec<f64>,
    pub cons_std: Vec<f64>,
    pub var_mean: Vec<f64>,
    pub var_std: Vec<f64>,
}

fn column_stats(matrices: &[&Matrix]) -> (Vec<f64>, Vec<f64>) {
    let mut mean = vec![0.0; PADDED_WIDTH];
    let mut count = 0usize;
    for m in matrices {
        debug_assert_eq!(m.cols(), PADDED_WIDTH);
        for r in 0..m.rows() {
            for c in 0..PADDED_WIDTH {
                mean[c] += m.get(r, c);
            }
            count += 1;
        }
    }
    if count == 0 {
        return (vec![0.0; PADDED_WIDTH], vec![0.0; PADDED_WIDTH]);
    }
    for v in mean.iter_mut() {
        *v /= count as f64;
    }
    let mut var = vec![0.0; PADDED_WIDTH];
    for m in matrices {
        for r in 0..m.rows() {
            for c in 0..PADDED_WIDTH {
                let d = m.get(r, c) - mean[c];
                var[c] += d * d;
            }
        }
    }
    let std = var.into_iter().map(|v| (v / count as f64).sqrt()).collect();
    (mean, std)
}

impl Standardizer {
    /// Fit pooled statistics over all rows of every instance, separately for
    /// the constraint and variable sides.
    pub fn fit(corpus: &[&NodeFeatures]) -> Standardizer {
        let cons: Vec<&Matrix> = corpus.iter().map(|f| &f.constraints).collect();
        let vars: Vec<&Matrix> = corpus.iter().map(|f| &f.variables).collect();
        let (cons_mean, cons_std) = column_stats(&cons);
        let (var_mean, var_std) = column_stats(&vars);
        Standardizer { cons_mean, cons_std, var_mean, var_std }
    }

    /// Identity transform (all columns pass through).
    pub fn identity() -> Standardizer {
        Standardizer {
            cons_mean: vec![0.0; PADDED_WIDTH],
            cons_std: vec![0.0; PADDED_WIDTH],
            var_mean: vec![0.0; PADDED_WIDTH],
            var_std: vec![0.0; PADDED_WIDTH],
        }
    }

    pub fn apply(&self, features: &NodeFeatures) -> NodeFeatures {
        NodeFeatures {
            schema: features.schema,
            constraints: apply_columns(&features.constraints, &self.cons_mean, &self.cons_std),
            variables: apply_columns(&features.variables, &self.var_mean, &self.var_std),
        }
    }
}

fn apply_columns(m: &Matrix, mean: &[f64], std: &[f64]) -> Matrix {
    let mut out = m.clone();
    for c in 0..m.cols() {
        if std[c] > STD_FLOOR {
            for r in 0..m.rows() {
                out.set(r, c, (m.get(r, c) - mean[c]) / std[c]);
            }
        }
    }
    out
}

/// Prepend the side-indicator column: 1.0 for the constraint side, 0.0 for
/// the variable side. Output is rows x `MODEL_INPUT_WIDTH`.
pub fn with_side_indicator(features: &Matrix, is_constraint_side: bool) -> Matrix {
    let indicator = if is_constraint_side { 1.0 } else { 0.0 };
    let mut out = Matrix::zeros(features.rows(), features.cols() + 1);
    for r in 0..features.rows() {
        out.set(r, 0, indicator);
        for c in 0..features.cols() {
            out.set(r, c + 1, features.get(r, c));
        }
    }
    out
}
