//! Clustering-based evaluation: k-means, NMI, purity (macro and weighted),
//! a permutation-null significance guard, and a 2D PCA projection for
//! plotting.

use crate::embed::EmbeddingTable;
use crate::numerics::Matrix;
use crate::rng::{salted_stream, Purpose};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("k = {k} exceeds the number of points ({n})")]
    BadK { k: usize, n: usize },
    #[error("invalid argument: {0}")]
    BadArgs(String),
    #[error("variant tables disagree: {0}")]
    VariantMismatch(String),
}

/// Map arbitrary labels to dense indices in first-occurrence order.
pub fn index_labels<T: Eq + std::hash::Hash>(labels: &[T]) -> Vec<usize> {
    let mut seen: HashMap<&T, usize> = HashMap::new();
    let mut out = Vec::with_capacity(labels.len());
    for label in labels {
        let next = seen.len();
        out.push(*seen.entry(label).or_insert(next));
    }
    out
}

#[derive(Debug, Clone)]
pub struct ClusterAssignment {
    pub assignments: Vec<usize>,
    pub centroids: Matrix,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// k-means++ seeding: first centroid uniform, then squared-distance-weighted
/// draws; falls back to uniform when every candidate distance is zero.
fn kmeanspp_init(x: &Matrix, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Matrix {
    let n = x.rows();
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in dist.iter().enumerate() {
                acc += d;
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for i in 0..n {
            let d = sq_dist(x.row(i), centroids.row(c));
            if d < dist[i] {
                dist[i] = d;
            }
        }
    }
    centroids
}

/// Move each empty cluster's centroid to the point farthest from its current
/// centroid (among clusters that can spare a point), reassigning that point.
fn fix_empty_clusters(x: &Matrix, centroids: &mut Matrix, assignments: &mut [usize]) {
    let k = centroids.rows();
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far_idx = None;
        let mut far_d = -1.0;
        for i in 0..x.rows() {
            if counts[assignments[i]] < 2 {
                continue;
            }
            let d = sq_dist(x.row(i), centroids.row(assignments[i]));
            if d > far_d {
                far_d = d;
                far_idx = Some(i);
            }
        }
        if let Some(i) = far_idx {
            counts[assignments[i]] -= 1;
            assignments[i] = empty;
            counts[empty] = 1;
            let point = x.row(i).to_vec();
            centroids.row_mut(empty).copy_from_slice(&point);
        }
    }
}

const KMEANS_TOL: f64 = 1e-8;
const KMEANS_MAX_ITERS: usize = 300;

fn lloyd(x: &Matrix, mut centroids: Matrix) -> ClusterAssignment {
    let n = x.rows();
    let k = centroids.rows();
    let mut assignments = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITERS {
        for i in 0..n {
            assignments[i] = nearest_centroid(x.row(i), &centroids).0;
        }
        fix_empty_clusters(x, &mut centroids, &mut assignments);

        let mut sums = Matrix::zeros(k, x.cols());
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assignments[i]] += 1;
            let row = sums.row_mut(assignments[i]);
            for (s, v) in row.iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let mut shift = 0.0;
            let row = centroids.row_mut(c);
            for (j, cur) in row.iter_mut().enumerate() {
                let new = sums.get(c, j) * inv;
                let d = new - *cur;
                shift += d * d;
                *cur = new;
            }
            movement = movement.max(shift.sqrt());
        }
        if movement <= KMEANS_TOL {
            break;
        }
    }
    let mut inertia = 0.0;
    for i in 0..n {
        let (a, d) = nearest_centroid(x.row(i), &centroids);
        assignments[i] = a;
        inertia += d;
    }
    ClusterAssignment { assignments, centroids, inertia }
}

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// inertia. Deterministic for a fixed seed.
pub fn kmeans(
    x: &Matrix,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterAssignment, EvalError> {
    let n = x.rows();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    if k == 0 || restarts == 0 {
        return Err(EvalError::BadArgs("k and restarts must be positive".to_string()));
    }
    if k > n {
        return Err(EvalError::BadK { k, n });
    }
    let mut best: Option<ClusterAssignment> = None;
    for r in 0..restarts {
        let mut rng = salted_stream(seed, Purpose::KmeansInit, r as u64);
        let init = kmeanspp_init(x, k, &mut rng);
        let run = lloyd(x, init);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization
/// (natural logs). Both partitions trivial → 1.0; exactly one trivial → 0.0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = a.len() as f64;
    let ka = a.iter().max().unwrap() + 1;
    let kb = b.iter().max().unwrap() + 1;
    let mut joint = vec![0usize; ka * kb];
    let mut ca = vec![0usize; ka];
    let mut cb = vec![0usize; kb];
    for (&i, &j) in a.iter().zip(b) {
        joint[i * kb + j] += 1;
        ca[i] += 1;
        cb[j] += 1;
    }
    let ha = entropy(&ca, n);
    let hb = entropy(&cb, n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let nij = joint[i * kb + j];
            if nij == 0 {
                continue;
            }
            let pij = nij as f64 / n;
            mi += pij * (pij * n * n / (ca[i] as f64 * cb[j] as f64)).ln();
        }
    }
    Ok((mi / ((ha + hb) / 2.0)).clamp(0.0, 1.0))
}

/// (macro, weighted) purity. Macro averages each nonempty cluster's
/// dominant-class fraction; weighted divides the summed dominant counts by N.
pub fn purity(true_labels: &[usize], clusters: &[usize]) -> Result<(f64, f64), EvalError> {
    if true_labels.len() != clusters.len() {
        return Err(EvalError::LengthMismatch(true_labels.len(), clusters.len()));
    }
    if true_labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = true_labels.len();
    let kc = clusters.iter().max().unwrap() + 1;
    let kl = true_labels.iter().max().unwrap() + 1;
    let mut table = vec![0usize; kc * kl];
    let mut sizes = vec![0usize; kc];
    for (&l, &c) in true_labels.iter().zip(clusters) {
        table[c * kl + l] += 1;
        sizes[c] += 1;
    }
    let mut macro_sum = 0.0;
    let mut nonempty = 0usize;
    let mut dominant_total = 0usize;
    for c in 0..kc {
        if sizes[c] == 0 {
            continue;
        }
        let dominant = (0..kl).map(|l| table[c * kl + l]).max().unwrap();
        macro_sum += dominant as f64 / sizes[c] as f64;
        dominant_total += dominant;
        nonempty += 1;
    }
    Ok((macro_sum / nonempty as f64, dominant_total as f64 / n as f64))
}

/// Observed NMI against a null of seeded random permutations of the cluster
/// vector.
#[derive(Debug, Clone)]
pub struct PermutationNull {
    pub observed: f64,
    /// Percentile rank of the observed NMI within the null (0–100).
    pub percentile: f64,
    /// 99th percentile of the null distribution (nearest-rank).
    pub null_p99: f64,
    pub samples: Vec<f64>,
}

pub fn permutation_null(
    true_labels: &[usize],
    clusters: &[usize],
    trials: usize,
    seed: u64,
) -> Result<PermutationNull, EvalError> {
    if trials < 100 {
        return Err(EvalError::BadArgs(format!(
            "permutation null needs at least 100 trials, got {trials}"
        )));
    }
    let observed = nmi(true_labels, clusters)?;
    let mut samples = Vec::with_capacity(trials);
    let mut shuffled = clusters.to_vec();
    for trial in 0..trials {
        let mut rng = salted_stream(seed, Purpose::Permutation, trial as u64);
        shuffled.copy_from_slice(clusters);
        shuffled.shuffle(&mut rng);
        samples.push(nmi(true_labels, &shuffled)?);
    }
    let at_or_below = samples.iter().filter(|&&s| s <= observed).count();
    let percentile = 100.0 * at_or_below as f64 / trials as f64;
    let mut sorted = samples.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let rank = ((0.99 * trials as f64).ceil() as usize).clamp(1, trials);
    let null_p99 = sorted[rank - 1];
    Ok(PermutationNull { observed, percentile, null_p99, samples })
}

/// Jacobi eigendecomposition of a symmetric matrix: eigenvalues descending
/// with matching eigenvector columns.
fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let d = a.rows();
    debug_assert_eq!(d, a.cols());
    let mut m = a.clone();
    let mut v = Matrix::zeros(d, d);
    for i in 0..d {
        v.set(i, i, 1.0);
    }
    let frob: f64 = a.values().iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-14 * frob.max(1.0);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..d {
            for q in (p + 1)..d {
                off = off.max(m.get(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m.get(p, q);
                if apq.abs() <= tol {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..d {
                    let mip = m.get(i, p);
                    let miq = m.get(i, q);
                    m.set(i, p, c * mip - s * miq);
                    m.set(i, q, s * mip + c * miq);
                }
                for j in 0..d {
                    let mpj = m.get(p, j);
                    let mqj = m.get(q, j);
                    m.set(p, j, c * mpj - s * mqj);
                    m.set(q, j, s * mpj + c * mqj);
                }
                for i in 0..d {
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - s * viq);
                    v.set(i, q, s * vip + c * viq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m.get(j, j).partial_cmp(&m.get(i, i)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(d, d);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..d {
            vectors.set(row, col, v.get(row, src));
        }
    }
    (eigenvalues, vectors)
}

/// Mean-centered projection onto the top two principal directions plus the
/// explained-variance fractions. Sign convention: each component's
/// largest-magnitude loading is positive.
pub fn pca_2d(x: &Matrix) -> Result<(Matrix, [f64; 2]), EvalError> {
    let (n, d) = x.shape();
    if d < 1 {
        return Err(EvalError::BadArgs("pca needs at least one column".to_string()));
    }
    if n < 2 {
        return Err(EvalError::BadArgs("pca needs at least two rows".to_string()));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    for i in 0..n {
        let row = centered.row(i);
        for a in 0..d {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            let cov_row = cov.row_mut(a);
            for b in 0..d {
                cov_row[b] += ra * row[b];
            }
        }
    }
    for value in cov.values_mut() {
        *value /= n as f64;
    }
    let (eigenvalues, vectors) = jacobi_eigen(&cov);
    let total: f64 = eigenvalues.iter().map(|&l| l.max(0.0)).sum();
    let mut coords = Matrix::zeros(n, 2);
    let mut fractions = [0.0; 2];
    for comp in 0..2.min(d) {
        let mut direction: Vec<f64> = (0..d).map(|r| vectors.get(r, comp)).collect();
        let max_idx = direction
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if direction[max_idx] < 0.0 {
            direction.iter_mut().for_each(|v| *v = -*v);
        }
        for i in 0..n {
            let proj: f64 = centered.row(i).iter().zip(&direction).map(|(a, b)| a * b).sum();
            coords.set(i, comp, proj);
        }
        if total > 0.0 {
            fractions[comp] = eigenvalues[comp].max(0.0) / total;
        }
    }
    Ok((coords, fractions))
}

/// Metrics of one clustering run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub nmi: f64,
    pub purity_macro: f64,
    pub purity_weighted: f64,
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub null_percentile: Option<f64>,
}

/// Mean ± sample std over clustering seeds for one variant.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub variant: String,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    pub purity_macro_mean: f64,
    pub purity_macro_std: f64,
    pub purity_weighted_mean: f64,
    pub purity_weighted_std: f64,
    pub k: usize,
    pub seeds: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn aggregate(variant: &str, reports: &[MetricsReport]) -> MetricsRow {
    let nmis: Vec<f64> = reports.iter().map(|r| r.nmi).collect();
    let macros: Vec<f64> = reports.iter().map(|r| r.purity_macro).collect();
    let weighteds: Vec<f64> = reports.iter().map(|r| r.purity_weighted).collect();
    let (nmi_mean, nmi_std) = mean_std(&nmis);
    let (purity_macro_mean, purity_macro_std) = mean_std(&macros);
    let (purity_weighted_mean, purity_weighted_std) = mean_std(&weighteds);
    MetricsRow {
        variant: variant.to_string(),
        nmi_mean,
        nmi_std,
        purity_macro_mean,
        purity_macro_std,
        purity_weighted_mean,
        purity_weighted_std,
        k: reports.first().map_or(0, |r| r.k),
        seeds: reports.len(),
    }
}

pub fn write_metrics_tsv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(
        "variant\tnmi_mean\tnmi_std\tpurity_macro_mean\tpurity_macro_std\tpurity_weighted_mean\tpurity_weighted_std\tk\tseeds\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.variant,
            r.nmi_mean,
            r.nmi_std,
            r.purity_macro_mean,
            r.purity_macro_std,
            r.purity_weighted_mean,
            r.purity_weighted_std,
            r.k,
            r.seeds
        );
    }
    out
}

/// Everything the evaluation of one variant produces.
#[derive(Debug, Clone)]
pub struct VariantEvaluation {
    pub row: MetricsRow,
    pub per_seed: Vec<MetricsReport>,
    pub null: Option<PermutationNull>,
    /// Cluster assignment from the first seed (drives the null and plots).
    pub first_assignment: Vec<usize>,
}

/// Cluster one variant's embeddings across several seeds and aggregate.
pub fn evaluate_variant(
    table: &EmbeddingTable,
    k: usize,
    restarts: usize,
    seeds: &[u64],
    null_trials: Option<usize>,
    null_seed: u64,
) -> Result<VariantEvaluation, EvalError> {
    if seeds.is_empty() {
        return Err(EvalError::BadArgs("at least one clustering seed required".to_string()));
    }
    let x = table.matrix();
    let labels = index_labels(&table.groups());
    let mut per_seed = Vec::with_capacity(seeds.len());
    let mut first_assignment = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let clustering = kmeans(&x, k, seed, restarts)?;
        let nmi_score = nmi(&labels, &clustering.assignments)?;
        let (purity_macro, purity_weighted) = purity(&labels, &clustering.assignments)?;
        per_seed.push(MetricsReport {
            nmi: nmi_score,
            purity_macro,
            purity_weighted,
            k,
            seed,
            restarts,
            null_percentile: None,
        });
        if i == 0 {
            first_assignment = clustering.assignments;
        }
    }
    let null = match null_trials {
        Some(trials) => {
            let null = permutation_null(&labels, &first_assignment, trials, null_seed)?;
            per_seed[0].null_percentile = Some(null.percentile);
            Some(null)
        }
        None => None,
    };
    Ok(VariantEvaluation {
        row: aggregate(table.variant.tag(), &per_seed),
        per_seed,
        null,
        first_assignment,
    })
}

/// Evaluate several variants on the same instance set. Errors if the tables
/// cover different instances or disagree on ground-truth groups.
pub fn report(
    tables: &[&EmbeddingTable],
    k: usize,
    restarts: usize,
    seeds: &[u64],
    null_trials: Option<usize>,
    null_seed: u64,
) -> Result<Vec<VariantEvaluation>, EvalError> {
    if tables.is_empty() {
        return Err(EvalError::Empty);
    }
    let reference: Vec<(String, String)> = tables[0]
        .rows
        .iter()
        .map(|r| (r.id.clone(), r.group()))
        .collect();
    for t in &tables[1..] {
        let this: Vec<(String, String)> =
            t.rows.iter().map(|r| (r.id.clone(), r.group())).collect();
        if this != reference {
            return Err(EvalError::VariantMismatch(format!(
                "{} and {} list different instances or labels",
                tables[0].variant, t.variant
            )));
        }
    }
    tables
        .iter()
        .map(|t| evaluate_variant(t, k, restarts, seeds, null_trials, null_seed))
        .collect()
}
