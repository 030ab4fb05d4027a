//! The vector-quantized graph autoencoder: a two-layer GraphSAGE encoder
//! over the bipartite constraint–variable graph, a shared codebook, and a
//! decoder that reconstructs node features and scores edges.
//!
//! Training minimizes
//!
//! ```text
//! L = L_feat + lambda_edge * L_edge + L_code + beta * L_commit
//! ```
//!
//! where `L_code = mean ||sg(Z) - e||^2` trains the codebook toward encoder
//! outputs and `L_commit = mean ||Z - sg(e)||^2` pulls encoder outputs toward
//! their codewords (`sg` = stop-gradient; both means are over node-count x
//! latent-dim elements). Decoder gradients reach the encoder through the
//! straight-through estimator: the quantized latents are treated as
//! `Z + (e - Z)` with the offset held constant.
//!
//! Everything is plain fp64 with handwritten backward passes; the gradient
//! checker below (`check_gradients`) verifies them against central finite
//! differences on the loss with codes, straight-through offsets, and
//! negative samples frozen — a construction under which the analytic
//! straight-through gradient is exactly the gradient of the evaluated
//! function.

use crate::features::{with_side_indicator, FeatureSchema, NodeFeatures, MODEL_INPUT_WIDTH};
use crate::mip::BipartiteGraph;
use crate::numerics::{
    add_row_broadcast, adam_step, bce_logits_loss, grad_rel_err, masked_mse_loss, matmul, relu,
    relu_backward, row_broadcast_backward, AdamConfig, AdamState, Matrix, Parameter,
};
use crate::rng::{epoch_instance_salt, salted_stream, Purpose};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("instance {index} ({tag}) uses schema {got}, expected {expected}")]
    SchemaMismatch { index: usize, tag: String, got: FeatureSchema, expected: FeatureSchema },
    #[error("non-finite loss at epoch {epoch}, instance {index} ({tag})")]
    NonFiniteLoss { epoch: usize, index: usize, tag: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub codebook_size: usize,
    pub lr: f64,
    /// Commitment-loss weight (beta).
    pub beta: f64,
    /// Edge-loss weight (lambda_edge).
    pub lambda_edge: f64,
    /// Negative samples per true edge.
    pub neg_ratio: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Re-seed dead codewords every this many epochs; 0 disables.
    pub reinit_period: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_dim: 64,
            latent_dim: 32,
            codebook_size: 32,
            lr: 1e-3,
            beta: 1.0,
            lambda_edge: 1.0,
            neg_ratio: 1.0,
            epochs: 200,
            seed: 42,
            reinit_period: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::BadConfig(m.to_string()));
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return bad("hidden_dim and latent_dim must be positive");
        }
        if self.codebook_size < 2 {
            return bad("codebook_size must be at least 2");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if self.beta < 0.0 || self.lambda_edge < 0.0 || self.neg_ratio < 0.0 {
            return bad("beta, lambda_edge, and neg_ratio must be nonnegative");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        Ok(())
    }
}

/// One GraphSAGE layer for one node side: h' = act(h W_self + agg W_neigh + b)
/// where agg is the mean of the other side's neighbor states (zero for
/// degree-0 nodes).
#[derive(Debug, Clone)]
pub struct SageLayer {
    pub w_self: Parameter,
    pub w_neigh: Parameter,
    pub bias: Parameter,
}

impl SageLayer {
    fn init(prefix: &str, in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        SageLayer {
            w_self: Parameter::new(format!("{prefix}.w_self"), glorot(in_dim, out_dim, rng)),
            w_neigh: Parameter::new(format!("{prefix}.w_neigh"), glorot(in_dim, out_dim, rng)),
            bias: Parameter::new(format!("{prefix}.bias"), Matrix::zeros(1, out_dim)),
        }
    }

    /// Pre-activation output (the caller applies ReLU where required).
    fn affine(&self, h: &Matrix, agg: &Matrix) -> Matrix {
        let sum = matmul(h, &self.w_self.value);
        let sum = crate::numerics::add(&sum, &matmul(agg, &self.w_neigh.value)).unwrap();
        add_row_broadcast(&sum, &self.bias.value).unwrap()
    }
}

/// Shared codebook: K codewords of dimension d, plus per-codeword assignment
/// counters since the last reset (used for dead-code detection).
#[derive(Debug, Clone)]
pub struct Codebook {
    pub embeddings: Parameter,
    pub usage: Vec<u64>,
}

impl Codebook {
    fn init(k: usize, d: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = 1.0 / k as f64;
        let values = (0..k * d).map(|_| rng.gen_range(-limit..limit)).collect();
        Codebook {
            embeddings: Parameter::new("codebook", Matrix::from_vec(k, d, values)),
            usage: vec![0; k],
        }
    }

    pub fn size(&self) -> usize {
        self.embeddings.value.rows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.value.cols()
    }

    pub fn codeword(&self, k: usize) -> &[f64] {
        self.embeddings.value.row(k)
    }

    pub fn reset_usage(&mut self) {
        self.usage.iter_mut().for_each(|u| *u = 0);
    }

    /// Nearest codeword per row by squared Euclidean distance, ties broken
    /// toward the lowest index. Returns (codes, quantized rows).
    pub fn quantize(&self, z: &Matrix) -> (Vec<usize>, Matrix) {
        let e = &self.embeddings.value;
        let (k, d) = (e.rows(), e.cols());
        assert_eq!(z.cols(), d, "latent dim mismatch");
        let mut codes = Vec::with_capacity(z.rows());
        let mut zq = Matrix::zeros(z.rows(), d);
        for i in 0..z.rows() {
            let row = z.row(i);
            let mut best = 0usize;
            let mut best_dist = f64::INFINITY;
            for c in 0..k {
                let code_row = e.row(c);
                let mut dist = 0.0;
                for j in 0..d {
                    let diff = row[j] - code_row[j];
                    dist += diff * diff;
                }
                if dist < best_dist {
                    best_dist = dist;
                    best = c;
                }
            }
            codes.push(best);
            zq.row_mut(i).copy_from_slice(e.row(best));
        }
        (codes, zq)
    }
}

/// Decoder: a shared ReLU trunk from latent space, per-side linear heads
/// producing padded-width feature reconstructions, and a bilinear edge
/// scorer logit(c, v) = z_c B z_v^T.
#[derive(Debug, Clone)]
pub struct DecoderParams {
    pub trunk_w: Parameter,
    pub trunk_b: Parameter,
    pub head_cons_w: Parameter,
    pub head_cons_b: Parameter,
    pub head_var_w: Parameter,
    pub head_var_b: Parameter,
    pub edge_bilinear: Parameter,
}

impl DecoderParams {
    fn init(d: usize, hidden: usize, out_width: usize, rng: &mut ChaCha8Rng) -> Self {
        DecoderParams {
            trunk_w: Parameter::new("decoder.trunk_w", glorot(d, hidden, rng)),
            trunk_b: Parameter::new("decoder.trunk_b", Matrix::zeros(1, hidden)),
            head_cons_w: Parameter::new("decoder.head_cons_w", glorot(hidden, out_width, rng)),
            head_cons_b: Parameter::new("decoder.head_cons_b", Matrix::zeros(1, out_width)),
            head_var_w: Parameter::new("decoder.head_var_w", glorot(hidden, out_width, rng)),
            head_var_b: Parameter::new("decoder.head_var_b", Matrix::zeros(1, out_width)),
            edge_bilinear: Parameter::new("decoder.edge_bilinear", glorot(d, d, rng)),
        }
    }
}

fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let values = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect();
    Matrix::from_vec(fan_in, fan_out, values)
}

/// The loss terms of one forward pass (or one epoch average). The total is
/// always recomputed from the terms, so the decomposition identity
/// `total = feature + lambda_edge * edge + code + beta * commit` holds
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub feature: f64,
    pub edge: f64,
    pub code: f64,
    pub commit: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn from_terms(
        feature: f64,
        edge: f64,
        code: f64,
        commit: f64,
        lambda_edge: f64,
        beta: f64,
    ) -> Self {
        LossBreakdown {
            feature,
            edge,
            code,
            commit,
            total: feature + lambda_edge * edge + code + beta * commit,
        }
    }
}

/// A model-ready instance: the bipartite graph, standardized inputs with the
/// side-indicator column, reconstruction targets (the standardized features
/// without the indicator), and the native column counts the feature loss is
/// masked to.
#[derive(Debug, Clone)]
pub struct GraphInstance {
    pub tag: String,
    pub schema: FeatureSchema,
    pub graph: BipartiteGraph,
    pub x_cons: Matrix,
    pub x_var: Matrix,
    pub target_cons: Matrix,
    pub target_var: Matrix,
    pub native_cons: usize,
    pub native_var: usize,
}

impl GraphInstance {
    /// Bundle a graph with its (already standardized) features.
    pub fn new(tag: impl Into<String>, graph: BipartiteGraph, features: &NodeFeatures) -> Self {
        assert_eq!(graph.num_constraints(), features.constraints.rows(), "constraint rows");
        assert_eq!(graph.num_variables(), features.variables.rows(), "variable rows");
        GraphInstance {
            tag: tag.into(),
            schema: features.schema,
            x_cons: with_side_indicator(&features.constraints, true),
            x_var: with_side_indicator(&features.variables, false),
            target_cons: features.constraints.clone(),
            target_var: features.variables.clone(),
            native_cons: features.schema.constraint_width(),
            native_var: features.schema.variable_width(),
            graph,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }
}

/// Mean over neighbor rows of `source`; rows with no neighbors are zero.
fn mean_aggregate(adjacency: &[Vec<usize>], source: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(adjacency.len(), source.cols());
    for (i, neighbors) in adjacency.iter().enumerate() {
        if neighbors.is_empty() {
            continue;
        }
        let scale = 1.0 / neighbors.len() as f64;
        let row = out.row_mut(i);
        for &j in neighbors {
            let src = source.row(j);
            for (c, v) in row.iter_mut().zip(src) {
                *c += v * scale;
            }
        }
    }
    out
}

/// Adjoint of `mean_aggregate`: scatter upstream gradients back to source
/// rows.
fn mean_aggregate_backward(
    adjacency: &[Vec<usize>],
    upstream: &Matrix,
    num_source_rows: usize,
) -> Matrix {
    let mut out = Matrix::zeros(num_source_rows, upstream.cols());
    for (i, neighbors) in adjacency.iter().enumerate() {
        if neighbors.is_empty() {
            continue;
        }
        let scale = 1.0 / neighbors.len() as f64;
        let up = upstream.row(i);
        for &j in neighbors {
            let dst = out.row_mut(j);
            for (d, g) in dst.iter_mut().zip(up) {
                *d += g * scale;
            }
        }
    }
    out
}

/// Uniform sample of `count` non-edges (constraint, variable) with
/// replacement; empty when the graph is complete or one side is empty.
pub fn sample_negatives(
    graph: &BipartiteGraph,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let (nc, nv) = (graph.num_constraints(), graph.num_variables());
    if nc == 0 || nv == 0 || nc * nv == graph.edges().len() {
        return Vec::new();
    }
    let mut negatives = Vec::with_capacity(count);
    while negatives.len() < count {
        let c = rng.gen_range(0..nc);
        let v = rng.gen_range(0..nv);
        if !graph.has_edge(c, v) {
            negatives.push((c, v));
        }
    }
    negatives
}

pub fn negative_count(neg_ratio: f64, num_edges: usize) -> usize {
    (neg_ratio * num_edges as f64).round() as usize
}

/// Intermediate states of one encoder pass.
struct EncodeTrace {
    agg1_c: Matrix,
    agg1_v: Matrix,
    p1_c: Matrix,
    p1_v: Matrix,
    h1_c: Matrix,
    h1_v: Matrix,
    agg2_c: Matrix,
    agg2_v: Matrix,
    z_c: Matrix,
    z_v: Matrix,
}

/// Everything captured during one forward pass that the backward pass needs.
struct Tape {
    agg1_c: Matrix,
    agg1_v: Matrix,
    p1_c: Matrix,
    p1_v: Matrix,
    h1_c: Matrix,
    h1_v: Matrix,
    agg2_c: Matrix,
    agg2_v: Matrix,
    z_c: Matrix,
    z_v: Matrix,
    codes_c: Vec<usize>,
    codes_v: Vec<usize>,
    zq_c: Matrix,
    zq_v: Matrix,
    u_c: Matrix,
    u_v: Matrix,
    t_c: Matrix,
    t_v: Matrix,
    dfeat_c: Matrix,
    dfeat_v: Matrix,
    pairs: Vec<(usize, usize)>,
    dlogits: Vec<f64>,
    losses: LossBreakdown,
}

/// Quantization state frozen at a reference parameter point so that the loss
/// becomes a smooth function of the parameters whose gradient equals the
/// straight-through analytic gradient there. Captures the code assignments,
/// the straight-through offsets e - Z, the encoder outputs (codebook-loss
/// targets), the codeword values (commitment targets), and the negative
/// samples.
pub struct FrozenPoint {
    codes_c: Vec<usize>,
    codes_v: Vec<usize>,
    offset_c: Matrix,
    offset_v: Matrix,
    z0_c: Matrix,
    z0_v: Matrix,
    e0_c: Matrix,
    e0_v: Matrix,
    negatives: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct VqGae {
    pub schema: FeatureSchema,
    pub config: TrainConfig,
    pub enc1_cons: SageLayer,
    pub enc1_var: SageLayer,
    pub enc2_cons: SageLayer,
    pub enc2_var: SageLayer,
    pub codebook: Codebook,
    pub decoder: DecoderParams,
}

impl VqGae {
    /// Fresh model with Glorot-uniform weights, zero biases, and a small
    /// uniform codebook, all drawn from the config seed's init stream.
    pub fn init(schema: FeatureSchema, config: TrainConfig) -> Result<Self, TrainError> {
        config.validate()?;
        let mut rng = salted_stream(config.seed, Purpose::ParamInit, 0);
        let (f, h, d) = (MODEL_INPUT_WIDTH, config.hidden_dim, config.latent_dim);
        let out_width = crate::features::PADDED_WIDTH;
        Ok(VqGae {
            schema,
            config,
            enc1_cons: SageLayer::init("enc1.cons", f, h, &mut rng),
            enc1_var: SageLayer::init("enc1.var", f, h, &mut rng),
            enc2_cons: SageLayer::init("enc2.cons", h, d, &mut rng),
            enc2_var: SageLayer::init("enc2.var", h, d, &mut rng),
            codebook: Codebook::init(config.codebook_size, d, &mut rng),
            decoder: DecoderParams::init(d, h, out_width, &mut rng),
        })
    }

    /// All parameters in the declared (checkpoint) order.
    pub fn params(&self) -> Vec<&Parameter> {
        vec![
            &self.enc1_cons.w_self,
            &self.enc1_cons.w_neigh,
            &self.enc1_cons.bias,
            &self.enc1_var.w_self,
            &self.enc1_var.w_neigh,
            &self.enc1_var.bias,
            &self.enc2_cons.w_self,
            &self.enc2_cons.w_neigh,
            &self.enc2_cons.bias,
            &self.enc2_var.w_self,
            &self.enc2_var.w_neigh,
            &self.enc2_var.bias,
            &self.codebook.embeddings,
            &self.decoder.trunk_w,
            &self.decoder.trunk_b,
            &self.decoder.head_cons_w,
            &self.decoder.head_cons_b,
            &self.decoder.head_var_w,
            &self.decoder.head_var_b,
            &self.decoder.edge_bilinear,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        vec![
            &mut self.enc1_cons.w_self,
            &mut self.enc1_cons.w_neigh,
            &mut self.enc1_cons.bias,
            &mut self.enc1_var.w_self,
            &mut self.enc1_var.w_neigh,
            &mut self.enc1_var.bias,
            &mut self.enc2_cons.w_self,
            &mut self.enc2_cons.w_neigh,
            &mut self.enc2_cons.bias,
            &mut self.enc2_var.w_self,
            &mut self.enc2_var.w_neigh,
            &mut self.enc2_var.bias,
            &mut self.codebook.embeddings,
            &mut self.decoder.trunk_w,
            &mut self.decoder.trunk_b,
            &mut self.decoder.head_cons_w,
            &mut self.decoder.head_cons_b,
            &mut self.decoder.head_var_w,
            &mut self.decoder.head_var_b,
            &mut self.decoder.edge_bilinear,
        ]
    }

    /// Two rounds of bipartite message passing; returns (Z_cons, Z_vars).
    /// The first layer applies ReLU; the second is linear.
    pub fn encode(&self, inst: &GraphInstance) -> (Matrix, Matrix) {
        let trace = self.encode_full(inst);
        (trace.z_c, trace.z_v)
    }

    fn encode_full(&self, inst: &GraphInstance) -> EncodeTrace {
        assert_eq!(inst.x_cons.cols(), MODEL_INPUT_WIDTH, "input width");
        let cons_adj = inst.graph.constraint_adjacency();
        let var_adj = inst.graph.variable_adjacency();

        let agg1_c = mean_aggregate(cons_adj, &inst.x_var);
        let agg1_v = mean_aggregate(var_adj, &inst.x_cons);
        let p1_c = self.enc1_cons.affine(&inst.x_cons, &agg1_c);
        let p1_v = self.enc1_var.affine(&inst.x_var, &agg1_v);
        let h1_c = relu(&p1_c);
        let h1_v = relu(&p1_v);

        let agg2_c = mean_aggregate(cons_adj, &h1_v);
        let agg2_v = mean_aggregate(var_adj, &h1_c);
        let z_c = self.enc2_cons.affine(&h1_c, &agg2_c);
        let z_v = self.enc2_var.affine(&h1_v, &agg2_v);
        EncodeTrace { agg1_c, agg1_v, p1_c, p1_v, h1_c, h1_v, agg2_c, agg2_v, z_c, z_v }
    }

    /// Decoder trunk + head for one side: returns (trunk pre-activation,
    /// trunk output, reconstruction).
    fn decode_side(&self, zq: &Matrix, constraint_side: bool) -> (Matrix, Matrix, Matrix) {
        let u = add_row_broadcast(&matmul(zq, &self.decoder.trunk_w.value), &self.decoder.trunk_b.value)
            .unwrap();
        let t = relu(&u);
        let (head_w, head_b) = if constraint_side {
            (&self.decoder.head_cons_w.value, &self.decoder.head_cons_b.value)
        } else {
            (&self.decoder.head_var_w.value, &self.decoder.head_var_b.value)
        };
        let r = add_row_broadcast(&matmul(&t, &head_w), &head_b).unwrap();
        (u, t, r)
    }

    /// Smallest |pre-activation| reaching any ReLU in a forward pass on
    /// `inst`. Finite-difference gradient checks are only trustworthy when
    /// this margin comfortably exceeds the probe step, since a kink inside
    /// the central-difference interval breaks the comparison.
    pub fn relu_margin(&self, inst: &GraphInstance) -> f64 {
        let trace = self.encode_full(inst);
        let (_, zq_c) = self.codebook.quantize(&trace.z_c);
        let (_, zq_v) = self.codebook.quantize(&trace.z_v);
        let (u_c, _, _) = self.decode_side(&zq_c, true);
        let (u_v, _, _) = self.decode_side(&zq_v, false);
        [&trace.p1_c, &trace.p1_v, &u_c, &u_v]
            .iter()
            .flat_map(|m| m.values().iter())
            .fold(f64::INFINITY, |acc, &v| acc.min(v.abs()))
    }

    fn edge_logits(&self, zq_c: &Matrix, zq_v: &Matrix, pairs: &[(usize, usize)]) -> Vec<f64> {
        let b = &self.decoder.edge_bilinear.value;
        let d = b.rows();
        let mut logits = Vec::with_capacity(pairs.len());
        for &(c, v) in pairs {
            let zc = zq_c.row(c);
            let zv = zq_v.row(v);
            let mut logit = 0.0;
            for a in 0..d {
                let mut acc = 0.0;
                let brow = b.row(a);
                for j in 0..d {
                    acc += brow[j] * zv[j];
                }
                logit += zc[a] * acc;
            }
            logits.push(logit);
        }
        logits
    }

    fn feature_mask(rows: usize, native: usize) -> Vec<bool> {
        let mut mask = vec![false; rows * crate::features::PADDED_WIDTH];
        for r in 0..rows {
            for c in 0..native {
                mask[r * crate::features::PADDED_WIDTH + c] = true;
            }
        }
        mask
    }

    /// Full forward pass in training form: quantize by nearest codeword,
    /// decode through the straight-through latents, and score true edges
    /// against the supplied negatives.
    fn forward(&self, inst: &GraphInstance, negatives: &[(usize, usize)]) -> Tape {
        let EncodeTrace { agg1_c, agg1_v, p1_c, p1_v, h1_c, h1_v, agg2_c, agg2_v, z_c, z_v } =
            self.encode_full(inst);
        let (codes_c, zq_c) = self.codebook.quantize(&z_c);
        let (codes_v, zq_v) = self.codebook.quantize(&z_v);

        // Quantization error, averaged over all nodes and latent dims. The
        // codebook and commitment terms are numerically equal here; they
        // differ only in which side the gradient reaches.
        let n_latent = ((z_c.rows() + z_v.rows()) * self.config.latent_dim).max(1);
        let mut quant_err = 0.0;
        for (z, zq) in [(&z_c, &zq_c), (&z_v, &zq_v)] {
            for (a, b) in z.values().iter().zip(zq.values()) {
                let d = a - b;
                quant_err += d * d;
            }
        }
        quant_err /= n_latent as f64;

        let (u_c, t_c, r_c) = self.decode_side(&zq_c, true);
        let (u_v, t_v, r_v) = self.decode_side(&zq_v, false);
        let mask_c = Self::feature_mask(r_c.rows(), inst.native_cons);
        let mask_v = Self::feature_mask(r_v.rows(), inst.native_var);
        let denom = r_c.rows() * inst.native_cons + r_v.rows() * inst.native_var;
        let (feat_c, dfeat_c) = masked_mse_loss(&r_c, &inst.target_cons, &mask_c, denom).unwrap();
        let (feat_v, dfeat_v) = masked_mse_loss(&r_v, &inst.target_var, &mask_v, denom).unwrap();
        let l_feat = feat_c + feat_v;

        let mut pairs: Vec<(usize, usize)> = inst.graph.edges().to_vec();
        let mut labels = vec![1.0; pairs.len()];
        pairs.extend_from_slice(negatives);
        labels.extend(std::iter::repeat(0.0).take(negatives.len()));
        let logits = self.edge_logits(&zq_c, &zq_v, &pairs);
        let (l_edge, dlogits) = bce_logits_loss(&logits, &labels).unwrap();

        let losses = LossBreakdown::from_terms(
            l_feat,
            l_edge,
            quant_err,
            quant_err,
            self.config.lambda_edge,
            self.config.beta,
        );
        Tape {
            agg1_c,
            agg1_v,
            p1_c,
            p1_v,
            h1_c,
            h1_v,
            agg2_c,
            agg2_v,
            z_c,
            z_v,
            codes_c,
            codes_v,
            zq_c,
            zq_v,
            u_c,
            u_v,
            t_c,
            t_v,
            dfeat_c,
            dfeat_v,
            pairs,
            dlogits,
            losses,
        }
    }

    /// Loss terms without gradient bookkeeping (training-form forward).
    pub fn evaluate(&self, inst: &GraphInstance, negatives: &[(usize, usize)]) -> LossBreakdown {
        self.forward(inst, negatives).losses
    }

    /// Codes for each side of an instance (inference path).
    pub fn assign_codes(&self, inst: &GraphInstance) -> (Vec<usize>, Vec<usize>) {
        let (z_c, z_v) = self.encode(inst);
        (self.codebook.quantize(&z_c).0, self.codebook.quantize(&z_v).0)
    }

    /// Forward + backward: accumulates parameter gradients and returns the
    /// loss terms along with the code assignments (for usage tracking) and
    /// the encoder outputs (for dead-code reseeding).
    pub fn loss_and_grad(
        &mut self,
        inst: &GraphInstance,
        negatives: &[(usize, usize)],
    ) -> (LossBreakdown, Vec<usize>, Matrix) {
        let tape = self.forward(inst, negatives);
        self.backward(inst, &tape);
        let mut codes = tape.codes_c.clone();
        codes.extend_from_slice(&tape.codes_v);
        let z_all = tape.z_c.vstack(&tape.z_v);
        (tape.losses, codes, z_all)
    }

    fn backward(&mut self, inst: &GraphInstance, tape: &Tape) {
        let lambda = self.config.lambda_edge;
        let beta = self.config.beta;
        let d = self.config.latent_dim;
        let n_latent = ((tape.z_c.rows() + tape.z_v.rows()) * d).max(1) as f64;

        let mut dzq_c = Matrix::zeros(tape.zq_c.rows(), d);
        let mut dzq_v = Matrix::zeros(tape.zq_v.rows(), d);

        // Feature-reconstruction path, per side, through the shared trunk.
        for (dfeat, u, t, zq, dzq, cons_side) in [
            (&tape.dfeat_c, &tape.u_c, &tape.t_c, &tape.zq_c, &mut dzq_c, true),
            (&tape.dfeat_v, &tape.u_v, &tape.t_v, &tape.zq_v, &mut dzq_v, false),
        ] {
            let head_w = if cons_side {
                &self.decoder.head_cons_w.value
            } else {
                &self.decoder.head_var_w.value
            };
            let dt = matmul(dfeat, &head_w.transpose());
            let dhead_w = matmul(&t.transpose(), dfeat);
            let dhead_b = row_broadcast_backward(dfeat);
            let du = relu_backward(u, &dt);
            accumulate(&mut self.decoder.trunk_w.grad, &matmul(&zq.transpose(), &du));
            accumulate(&mut self.decoder.trunk_b.grad, &row_broadcast_backward(&du));
            accumulate_into(dzq, &matmul(&du, &self.decoder.trunk_w.value.transpose()));
            if cons_side {
                accumulate(&mut self.decoder.head_cons_w.grad, &dhead_w);
                accumulate(&mut self.decoder.head_cons_b.grad, &dhead_b);
            } else {
                accumulate(&mut self.decoder.head_var_w.grad, &dhead_w);
                accumulate(&mut self.decoder.head_var_b.grad, &dhead_b);
            }
        }

        // Edge path: logit = zc B zv^T.
        {
            let b = &self.decoder.edge_bilinear.value;
            let mut db = Matrix::zeros(d, d);
            for (idx, &(c, v)) in tape.pairs.iter().enumerate() {
                let g = lambda * tape.dlogits[idx];
                if g == 0.0 {
                    continue;
                }
                let zc: Vec<f64> = tape.zq_c.row(c).to_vec();
                let zv: Vec<f64> = tape.zq_v.row(v).to_vec();
                {
                    let dzc = dzq_c.row_mut(c);
                    for a in 0..d {
                        let brow = b.row(a);
                        let mut acc = 0.0;
                        for j in 0..d {
                            acc += brow[j] * zv[j];
                        }
                        dzc[a] += g * acc;
                    }
                }
                {
                    let dzv = dzq_v.row_mut(v);
                    for j in 0..d {
                        let mut acc = 0.0;
                        for a in 0..d {
                            acc += zc[a] * b.get(a, j);
                        }
                        dzv[j] += g * acc;
                    }
                }
                for a in 0..d {
                    let row = db.row_mut(a);
                    let za = g * zc[a];
                    for j in 0..d {
                        row[j] += za * zv[j];
                    }
                }
            }
            accumulate(&mut self.decoder.edge_bilinear.grad, &db);
        }

        // Straight-through into Z, plus the commitment pull, plus the
        // codebook term into the codeword rows.
        let mut dz_c = dzq_c;
        let mut dz_v = dzq_v;
        let coef = 2.0 / n_latent;
        for (z, zq, codes, dz) in [
            (&tape.z_c, &tape.zq_c, &tape.codes_c, &mut dz_c),
            (&tape.z_v, &tape.zq_v, &tape.codes_v, &mut dz_v),
        ] {
            for i in 0..z.rows() {
                let zrow = z.row(i);
                let qrow = zq.row(i);
                let k = codes[i];
                {
                    let drow = dz.row_mut(i);
                    for j in 0..z.cols() {
                        drow[j] += beta * coef * (zrow[j] - qrow[j]);
                    }
                }
                let erow = self.codebook.embeddings.grad.row_mut(k);
                for j in 0..z.cols() {
                    erow[j] += coef * (qrow[j] - zrow[j]);
                }
            }
        }

        // Second encoder layer (linear) on both sides, converging on dH1.
        let cons_adj = inst.graph.constraint_adjacency();
        let var_adj = inst.graph.variable_adjacency();
        let mut dh1_c = matmul(&dz_c, &self.enc2_cons.w_self.value.transpose());
        let mut dh1_v = matmul(&dz_v, &self.enc2_var.w_self.value.transpose());
        accumulate(&mut self.enc2_cons.w_self.grad, &matmul(&tape.h1_c.transpose(), &dz_c));
        accumulate(&mut self.enc2_var.w_self.grad, &matmul(&tape.h1_v.transpose(), &dz_v));
        accumulate(&mut self.enc2_cons.bias.grad, &row_broadcast_backward(&dz_c));
        accumulate(&mut self.enc2_var.bias.grad, &row_broadcast_backward(&dz_v));
        let dagg2_c = matmul(&dz_c, &self.enc2_cons.w_neigh.value.transpose());
        let dagg2_v = matmul(&dz_v, &self.enc2_var.w_neigh.value.transpose());
        accumulate(&mut self.enc2_cons.w_neigh.grad, &matmul(&tape.agg2_c.transpose(), &dz_c));
        accumulate(&mut self.enc2_var.w_neigh.grad, &matmul(&tape.agg2_v.transpose(), &dz_v));
        let (rows_c, rows_v) = (dh1_c.rows(), dh1_v.rows());
        accumulate_into(&mut dh1_v, &mean_aggregate_backward(cons_adj, &dagg2_c, rows_v));
        accumulate_into(&mut dh1_c, &mean_aggregate_backward(var_adj, &dagg2_v, rows_c));

        // First encoder layer (ReLU) on both sides.
        let dp1_c = relu_backward(&tape.p1_c, &dh1_c);
        let dp1_v = relu_backward(&tape.p1_v, &dh1_v);
        accumulate(&mut self.enc1_cons.w_self.grad, &matmul(&inst.x_cons.transpose(), &dp1_c));
        accumulate(&mut self.enc1_var.w_self.grad, &matmul(&inst.x_var.transpose(), &dp1_v));
        accumulate(&mut self.enc1_cons.w_neigh.grad, &matmul(&tape.agg1_c.transpose(), &dp1_c));
        accumulate(&mut self.enc1_var.w_neigh.grad, &matmul(&tape.agg1_v.transpose(), &dp1_v));
        accumulate(&mut self.enc1_cons.bias.grad, &row_broadcast_backward(&dp1_c));
        accumulate(&mut self.enc1_var.bias.grad, &row_broadcast_backward(&dp1_v));
    }

    /// Freeze the quantization state at the current parameters.
    pub fn capture_frozen_point(
        &self,
        inst: &GraphInstance,
        negatives: Vec<(usize, usize)>,
    ) -> FrozenPoint {
        let (z_c, z_v) = self.encode(inst);
        let (codes_c, zq_c) = self.codebook.quantize(&z_c);
        let (codes_v, zq_v) = self.codebook.quantize(&z_v);
        let mut offset_c = zq_c.clone();
        for (o, z) in offset_c.values_mut().iter_mut().zip(z_c.values()) {
            *o -= z;
        }
        let mut offset_v = zq_v.clone();
        for (o, z) in offset_v.values_mut().iter_mut().zip(z_v.values()) {
            *o -= z;
        }
        FrozenPoint {
            codes_c,
            codes_v,
            offset_c,
            offset_v,
            z0_c: z_c,
            z0_v: z_v,
            e0_c: zq_c,
            e0_v: zq_v,
            negatives,
        }
    }

    /// The training loss as a smooth function of the parameters, with codes,
    /// straight-through offsets, loss targets, and negatives all frozen at
    /// the capture point. At the capture parameters this equals the ordinary
    /// forward loss, and its exact gradient is the straight-through analytic
    /// gradient `backward` computes — which is what makes it the right
    /// function to finite-difference.
    pub fn frozen_loss(&self, inst: &GraphInstance, frozen: &FrozenPoint) -> LossBreakdown {
        let (z_c, z_v) = self.encode(inst);
        let mut zq_c = z_c.clone();
        accumulate_into(&mut zq_c, &frozen.offset_c);
        let mut zq_v = z_v.clone();
        accumulate_into(&mut zq_v, &frozen.offset_v);

        let n_latent = ((z_c.rows() + z_v.rows()) * self.config.latent_dim).max(1) as f64;
        let e = &self.codebook.embeddings.value;
        let mut l_code = 0.0;
        for (z0, codes) in [(&frozen.z0_c, &frozen.codes_c), (&frozen.z0_v, &frozen.codes_v)] {
            for i in 0..z0.rows() {
                let zrow = z0.row(i);
                let erow = e.row(codes[i]);
                for j in 0..z0.cols() {
                    let diff = zrow[j] - erow[j];
                    l_code += diff * diff;
                }
            }
        }
        l_code /= n_latent;
        let mut l_commit = 0.0;
        for (z, e0) in [(&z_c, &frozen.e0_c), (&z_v, &frozen.e0_v)] {
            for (a, b) in z.values().iter().zip(e0.values()) {
                let diff = a - b;
                l_commit += diff * diff;
            }
        }
        l_commit /= n_latent;

        let (_, _, r_c) = self.decode_side(&zq_c, true);
        let (_, _, r_v) = self.decode_side(&zq_v, false);
        let mask_c = Self::feature_mask(r_c.rows(), inst.native_cons);
        let mask_v = Self::feature_mask(r_v.rows(), inst.native_var);
        let denom = r_c.rows() * inst.native_cons + r_v.rows() * inst.native_var;
        let (feat_c, _) = masked_mse_loss(&r_c, &inst.target_cons, &mask_c, denom).unwrap();
        let (feat_v, _) = masked_mse_loss(&r_v, &inst.target_var, &mask_v, denom).unwrap();

        let mut pairs: Vec<(usize, usize)> = inst.graph.edges().to_vec();
        let mut labels = vec![1.0; pairs.len()];
        pairs.extend_from_slice(&frozen.negatives);
        labels.extend(std::iter::repeat(0.0).take(frozen.negatives.len()));
        let logits = self.edge_logits(&zq_c, &zq_v, &pairs);
        let (l_edge, _) = bce_logits_loss(&logits, &labels).unwrap();

        LossBreakdown::from_terms(
            feat_c + feat_v,
            l_edge,
            l_code,
            l_commit,
            self.config.lambda_edge,
            self.config.beta,
        )
    }
}

fn accumulate(grad: &mut Matrix, delta: &Matrix) {
    accumulate_into(grad, delta);
}

fn accumulate_into(dst: &mut Matrix, src: &Matrix) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (d, s) in dst.values_mut().iter_mut().zip(src.values()) {
        *d += s;
    }
}

/// Train a fresh model on the corpus. Per epoch: seeded instance shuffle,
/// then per instance a full-graph forward/backward and one Adam step with
/// per-(epoch, instance) negative samples; codewords unused over a whole
/// epoch are re-seeded from an encoder output of that epoch. Returns the
/// model and the per-epoch loss log (epoch averages).
pub fn train(
    schema: FeatureSchema,
    config: TrainConfig,
    corpus: &[GraphInstance],
) -> Result<(VqGae, Vec<LossBreakdown>), TrainError> {
    if corpus.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    for (index, inst) in corpus.iter().enumerate() {
        if inst.schema != schema {
            return Err(TrainError::SchemaMismatch {
                index,
                tag: inst.tag.clone(),
                got: inst.schema,
                expected: schema,
            });
        }
    }
    let mut model = VqGae::init(schema, config)?;
    let seed = config.seed;
    let mut adam = AdamState::new(&model.params());
    let adam_cfg = AdamConfig { lr: config.lr, ..AdamConfig::default() };
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        model.codebook.reset_usage();
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        order.shuffle(&mut salted_stream(seed, Purpose::Shuffle, epoch as u64));

        let mut sums = (0.0, 0.0, 0.0, 0.0);
        let mut epoch_z: Option<Matrix> = None;
        for &index in &order {
            let inst = &corpus[index];
            let mut neg_rng = salted_stream(
                seed,
                Purpose::NegativeSampling,
                epoch_instance_salt(epoch, index),
            );
            let count = negative_count(config.neg_ratio, inst.graph.edges().len());
            let negatives = sample_negatives(&inst.graph, count, &mut neg_rng);

            let (losses, codes, z_all) = model.loss_and_grad(inst, &negatives);
            if !losses.total.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, index, tag: inst.tag.clone() });
            }
            for &code in &codes {
                model.codebook.usage[code] += 1;
            }
            epoch_z = Some(z_all);
            sums.0 += losses.feature;
            sums.1 += losses.edge;
            sums.2 += losses.code;
            sums.3 += losses.commit;

            let mut params = model.params_mut();
            adam_step(&mut params, &mut adam, &adam_cfg).expect("parameter list is stable");
        }

        let n = corpus.len() as f64;
        log.push(LossBreakdown::from_terms(
            sums.0 / n,
            sums.1 / n,
            sums.2 / n,
            sums.3 / n,
            config.lambda_edge,
            config.beta,
        ));

        if config.reinit_period > 0 && epoch % config.reinit_period == 0 {
            if let Some(z) = &epoch_z {
                if z.rows() > 0 {
                    let mut rng = salted_stream(seed, Purpose::DeadCodeReinit, epoch as u64);
                    for k in 0..model.codebook.size() {
                        if model.codebook.usage[k] == 0 {
                            let row = rng.gen_range(0..z.rows());
                            model
                                .codebook
                                .embeddings
                                .value
                                .row_mut(k)
                                .copy_from_slice(z.row(row));
                        }
                    }
                }
            }
        }
    }
    Ok((model, log))
}

/// Central-difference check of the full training gradient at the model's
/// current parameters. Captures a frozen point, runs the analytic backward,
/// then compares every sampled coordinate against finite differences of the
/// frozen loss. Returns the maximum relative error.
pub fn check_gradients(
    model: &mut VqGae,
    inst: &GraphInstance,
    negatives: Vec<(usize, usize)>,
    eps: f64,
    max_coords_per_param: Option<usize>,
    sample_seed: u64,
) -> f64 {
    let frozen = model.capture_frozen_point(inst, negatives);
    for p in model.params_mut() {
        p.zero_grad();
    }
    let tape = model.forward(inst, &frozen.negatives.clone());
    model.backward(inst, &tape);
    let grads: Vec<Matrix> = model.params().iter().map(|p| p.grad.clone()).collect();

    let mut worst = 0.0f64;
    let n_params = grads.len();
    for pi in 0..n_params {
        let n = grads[pi].values().len();
        let coords: Vec<usize> = match max_coords_per_param {
            Some(cap) if cap < n => {
                let mut rng = salted_stream(sample_seed, Purpose::FdSampling, pi as u64);
                let mut all: Vec<usize> = (0..n).collect();
                all.shuffle(&mut rng);
                all.truncate(cap);
                all
            }
            _ => (0..n).collect(),
        };
        for ci in coords {
            let orig = model.params()[pi].value.values()[ci];
            model.params_mut()[pi].value.values_mut()[ci] = orig + eps;
            let f_plus = model.frozen_loss(inst, &frozen).total;
            model.params_mut()[pi].value.values_mut()[ci] = orig - eps;
            let f_minus = model.frozen_loss(inst, &frozen).total;
            model.params_mut()[pi].value.values_mut()[ci] = orig;
            let numeric = (f_plus - f_minus) / (2.0 * eps);
            worst = worst.max(grad_rel_err(grads[pi].values()[ci], numeric));
        }
    }
    for p in model.params_mut() {
        p.zero_grad();
    }
    worst
}
