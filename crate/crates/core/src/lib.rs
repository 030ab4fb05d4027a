//! satvq-core: unsupervised SAT instance representations.
//!
//! The pipeline: CNF formulas are translated to binary integer programs
//! ([`mip::sat_to_mip`]), viewed as bipartite constraint–variable graphs
//! ([`mip::mip_to_graph`]), featurized per node ([`features`]), and encoded
//! by a vector-quantized graph autoencoder ([`model`]). Codeword histograms
//! over an instance's nodes become instance embeddings ([`embed`]), which
//! are evaluated by clustering against ground-truth (family, feasibility)
//! groups ([`eval`]).

pub mod checkpoint;
pub mod cnf;
pub mod dpll;
pub mod embed;
pub mod eval;
pub mod features;
pub mod generators;
pub mod manifest;
pub mod mip;
pub mod model;
pub mod numerics;
pub mod plot;
pub mod rng;

pub use cnf::{Assignment, Clause, CnfFormula, Literal};
pub use embed::{EmbeddingTable, Variant};
pub use features::{FeatureSchema, Standardizer};
pub use manifest::ManifestEntry;
pub use mip::{BipartiteGraph, MipInstance};
pub use model::{GraphInstance, LossBreakdown, TrainConfig, VqGae};
pub use numerics::Matrix;
