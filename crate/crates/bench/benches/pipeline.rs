//! End-to-end microbenchmarks: solving, translation/featurization, model
//! forward and backward passes, a full training epoch, and k-means.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::Rng;

use satvq_core::dpll::solve;
use satvq_core::embed::prepare_corpus;
use satvq_core::eval::kmeans;
use satvq_core::generators::{random_ksat, RandomKsatParams};
use satvq_core::mip::sat_to_mip;
use satvq_core::model::{negative_count, sample_negatives, train, VqGae};
use satvq_core::rng::{salted_stream, Purpose};
use satvq_core::{CnfFormula, FeatureSchema, Matrix, TrainConfig};

fn threshold_formula(num_vars: usize, salt: u64) -> CnfFormula {
    let params = RandomKsatParams {
        num_vars,
        num_clauses: (num_vars as f64 * 4.26).round() as usize,
        k: 3,
    };
    random_ksat(&params, 7, salt).expect("generator parameters are valid")
}

fn small_corpus(count: u64) -> Vec<(String, CnfFormula)> {
    (0..count).map(|i| (format!("bench-{i}"), threshold_formula(25, i))).collect()
}

fn bench_solve(c: &mut Criterion) {
    let formula = threshold_formula(30, 0);
    c.bench_function("dpll solve 3-sat n=30 r=4.26", |b| {
        b.iter(|| solve(black_box(&formula), 10_000_000))
    });
}

fn bench_featurize(c: &mut Criterion) {
    let formula = threshold_formula(30, 1);
    c.bench_function("sat_to_mip n=30", |b| b.iter(|| sat_to_mip(black_box(&formula))));

    let corpus = small_corpus(12);
    c.bench_function("prepare_corpus 12 instances", |b| {
        b.iter(|| prepare_corpus(FeatureSchema::Sat, black_box(&corpus)))
    });
}

fn bench_model(c: &mut Criterion) {
    let corpus = small_corpus(12);
    let (_, instances) = prepare_corpus(FeatureSchema::Sat, &corpus);
    let config = TrainConfig::default();
    let mut model = VqGae::init(FeatureSchema::Sat, config).expect("valid config");
    let inst = &instances[0];
    let count = negative_count(config.neg_ratio, inst.graph.edges().len());
    let mut rng = salted_stream(7, Purpose::NegativeSampling, 0);
    let negatives = sample_negatives(&inst.graph, count, &mut rng);

    c.bench_function("encode forward n=25", |b| b.iter(|| model.encode(black_box(inst))));
    c.bench_function("loss_and_grad n=25", |b| {
        b.iter(|| model.loss_and_grad(black_box(inst), black_box(&negatives)))
    });

    let one_epoch = TrainConfig { epochs: 1, ..config };
    c.bench_function("train epoch, 12 instances", |b| {
        b.iter(|| train(FeatureSchema::Sat, one_epoch, black_box(&instances)))
    });
}

fn bench_kmeans(c: &mut Criterion) {
    let mut rng = salted_stream(7, Purpose::KmeansInit, 0);
    let mut x = Matrix::zeros(120, 32);
    for v in x.values_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    c.bench_function("kmeans 120x32 k=6 restarts=10", |b| {
        b.iter(|| kmeans(black_box(&x), 6, 7, 10))
    });
}

criterion_group!(benches, bench_solve, bench_featurize, bench_model, bench_kmeans);
criterion_main!(benches);
