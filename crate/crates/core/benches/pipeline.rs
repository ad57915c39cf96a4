use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use constprobe::activations::{
    feature_matrix, synth_container, FeatureDescriptor, PlantedSignal, SignalTask, SynthMode,
};
use constprobe::exec;
use constprobe::probe::{train_matrix, TrainConfig};
use constprobe::synthetic::toy_corpus;
use constprobe::tasks::{build_chunk_dataset, sample_lca};

const POLICIES: [(&str, bool); 2] = [("sequential", false), ("parallel", true)];

fn pipeline(c: &mut Criterion) {
    let (corpus, _) = toy_corpus(400, 1);
    let signal = PlantedSignal { task: SignalTask::ChunkSimple, strength: 8.0, layer: None };
    let mode = SynthMode::Structured(signal);
    let container = synth_container(&corpus, 64, 13, mode, 0).unwrap();
    let chunks = build_chunk_dataset(&corpus, false, None);
    let lca = sample_lca(&corpus, 4000, 0, true).unwrap().dataset;
    let desc = FeatureDescriptor::default();
    let x = feature_matrix(&container, &desc, &chunks).unwrap();
    let cfg = TrainConfig { epochs: 2, ..Default::default() };

    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for (name, parallel) in POLICIES {
        exec::set_parallel(parallel);
        g.bench_function(BenchmarkId::new("synthesize", name), |b| {
            b.iter(|| synth_container(black_box(&corpus), 64, 13, mode, 0).unwrap())
        });
        g.bench_function(BenchmarkId::new("pair-features", name), |b| {
            b.iter(|| feature_matrix(&container, &desc, black_box(&lca)).unwrap())
        });
        g.bench_function(BenchmarkId::new("train", name), |b| {
            b.iter(|| train_matrix(&chunks, black_box(&x), &cfg).unwrap())
        });
    }
    exec::set_parallel(true);
    g.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
