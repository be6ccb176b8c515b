use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wristfuse_core::fusion::{run_detector, union_fuse, CorpusNormalization};
use wristfuse_core::peaks::detect_peaks;
use wristfuse_core::preprocess::{magnitude, moving_average};
use wristfuse_core::simgait::{simulate_corpus, simulate_recording, CorpusSpec, GaitOverrides};
use wristfuse_core::tuning::{CountTable, ParamGrid};
use wristfuse_core::{AlgorithmId, DetectorParams, WalkTask};

fn one_walk() -> wristfuse_core::Recording {
    simulate_recording(WalkTask::ComfortablePace, &GaitOverrides::default(), "bench", "S01", 7).unwrap()
}

fn detectors(c: &mut Criterion) {
    let rec = one_walk();
    let norm = CorpusNormalization::fit(std::slice::from_ref(&rec)).unwrap();
    let mut group = c.benchmark_group("run_detector");
    for alg in AlgorithmId::ALL {
        let params = DetectorParams::reference(alg);
        group.bench_with_input(BenchmarkId::from_parameter(alg), &params, |b, p| {
            b.iter(|| run_detector(alg, black_box(&rec), p, &norm).unwrap())
        });
    }
    group.finish();
}

fn stages(c: &mut Criterion) {
    let rec = one_walk();
    let signal = magnitude(&rec.left);
    c.bench_function("moving_average/0.05s", |b| b.iter(|| moving_average(black_box(&signal), 0.05).unwrap()));
    c.bench_function("detect_peaks", |b| b.iter(|| detect_peaks(black_box(&signal), 1.0, 0.3).unwrap()));

    let left = detect_peaks(&signal, 0.0, 0.0).unwrap();
    let right = detect_peaks(&magnitude(&rec.right), 0.0, 0.0).unwrap();
    c.bench_function("union_fuse/all_candidates", |b| {
        b.iter(|| union_fuse(black_box(&left), black_box(&right), 0.2))
    });
}

fn tuning(c: &mut Criterion) {
    let spec = CorpusSpec {
        counts: WalkTask::ALL.into_iter().map(|t| (t, 2)).collect(),
        ..CorpusSpec::standard(42)
    };
    let corpus = simulate_corpus(&spec).unwrap();
    let norm = CorpusNormalization::fit(&corpus).unwrap();
    let mut group = c.benchmark_group("count_table");
    group.sample_size(10);
    for alg in [AlgorithmId::NoFusionLeft, AlgorithmId::LowLevelSum, AlgorithmId::HighLevelUnion] {
        let grid = ParamGrid::default_for(alg);
        group.bench_function(BenchmarkId::from_parameter(alg), |b| {
            b.iter(|| CountTable::build(black_box(&corpus), alg, &grid, &norm).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, detectors, stages, tuning);
criterion_main!(benches);
