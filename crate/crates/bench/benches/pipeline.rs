use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use textmut::augment::RrConfig;
use textmut::mutation::{mutate_dataset, OperatorSet, PresetId};
use textmut::{auc, augment_dataset, detokenize, tokenize, LabelFilter};
use textmut_bench::{captions, scores};

fn corpus(c: &mut Criterion) {
    let ds = captions(1_000, 1);
    let bytes: usize = ds.iter().map(|s| s.text.len()).sum();
    let mut g = c.benchmark_group("corpus");
    g.throughput(Throughput::Bytes(bytes as u64));
    g.bench_function("tokenize", |b| {
        b.iter(|| {
            ds.iter()
                .map(|s| tokenize(black_box(&s.text)).len())
                .sum::<usize>()
        })
    });
    let parsed: Vec<_> = ds.iter().map(|s| tokenize(&s.text)).collect();
    g.bench_function("detokenize", |b| {
        b.iter(|| {
            parsed
                .iter()
                .map(|c| detokenize(black_box(c)).len())
                .sum::<usize>()
        })
    });
    g.finish();
}

fn presets(c: &mut Criterion) {
    let ds = captions(10_000, 2);
    let mut g = c.benchmark_group("mutate");
    g.throughput(Throughput::Elements(ds.len() as u64));
    for id in [PresetId::Mwr, PresetId::Mwj, PresetId::McrA, PresetId::McdE] {
        let set = OperatorSet::builtin(id);
        g.bench_with_input(BenchmarkId::from_parameter(id), &set, |b, set| {
            b.iter(|| mutate_dataset(black_box(&ds), set, LabelFilter::Machine))
        });
    }
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let mut g = c.benchmark_group("auc");
    for n in [1_000, 100_000] {
        let records = scores(n, 3);
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &records, |b, r| {
            b.iter(|| auc(black_box(r)))
        });
    }
    g.finish();
}

fn augmentation(c: &mut Criterion) {
    let ds = captions(10_000, 4);
    let cfg = RrConfig::new(5);
    let mut g = c.benchmark_group("augment");
    g.throughput(Throughput::Elements(ds.len() as u64));
    g.bench_function("rr", |b| b.iter(|| augment_dataset(black_box(&ds), &cfg)));
    g.finish();
}

criterion_group!(benches, corpus, presets, metrics, augmentation);
criterion_main!(benches);
