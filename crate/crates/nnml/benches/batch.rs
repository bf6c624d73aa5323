//! Batch evaluation of a formula corpus: the data-parallel map against the
//! sequential baseline. Without the `parallel` feature both run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nnml::batch::{prove_all, prove_all_sequential, summarise, PARALLEL};
use nnml::gen::{formula_corpus, FormulaShape};
use nnml::search::SearchConfig;
use nnml::{parse_logic_name, Hypersequent};

fn corpus_batch(c: &mut Criterion) {
    let inputs: Vec<Hypersequent> = formula_corpus(2024, 200, &FormulaShape::default())
        .into_iter()
        .map(Hypersequent::goal)
        .collect();
    let config = SearchConfig { budget: 1_000_000 };
    let mut group = c.benchmark_group("corpus");
    group.sample_size(10);
    for name in ["E", "MC", "ED", "ECN"] {
        let l = parse_logic_name(name).expect("logic name");
        // Both strategies must agree before their timings mean anything.
        let par = summarise(&prove_all(&inputs, &l, &config));
        let seq = summarise(&prove_all_sequential(&inputs, &l, &config));
        assert_eq!(par, seq, "parallel and sequential batches differ for {name}");

        let label = if PARALLEL { "parallel" } else { "parallel-disabled" };
        group.bench_with_input(BenchmarkId::new(label, name), &l, |b, l| {
            b.iter(|| black_box(prove_all(&inputs, l, &config)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", name), &l, |b, l| {
            b.iter(|| black_box(prove_all_sequential(&inputs, l, &config)))
        });
    }
    group.finish();
}

criterion_group!(benches, corpus_batch);
criterion_main!(benches);
