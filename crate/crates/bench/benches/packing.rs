use adpr_core::afu::{build_db_from_layouts, RoutabilityCap, Synthesizer};
use adpr_core::layouts::{naive_layout, random_layouts, LayoutPool, RandomLayoutOptions};
use adpr_core::packing::{AmorphousIndex, SearchMode, StandardSystem};
use adpr_core::rng::{stage_rng, stream};
use adpr_core::workloads::{build_library, sample_combinations, Difficulty, WorkloadFamily, WorkloadSpec};
use adpr_core::{bundled, SizeModel};
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

const SEED: u64 = 1;

fn feasibility(c: &mut Criterion) {
    for family in WorkloadFamily::ALL {
        let device = bundled::device(family);
        let library = build_library(WorkloadSpec::new(family, Difficulty::Easy));
        let pool = LayoutPool::build(&device, 200, SEED, &RandomLayoutOptions::default()).unwrap();
        let synth = Synthesizer::new(&device, RoutabilityCap::DEFAULT, SizeModel::default());
        let db = build_db_from_layouts(&synth, pool.layouts(), &library);
        let combos = sample_combinations(&library, 200, 6, &mut stage_rng(SEED, stream::COMBINATIONS)).unwrap();
        let exact = AmorphousIndex::new(&device, &db);
        let greedy = AmorphousIndex::new(&device, &db).with_mode(SearchMode::Greedy);
        let standard = StandardSystem::new(&synth, &library, pool.naive().clone());

        let mut g = c.benchmark_group(format!("feasibility/{family}"));
        g.bench_function("amorphous_exact_200", |b| {
            b.iter(|| combos.iter().filter(|x| exact.is_feasible(x)).count())
        });
        g.bench_function("amorphous_greedy_200", |b| {
            b.iter(|| combos.iter().filter(|x| greedy.is_feasible(x)).count())
        });
        g.bench_function("standard_matching_200", |b| {
            b.iter(|| combos.iter().filter(|x| standard.is_feasible(x)).count())
        });
        g.bench_function("index_build", |b| b.iter(|| AmorphousIndex::new(&device, black_box(&db))));
        g.finish();
    }
}

fn layouts(c: &mut Criterion) {
    let device = bundled::workload_bram();
    let mut g = c.benchmark_group("layouts");
    g.sample_size(10);
    g.bench_function("naive", |b| b.iter(|| naive_layout(black_box(&device)).unwrap()));
    g.bench_function("random_100", |b| {
        b.iter_batched(
            RandomLayoutOptions::default,
            |opts| random_layouts(&device, 100, SEED, &opts).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

criterion_group!(benches, feasibility, layouts);
criterion_main!(benches);
