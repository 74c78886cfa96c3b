use adpr_core::packing::Combination;
use adpr_core::rng::{stage_rng, stream};
use adpr_core::workloads::{build_library, sample_combinations, sample_sequence, Difficulty, SequenceOptions, WorkloadFamily, WorkloadSpec};

/// Upper 0.1% points of the chi-square distribution.
fn critical(df: usize) -> f64 {
    match df {
        4 => 18.467,
        5 => 20.515,
        10 => 29.588,
        12 => 32.909,
        _ => panic!("no table entry for {df} degrees of freedom"),
    }
}

fn chi_square(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

#[test]
fn slot_draws_are_uniform_over_the_library() {
    for spec in [
        WorkloadSpec::new(WorkloadFamily::Bram, Difficulty::Easy),
        WorkloadSpec::new(WorkloadFamily::Dsp, Difficulty::Harder),
        WorkloadSpec::new(WorkloadFamily::Mixed, Difficulty::Hard),
    ] {
        let library = build_library(spec);
        let combos = sample_combinations(&library, 20_000, 6, &mut stage_rng(11, stream::COMBINATIONS)).unwrap();
        let mut counts = vec![0u64; library.len()];
        for c in &combos {
            for &s in c.slots() {
                counts[s] += 1;
            }
        }
        let stat = chi_square(&counts);
        assert!(stat < critical(library.len() - 1), "{spec}: chi-square {stat:.2} over {counts:?}");
    }
}

#[test]
fn changed_slots_are_uniform() {
    let library = build_library(WorkloadSpec::new(WorkloadFamily::Bram, Difficulty::Easy));
    let any: &(dyn Fn(&Combination) -> bool + Sync) = &|_| true;
    let seq = sample_sequence(&library, 30_000, 1, 6, &[any], &SequenceOptions::default(), &mut stage_rng(5, stream::SEQUENCE)).unwrap();
    let mut counts = vec![0u64; 6];
    for w in seq.combos.windows(2) {
        for s in w[0].differing_slots(&w[1]) {
            counts[s] += 1;
        }
    }
    let stat = chi_square(&counts);
    assert!(stat < critical(5), "chi-square {stat:.2} over {counts:?}");
}
