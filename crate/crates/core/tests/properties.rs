mod common;

use std::collections::HashSet;
use std::sync::OnceLock;

use adpr_core::afu::{build_db_from_layouts, AfuSpec, BitstreamDb, RoutabilityCap, Synthesizer};
use adpr_core::experiments::{transition_bytes, transition_time, OverheadModel};
use adpr_core::layouts::{random_layout, LayoutPool, RandomLayoutOptions};
use adpr_core::packing::{validate_placement, AmorphousIndex, Combination, Placement, StandardSystem};
use adpr_core::rng::{item_rng, stage_rng, stream};
use adpr_core::workloads::{build_library, sample_combinations, sample_sequence, Difficulty, SequenceOptions, WorkloadSpec};
use adpr_core::{bitstream_bytes, overlaps, validate_footprint, Cell, Footprint, ResourceKind, SizeModel, Validity};
use common::*;
use proptest::prelude::*;

const CASES: u32 = 1000;
const N_SLOTS: usize = 6;

struct Fixture {
    family: usize,
    library: Vec<AfuSpec>,
    standards: Vec<StandardSystem>,
    small: AmorphousIndex<'static>,
    full: AmorphousIndex<'static>,
}

impl Fixture {
    fn synth(&self) -> Synthesizer<'static> {
        Synthesizer::new(&devices()[self.family], RoutabilityCap::DEFAULT, SizeModel::default())
    }
}

fn fixture(f: usize) -> &'static Fixture {
    static F: OnceLock<Vec<Fixture>> = OnceLock::new();
    &F.get_or_init(|| {
        (0..3)
            .map(|family| {
                let device = &devices()[family];
                let library = build_library(WorkloadSpec::new(common::family(family), Difficulty::Hard));
                let pool = LayoutPool::build(device, 20, 7, &RandomLayoutOptions::default()).unwrap();
                let synth = Synthesizer::new(device, RoutabilityCap::DEFAULT, SizeModel::default());
                let db_small: &'static BitstreamDb =
                    Box::leak(Box::new(build_db_from_layouts(&synth, &pool.layouts()[..5], &library)));
                let db: &'static BitstreamDb = Box::leak(Box::new(build_db_from_layouts(&synth, pool.layouts(), &library)));
                let standards = pool
                    .layouts()
                    .iter()
                    .map(|l| StandardSystem::new(&synth, &library, l.clone()))
                    .collect();
                Fixture {
                    family,
                    library,
                    standards,
                    small: AmorphousIndex::new(device, db_small),
                    full: AmorphousIndex::new(device, db),
                }
            })
            .collect()
    })[f]
}

fn choices() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(any::<u32>(), 0..30)
}

/// Combination slots, half of them empty on average.
fn slots(library_len: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(prop_oneof![Just(0usize), 0..library_len], N_SLOTS)
}

fn region_fp(f: usize, start: u32, picks: &[u32]) -> Footprint {
    let d = &devices()[f];
    Footprint::new(0, grow(d, region_cell(d, start), picks, |c| d.in_region(c)))
}

fn reference_validity(f: usize, fp: &Footprint) -> Validity {
    let d = &devices()[f];
    let Some(own) = d.interface(fp.interface) else {
        return Validity::UnknownInterface;
    };
    let cells = as_hash(&fp.cells);
    if !connected(&cells, d) {
        return Validity::Disconnected;
    }
    if !as_hash(&own.termination).is_subset(&cells) {
        return Validity::MissingOwnTermination;
    }
    for other in d.interfaces() {
        if other.id != fp.interface && !as_hash(&other.termination).is_disjoint(&cells) {
            return Validity::EnclosesForeignTermination { interface: other.id };
        }
    }
    if let Some(&cell) = cells.iter().filter(|c| !d.in_region(**c)).min() {
        return Validity::EscapesRegion { cell };
    }
    Validity::Valid
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn overlap_is_symmetric_reflexive_and_matches_set_intersection(
        f in 0..3usize, s1 in any::<u32>(), c1 in choices(), s2 in any::<u32>(), c2 in choices(),
    ) {
        let a = region_fp(f, s1, &c1);
        let b = region_fp(f, s2, &c2);
        let expected = !as_hash(&a.cells).is_disjoint(&as_hash(&b.cells));
        prop_assert_eq!(overlaps(&a, &b).unwrap(), expected);
        prop_assert_eq!(overlaps(&b, &a).unwrap(), expected);
        prop_assert!(overlaps(&a, &a).unwrap());
    }

    #[test]
    fn validity_matches_reference_rules(
        f in 0..3usize,
        interface in 0..7usize,
        from_anchor in any::<bool>(),
        start in any::<u32>(),
        picks in choices(),
        drop in prop::option::of(any::<u32>()),
    ) {
        let d = &devices()[f];
        let origin = match d.interface(interface) {
            Some(i) if from_anchor => i.termination.iter().next().unwrap(),
            _ => any_cell(d, start),
        };
        let mut cells = grow(d, origin, &picks, |_| true);
        if let Some(k) = drop {
            let all: Vec<Cell> = cells.iter().collect();
            cells.remove(all[k as usize % all.len()]);
        }
        let fp = Footprint::new(interface, cells);
        prop_assert_eq!(validate_footprint(d, &fp), reference_validity(f, &fp));
    }

    #[test]
    fn adding_foreign_termination_invalidates(
        f in 0..3usize, interface in 0..6usize, other in 1..6usize, picks in choices(),
    ) {
        let d = &devices()[f];
        let mut fp = own_footprint(d, interface, &picks);
        prop_assert!(validate_footprint(d, &fp).is_valid());
        let foreign = (interface + other) % 6;
        fp.cells.union_with(&d.interfaces()[foreign].termination);
        prop_assert!(!validate_footprint(d, &fp).is_valid());
    }

    #[test]
    fn valid_footprint_capacity_covers_termination(f in 0..3usize, interface in 0..6usize, picks in choices()) {
        let d = &devices()[f];
        let fp = own_footprint(d, interface, &picks);
        let term = d.region_capacity(&d.interfaces()[interface].termination).unwrap();
        prop_assert!(term.fits_within(&d.region_capacity(&fp.cells).unwrap()));
    }

    #[test]
    fn capacity_is_additive_over_disjoint_sets(
        f in 0..3usize, s1 in any::<u32>(), c1 in choices(), s2 in any::<u32>(), c2 in choices(),
    ) {
        let d = &devices()[f];
        let a = region_fp(f, s1, &c1).cells;
        let b = region_fp(f, s2, &c2).cells.difference(&a);
        let ca = d.region_capacity(&a).unwrap();
        let cb = d.region_capacity(&b).unwrap();
        prop_assert_eq!(ca, capacity(d, &as_hash(&a)));
        prop_assert_eq!(d.region_capacity(&a.union(&b)).unwrap(), ca + cb);
    }

    #[test]
    fn size_is_linear_and_monotone(
        f in 0..3usize, start in any::<u32>(), picks in choices(), keep in prop::collection::vec(any::<bool>(), 30),
    ) {
        let d = &devices()[f];
        let m = SizeModel::default();
        let a = region_fp(f, start, &picks).cells;
        let sub: HashSet<Cell> = a.iter().zip(keep.iter().cycle()).filter(|(_, &k)| k).map(|(c, _)| c).collect();
        let b = d.cell_set(sub.iter().copied()).unwrap();
        let expected = 404 + a.iter().map(|c| bytes_per_cell(d.kind_at(c))).sum::<u64>();
        prop_assert_eq!(bitstream_bytes(d, &a, &m), expected);
        prop_assert!(bitstream_bytes(d, &b, &m) <= bitstream_bytes(d, &a, &m));
        if b.len() < a.len() {
            prop_assert!(bitstream_bytes(d, &b, &m) < bitstream_bytes(d, &a, &m));
        }
        let rest = a.difference(&b);
        prop_assert_eq!(
            bitstream_bytes(d, &a, &m) - m.header_bytes,
            (bitstream_bytes(d, &b, &m) - m.header_bytes) + (bitstream_bytes(d, &rest, &m) - m.header_bytes)
        );
    }

    #[test]
    fn fit_rule_matches_integer_arithmetic(
        f in 0..3usize, interface in 0..6usize, picks in choices(),
        logic in 0..4000u32, bram in 0..60u32, dsp in 0..80u32,
    ) {
        let d = &devices()[f];
        let fp = own_footprint(d, interface, &picks);
        let afu = AfuSpec {
            id: "probe".into(),
            demand: adpr_core::ResourceVector::new(logic, bram, dsp),
            interface_kind: common::family(f).interface_kind(),
        };
        let cap = capacity(d, &as_hash(&fp.cells));
        let fits = ResourceKind::ALL.iter().all(|&k| 10 * afu.demand.get(k) <= 7 * cap.get(k));
        let synth = Synthesizer::new(d, RoutabilityCap::DEFAULT, SizeModel::default());
        match synth.synthesize(0, &afu, &fp) {
            Ok(v) => {
                prop_assert!(fits);
                prop_assert_eq!(v.bytes, bitstream_bytes(d, &fp.cells, &SizeModel::default()));
            }
            Err(_) => prop_assert!(!fits),
        }
    }

    #[test]
    fn emptying_a_slot_keeps_feasibility(f in 0..3usize, s in slots(16), k in 0..N_SLOTS, layout in 0..21usize) {
        let fx = fixture(f);
        let combo = Combination::new(s.iter().map(|&x| x % fx.library.len()).collect());
        let mut fewer = combo.slots().to_vec();
        fewer[k] = 0;
        let fewer = Combination::new(fewer);
        if fx.full.is_feasible(&combo) {
            prop_assert!(fx.full.is_feasible(&fewer));
        }
        if fx.standards[layout].is_feasible(&combo) {
            prop_assert!(fx.standards[layout].is_feasible(&fewer));
        }
    }

    #[test]
    fn shrinking_a_demand_keeps_feasibility(f in 0..2usize, s in slots(16), k in 0..N_SLOTS, by in 1..9usize, layout in 0..21usize) {
        // single-kind families: library index order is demand order
        let fx = fixture(f);
        let combo = Combination::new(s.iter().map(|&x| x % fx.library.len()).collect());
        let mut smaller = combo.slots().to_vec();
        smaller[k] = smaller[k].saturating_sub(by);
        let smaller = Combination::new(smaller);
        if fx.full.is_feasible(&combo) {
            prop_assert!(fx.full.is_feasible(&smaller));
        }
        if fx.standards[layout].is_feasible(&combo) {
            prop_assert!(fx.standards[layout].is_feasible(&smaller));
        }
    }

    #[test]
    fn larger_database_keeps_feasibility(f in 0..3usize, s in slots(16)) {
        let fx = fixture(f);
        let combo = Combination::new(s.iter().map(|&x| x % fx.library.len()).collect());
        if fx.small.is_feasible(&combo) {
            prop_assert!(fx.full.is_feasible(&combo));
        }
    }

    #[test]
    fn amorphous_dominates_every_layout_and_placements_validate(f in 0..3usize, s in slots(16)) {
        let fx = fixture(f);
        let synth = fx.synth();
        let combo = Combination::new(s.iter().map(|&x| x % fx.library.len()).collect());
        let amorphous = fx.full.place(&combo);
        if let Ok(p) = &amorphous {
            prop_assert_eq!(validate_placement(&synth, &fx.library, &combo, p), Ok(()));
        }
        for standard in &fx.standards {
            if let Ok(p) = standard.place(&combo) {
                prop_assert_eq!(validate_placement(&synth, &fx.library, &combo, &p), Ok(()));
                prop_assert!(amorphous.is_ok());
            }
        }
    }

    #[test]
    fn transition_cost_is_additive_and_linear(f in 0..3usize, a in slots(16), b in slots(16)) {
        let fx = fixture(f);
        let place = |s: &[usize]| fx.full.place(&Combination::new(s.iter().map(|&x| x % fx.library.len()).collect()));
        let (Ok(prev), Ok(next)) = (place(&a), place(&b)) else {
            return Ok(());
        };
        let changed: u64 = next
            .assignments
            .iter()
            .filter(|x| !prev.assignments.iter().any(|y| y.interface() == x.interface() && y.afu() == x.afu() && y.version.footprint == x.version.footprint))
            .map(|x| x.version.bytes)
            .sum();
        prop_assert_eq!(transition_bytes(&prev, &next), changed);
        prop_assert_eq!(transition_bytes(&next, &next), 0);
        prop_assert_eq!(transition_bytes(&Placement::default(), &next), next.total_bytes());
        let slow = OverheadModel::default();
        let fast = OverheadModel { pcap_bandwidth: 2.0 * slow.pcap_bandwidth, ..slow };
        let t = transition_time(&prev, &next, &slow);
        prop_assert!((t - changed as f64 / slow.pcap_bandwidth).abs() <= 1e-12);
        prop_assert!((transition_time(&prev, &next, &fast) * 2.0 - t).abs() <= 1e-12);
    }

    #[test]
    fn same_seed_same_draws(seed in any::<u64>(), f in 0..3usize, index in 0..1000u64) {
        let d = &devices()[f];
        let library = build_library(WorkloadSpec::new(common::family(f), Difficulty::Harder));
        let draw = || sample_combinations(&library, 16, N_SLOTS, &mut stage_rng(seed, stream::COMBINATIONS)).unwrap();
        prop_assert_eq!(draw(), draw());
        let opts = RandomLayoutOptions::default();
        let grow_one = || random_layout(d, &mut item_rng(seed, stream::LAYOUTS, index), &opts);
        prop_assert_eq!(grow_one(), grow_one());
        let any: &(dyn Fn(&Combination) -> bool + Sync) = &|_| true;
        let seq = || sample_sequence(&library, 8, 2, N_SLOTS, &[any], &SequenceOptions::default(), &mut stage_rng(seed, stream::SEQUENCE)).unwrap();
        prop_assert_eq!(seq(), seq());
    }

    #[test]
    fn sequence_steps_change_exactly_delta_slots(seed in any::<u64>(), delta in 1..=N_SLOTS, redraw in any::<bool>()) {
        let library = build_library(WorkloadSpec::new(common::family(0), Difficulty::Easy));
        let any: &(dyn Fn(&Combination) -> bool + Sync) = &|_| true;
        let opts = SequenceOptions { redraw_until_different: redraw, ..SequenceOptions::default() };
        let seq = sample_sequence(&library, 12, delta, N_SLOTS, &[any], &opts, &mut stage_rng(seed, stream::SEQUENCE)).unwrap();
        for w in seq.combos.windows(2) {
            let changed = w[0].differing_slots(&w[1]).len();
            if redraw {
                prop_assert_eq!(changed, delta);
            } else {
                prop_assert!(changed <= delta);
            }
        }
    }
}
