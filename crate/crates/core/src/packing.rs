//! Feasibility of a demanded AFU combination under standard DPR (fixed
//! partitions, bipartite matching) and amorphous DPR (version selection and
//! non-overlapping packing), plus an exhaustive oracle.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::afu::{AfuSpec, BitstreamDb, BitstreamVersion, SynthesisError, Synthesizer};
use crate::cellset::CellSet;
use crate::error::{Error, Result};
use crate::fabric::Device;
use crate::footprint::ResourceVector;
use crate::layouts::Layout;

/// Demanded AFUs, one library index per interface slot. Zero-demand
/// entries pad shorter demands.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Combination {
    slots: Vec<usize>,
}

impl Combination {
    pub fn new(slots: Vec<usize>) -> Self {
        Combination { slots }
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// `(slot, afu)` for every slot holding a real AFU.
    pub fn demanded<'a>(&'a self, library: &'a [AfuSpec]) -> impl Iterator<Item = (usize, usize)> + 'a {
        self.slots
            .iter()
            .copied()
            .enumerate()
            .filter(move |&(_, a)| !library[a].is_absent())
    }

    /// Slots where `self` and `other` hold different AFUs.
    pub fn differing_slots(&self, other: &Combination) -> Vec<usize> {
        self.slots
            .iter()
            .zip(&other.slots)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub slot: usize,
    pub version: BitstreamVersion,
}

impl Assignment {
    pub fn afu(&self) -> usize {
        self.version.afu
    }

    pub fn interface(&self) -> usize {
        self.version.footprint.interface
    }
}

/// One assignment per demanded slot, sorted by slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Placement {
    pub assignments: Vec<Assignment>,
}

impl Placement {
    fn from_unsorted(mut assignments: Vec<Assignment>) -> Self {
        assignments.sort_by_key(|a| a.slot);
        Placement { assignments }
    }

    pub fn by_slot(&self, slot: usize) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.slot == slot)
    }

    pub fn by_interface(&self, interface: usize) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.interface() == interface)
    }

    pub fn total_bytes(&self) -> u64 {
        self.assignments.iter().map(|a| a.version.bytes).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlacementDefect {
    MissingSlot { slot: usize },
    UnexpectedSlot { slot: usize },
    WrongAfu { slot: usize },
    InterfaceReused { interface: usize },
    Overlap { a: usize, b: usize },
    Unsynthesizable { slot: usize, reason: SynthesisError },
}

/// Checks a placement from first principles: exactly the demanded slots,
/// matching AFUs, distinct interfaces, pairwise disjoint footprints, and
/// every version re-synthesizable.
pub fn validate_placement(
    synth: &Synthesizer<'_>,
    library: &[AfuSpec],
    combo: &Combination,
    placement: &Placement,
) -> Result<(), PlacementDefect> {
    let demanded: Vec<(usize, usize)> = combo.demanded(library).collect();
    for &(slot, _) in &demanded {
        if placement.by_slot(slot).is_none() {
            return Err(PlacementDefect::MissingSlot { slot });
        }
    }
    let mut seen_slots = HashSet::new();
    for a in &placement.assignments {
        match demanded.iter().find(|&&(s, _)| s == a.slot) {
            None => return Err(PlacementDefect::UnexpectedSlot { slot: a.slot }),
            Some(&(_, afu)) if afu != a.afu() => return Err(PlacementDefect::WrongAfu { slot: a.slot }),
            _ => {}
        }
        if !seen_slots.insert(a.slot) {
            return Err(PlacementDefect::UnexpectedSlot { slot: a.slot });
        }
        if let Err(reason) = synth.synthesize(a.afu(), &library[a.afu()], &a.version.footprint) {
            return Err(PlacementDefect::Unsynthesizable { slot: a.slot, reason });
        }
    }
    let mut ifaces = HashSet::new();
    for a in &placement.assignments {
        if !ifaces.insert(a.interface()) {
            return Err(PlacementDefect::InterfaceReused { interface: a.interface() });
        }
    }
    for (i, x) in placement.assignments.iter().enumerate() {
        for y in &placement.assignments[i + 1..] {
            if x.version.footprint.cells.intersects(&y.version.footprint.cells) {
                return Err(PlacementDefect::Overlap { a: x.slot, b: y.slot });
            }
        }
    }
    Ok(())
}

/// Why a combination could not be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Infeasible {
    /// The maximum matching leaves this slot's AFU without a partition.
    Unmatched { slot: usize },
    /// This slot's AFU has no version at all.
    NoVersions { slot: usize },
    /// Every version selection conflicts.
    Exhausted,
}

pub type Verdict = std::result::Result<Placement, Infeasible>;

// ---------------------------------------------------------------------------
// Standard DPR
// ---------------------------------------------------------------------------

/// A fixed layout with its AFU-to-partition fit table precomputed.
#[derive(Debug, Clone)]
pub struct StandardSystem {
    layout: Layout,
    /// Per library AFU, bitmask of partitions it synthesizes into.
    fit: Vec<u64>,
    bytes: Vec<u64>,
    absent: Vec<bool>,
}

impl StandardSystem {
    pub fn new(synth: &Synthesizer<'_>, library: &[AfuSpec], layout: Layout) -> Self {
        assert!(layout.partitions.len() <= 64, "at most 64 interfaces supported");
        let mut fit = vec![0u64; library.len()];
        let mut bytes = vec![0u64; layout.partitions.len()];
        for (p, part) in layout.partitions.iter().enumerate() {
            bytes[p] = crate::footprint::bitstream_bytes(synth.device, &part.cells, &synth.sizes);
            for (a, afu) in library.iter().enumerate() {
                if !afu.is_absent() && synth.synthesize(a, afu, part).is_ok() {
                    fit[a] |= 1 << p;
                }
            }
        }
        StandardSystem { layout, fit, bytes, absent: library.iter().map(AfuSpec::is_absent).collect() }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Bitmask of partitions `afu` fits into.
    pub fn fit_mask(&self, afu: usize) -> u64 {
        self.fit[afu]
    }

    pub fn is_feasible(&self, combo: &Combination) -> bool {
        self.matching(combo, &[]).is_ok()
    }

    pub fn place(&self, combo: &Combination) -> Verdict {
        self.place_with(combo, &[])
    }

    /// Places `combo` with `fixed` slots pinned to the given partitions;
    /// the remaining demanded slots are matched into free partitions.
    pub fn place_with(&self, combo: &Combination, fixed: &[(usize, usize)]) -> Verdict {
        let matched = self.matching(combo, fixed)?;
        let assignments = matched
            .into_iter()
            .map(|(slot, p)| Assignment {
                slot,
                version: BitstreamVersion {
                    afu: combo.slots()[slot],
                    footprint: self.layout.partitions[p].clone(),
                    bytes: self.bytes[p],
                },
            })
            .collect();
        Ok(Placement::from_unsorted(assignments))
    }

    /// Kuhn's augmenting-path matching of demanded slots to partitions.
    fn matching(&self, combo: &Combination, fixed: &[(usize, usize)]) -> std::result::Result<Vec<(usize, usize)>, Infeasible> {
        let n = self.layout.partitions.len();
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut taken = 0u64;
        for &(slot, p) in fixed {
            let afu = combo.slots()[slot];
            if self.fit[afu] & (1 << p) == 0 || taken & (1 << p) != 0 {
                return Err(Infeasible::Unmatched { slot });
            }
            taken |= 1 << p;
            owner[p] = Some(slot);
        }
        let free: Vec<usize> = combo
            .slots()
            .iter()
            .enumerate()
            .filter(|&(s, &a)| !self.absent[a] && !fixed.iter().any(|&(fs, _)| fs == s))
            .map(|(s, _)| s)
            .collect();
        for &slot in &free {
            let mut visited = taken;
            if !self.augment(combo, slot, &mut owner, &mut visited) {
                return Err(Infeasible::Unmatched { slot });
            }
        }
        Ok(owner.iter().enumerate().filter_map(|(p, o)| o.map(|s| (s, p))).collect())
    }

    fn augment(&self, combo: &Combination, slot: usize, owner: &mut [Option<usize>], visited: &mut u64) -> bool {
        let mut mask = self.fit[combo.slots()[slot]] & !*visited;
        while mask != 0 {
            let p = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            *visited |= 1 << p;
            let ok = match owner[p] {
                None => true,
                Some(other) => self.augment(combo, other, owner, visited),
            };
            if ok {
                owner[p] = Some(slot);
                return true;
            }
        }
        false
    }
}

/// Standard DPR feasibility of `combo` under `layout`.
pub fn feasible_standard(synth: &Synthesizer<'_>, library: &[AfuSpec], layout: &Layout, combo: &Combination) -> Verdict {
    StandardSystem::new(synth, library, layout.clone()).place(combo)
}

// ---------------------------------------------------------------------------
// Amorphous DPR
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Candidate {
    version: usize,
    interface: usize,
    cells: CellSet,
    capacity: ResourceVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SearchMode {
    /// Complete backtracking search.
    #[default]
    Exact,
    /// First compatible version per AFU, no backtracking.
    Greedy,
}

/// Order in which the search tries an AFU's versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum VersionPreference {
    /// Database order: no preference among valid packings.
    #[default]
    Canonical,
    /// Smallest bitstream first, favouring packings that load fewer bytes.
    Smallest,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub verdict: Verdict,
    pub nodes: u64,
}

/// Search index over a version database. Versions whose footprint strictly
/// contains another version of the same AFU on the same interface are
/// dropped, since the smaller one can always stand in for it; the rest are
/// ordered by the chosen [`VersionPreference`].
#[derive(Debug, Clone)]
pub struct AmorphousIndex<'db> {
    db: &'db BitstreamDb,
    candidates: Vec<Vec<Candidate>>,
    min_capacity: Vec<ResourceVector>,
    region_capacity: ResourceVector,
    cell_capacity: Vec<ResourceVector>,
    empty: CellSet,
    mode: SearchMode,
}

impl<'db> AmorphousIndex<'db> {
    pub fn new(device: &Device, db: &'db BitstreamDb) -> Self {
        Self::with_preference(device, db, VersionPreference::default())
    }

    pub fn with_preference(device: &Device, db: &'db BitstreamDb, preference: VersionPreference) -> Self {
        let n_afus = db.library().len();
        let mut candidates: Vec<Vec<Candidate>> = (0..n_afus)
            .into_par_iter()
            .map(|afu| {
                let mut keep: Vec<(u64, usize, Candidate)> = Vec::new();
                for iface in 0..device.interfaces().len() {
                    let mut group: Vec<(usize, &BitstreamVersion)> =
                        db.version_ids_for(afu, iface).iter().map(|&i| (i, &db.versions()[i])).collect();
                    group.sort_by_key(|(i, v)| (v.footprint.cells.len(), *i));
                    // A strict superset of a kept footprint is never needed;
                    // any footprint with a strict subset also contains a
                    // kept one, so checking kept footprints suffices.
                    let mut minimal: Vec<&CellSet> = Vec::new();
                    for (i, v) in group {
                        if minimal.iter().any(|m| m.is_subset(&v.footprint.cells)) {
                            continue;
                        }
                        minimal.push(&v.footprint.cells);
                        keep.push((
                            v.bytes,
                            i,
                            Candidate {
                                version: i,
                                interface: iface,
                                cells: v.footprint.cells.clone(),
                                capacity: device.capacity_unchecked(&v.footprint.cells),
                            },
                        ));
                    }
                }
                match preference {
                    VersionPreference::Smallest => keep.sort_by_key(|&(bytes, i, _)| (bytes, i)),
                    VersionPreference::Canonical => keep.sort_by_key(|&(_, i, _)| i),
                }
                keep.into_iter().map(|(_, _, c)| c).collect()
            })
            .collect();
        for c in &mut candidates {
            c.shrink_to_fit();
        }
        let min_capacity = candidates
            .iter()
            .map(|cs| {
                let mut m = ResourceVector::new(u32::MAX, u32::MAX, u32::MAX);
                for c in cs {
                    m = ResourceVector::new(
                        m.logic_cells.min(c.capacity.logic_cells),
                        m.bram.min(c.capacity.bram),
                        m.dsp.min(c.capacity.dsp),
                    );
                }
                if cs.is_empty() {
                    ResourceVector::ZERO
                } else {
                    m
                }
            })
            .collect();
        AmorphousIndex {
            db,
            candidates,
            min_capacity,
            region_capacity: device.capacity_unchecked(device.region()),
            cell_capacity: (0..device.empty_set().capacity())
                .map(|i| {
                    let mut v = ResourceVector::ZERO;
                    let col = device.column((i / device.rows() as usize) as u16);
                    v.add_kind(col.kind, col.capacity);
                    v
                })
                .collect(),
            empty: device.empty_set(),
            mode: SearchMode::Exact,
        }
    }

    pub fn with_mode(mut self, mode: SearchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn db(&self) -> &'db BitstreamDb {
        self.db
    }

    /// Search candidates kept for `afu`.
    pub fn candidate_count(&self, afu: usize) -> usize {
        self.candidates[afu].len()
    }

    pub fn is_feasible(&self, combo: &Combination) -> bool {
        self.search(combo, &[]).verdict.is_ok()
    }

    pub fn place(&self, combo: &Combination) -> Verdict {
        self.search(combo, &[]).verdict
    }

    /// Packs the demanded slots of `combo` not covered by `fixed`, around
    /// the footprints and interfaces `fixed` already holds.
    pub fn place_with(&self, combo: &Combination, fixed: &[Assignment]) -> Verdict {
        self.search(combo, fixed).verdict
    }

    pub fn search(&self, combo: &Combination, fixed: &[Assignment]) -> SearchOutcome {
        let library = self.db.library();
        let mut occupied = self.empty.clone();
        let mut used = 0u64;
        for a in fixed {
            if used & (1 << a.interface()) != 0 || a.version.footprint.cells.intersects(&occupied) {
                return SearchOutcome { verdict: Err(Infeasible::Exhausted), nodes: 0 };
            }
            used |= 1 << a.interface();
            occupied.union_with(&a.version.footprint.cells);
        }
        let mut occupied_capacity = ResourceVector::ZERO;
        for i in occupied.indices() {
            occupied_capacity += self.cell_capacity[i];
        }
        let mut order: Vec<(usize, usize)> = combo
            .demanded(library)
            .filter(|&(s, _)| !fixed.iter().any(|a| a.slot == s))
            .collect();
        if let Some(&(slot, _)) = order.iter().find(|&&(_, a)| self.candidates[a].is_empty()) {
            return SearchOutcome { verdict: Err(Infeasible::NoVersions { slot }), nodes: 0 };
        }
        order.sort_by_key(|&(s, a)| (self.candidates[a].len(), a, s));
        let mut suffix_min = vec![ResourceVector::ZERO; order.len() + 1];
        for d in (0..order.len()).rev() {
            suffix_min[d] = suffix_min[d + 1] + self.min_capacity[order[d].1];
        }
        let mut s = Search {
            index: self,
            order,
            suffix_min,
            occupied,
            used,
            occupied_capacity,
            chosen: Vec::new(),
            memo: HashSet::new(),
            nodes: 0,
        };
        s.chosen = vec![0; s.order.len()];
        let found = match self.mode {
            SearchMode::Exact => s.dfs(0),
            SearchMode::Greedy => s.greedy(),
        };
        let verdict = if found {
            let mut assignments: Vec<Assignment> = fixed.to_vec();
            for (d, &(slot, afu)) in s.order.iter().enumerate() {
                let c = &self.candidates[afu][s.chosen[d]];
                assignments.push(Assignment { slot, version: self.db.versions()[c.version].clone() });
            }
            Ok(Placement::from_unsorted(assignments))
        } else {
            Err(Infeasible::Exhausted)
        };
        SearchOutcome { verdict, nodes: s.nodes }
    }
}

struct Search<'a, 'db> {
    index: &'a AmorphousIndex<'db>,
    order: Vec<(usize, usize)>,
    suffix_min: Vec<ResourceVector>,
    occupied: CellSet,
    used: u64,
    occupied_capacity: ResourceVector,
    chosen: Vec<usize>,
    memo: HashSet<(usize, u64, CellSet, usize)>,
    nodes: u64,
}

const MEMO_LIMIT: usize = 1 << 20;

impl Search<'_, '_> {
    fn start(&self, depth: usize) -> usize {
        if depth > 0 && self.order[depth - 1].1 == self.order[depth].1 {
            self.chosen[depth - 1] + 1
        } else {
            0
        }
    }

    fn compatible(&self, c: &Candidate) -> bool {
        self.used & (1 << c.interface) == 0 && !c.cells.intersects(&self.occupied)
    }

    /// Every later AFU still has some compatible candidate.
    fn forward_ok(&self, from: usize) -> bool {
        let mut last_afu = usize::MAX;
        for d in from..self.order.len() {
            let afu = self.order[d].1;
            if afu == last_afu {
                continue;
            }
            last_afu = afu;
            let start = if d == from { self.start(d) } else { 0 };
            if !self.index.candidates[afu][start..].iter().any(|c| self.compatible(c)) {
                return false;
            }
        }
        true
    }

    fn dfs(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            return true;
        }
        self.nodes += 1;
        let need = self.occupied_capacity + self.suffix_min[depth];
        if !need.fits_within(&self.index.region_capacity) {
            return false;
        }
        let start = self.start(depth);
        let key = (depth, self.used, self.occupied.clone(), start);
        if self.memo.contains(&key) {
            return false;
        }
        let afu = self.order[depth].1;
        let cands = &self.index.candidates[afu];
        for ci in start..cands.len() {
            let c = &cands[ci];
            if !self.compatible(c) {
                continue;
            }
            self.used |= 1 << c.interface;
            self.occupied.union_with(&c.cells);
            self.occupied_capacity += c.capacity;
            self.chosen[depth] = ci;
            if self.forward_ok(depth + 1) && self.dfs(depth + 1) {
                return true;
            }
            self.used &= !(1 << c.interface);
            self.occupied.subtract(&c.cells);
            self.occupied_capacity = sub(self.occupied_capacity, c.capacity);
        }
        if self.memo.len() < MEMO_LIMIT {
            self.memo.insert(key);
        }
        false
    }

    fn greedy(&mut self) -> bool {
        for depth in 0..self.order.len() {
            self.nodes += 1;
            let afu = self.order[depth].1;
            let start = self.start(depth);
            let Some(ci) = (start..self.index.candidates[afu].len()).find(|&ci| self.compatible(&self.index.candidates[afu][ci])) else {
                return false;
            };
            let c = &self.index.candidates[afu][ci];
            self.used |= 1 << c.interface;
            self.occupied.union_with(&c.cells);
            self.chosen[depth] = ci;
        }
        true
    }
}

fn sub(a: ResourceVector, b: ResourceVector) -> ResourceVector {
    ResourceVector::new(a.logic_cells - b.logic_cells, a.bram - b.bram, a.dsp - b.dsp)
}

/// Amorphous DPR feasibility of `combo` against `db`.
pub fn feasible_amorphous(device: &Device, db: &BitstreamDb, combo: &Combination) -> Verdict {
    AmorphousIndex::new(device, db).place(combo)
}

// ---------------------------------------------------------------------------
// Oracle and rates
// ---------------------------------------------------------------------------

pub const DEFAULT_ORACLE_BOUND: u128 = 1_000_000;

/// Tries every version of every demanded AFU in canonical order and returns
/// the first selection with distinct interfaces and disjoint footprints.
/// Refuses instances whose selection count exceeds `bound`.
pub fn brute_force_pack(db: &BitstreamDb, combo: &Combination, bound: u128) -> Result<Verdict> {
    let library = db.library();
    let demanded: Vec<(usize, usize)> = combo.demanded(library).collect();
    let choices: Vec<Vec<&BitstreamVersion>> = demanded.iter().map(|&(_, a)| db.versions_of(a).collect()).collect();
    if let Some(i) = choices.iter().position(Vec::is_empty) {
        return Ok(Err(Infeasible::NoVersions { slot: demanded[i].0 }));
    }
    let product = choices.iter().fold(1u128, |p, c| p.saturating_mul(c.len() as u128));
    if product > bound {
        return Err(Error::OracleBoundExceeded { product, bound });
    }
    let mut digits = vec![0usize; choices.len()];
    loop {
        let picked: Vec<&BitstreamVersion> = digits.iter().zip(&choices).map(|(&d, c)| c[d]).collect();
        let ok = picked.iter().enumerate().all(|(i, a)| {
            picked[i + 1..].iter().all(|b| {
                a.footprint.interface != b.footprint.interface && !a.footprint.cells.intersects(&b.footprint.cells)
            })
        });
        if ok {
            let assignments = demanded
                .iter()
                .zip(picked)
                .map(|(&(slot, _), v)| Assignment { slot, version: v.clone() })
                .collect();
            return Ok(Ok(Placement::from_unsorted(assignments)));
        }
        // Odometer step, last digit fastest.
        let mut i = digits.len();
        loop {
            if i == 0 {
                return Ok(Err(Infeasible::Exhausted));
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < choices[i].len() {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// Fraction of `combos` accepted by `feasible`.
pub fn placement_rate<F>(combos: &[Combination], feasible: F) -> Result<f64>
where
    F: Fn(&Combination) -> bool + Sync,
{
    if combos.is_empty() {
        return Err(Error::InvalidParameter("placement rate of an empty combination set".into()));
    }
    let ok = combos.par_iter().filter(|c| feasible(c)).count();
    Ok(ok as f64 / combos.len() as f64)
}

/// One line of the optional per-combination verdict dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerdictRow {
    pub combo_id: usize,
    pub system: String,
    pub feasible: bool,
    pub search_nodes: u64,
    pub elapsed_us: u64,
}
