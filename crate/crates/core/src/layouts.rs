//! Fixed DPR partition layouts for standard DPR: the naive near-equal
//! split, seeded random layouts, and best-effort selection.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cellset::CellSet;
use crate::error::{Error, Result};
use crate::fabric::{Device, ResourceKind};
use crate::footprint::{validate_footprint, Footprint, FootprintRecord, ResourceVector, Validity};
use crate::packing::Combination;
use crate::rng::{item_rng, stream};

/// One partition per interface; `partitions[i]` belongs to interface `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layout {
    pub partitions: Vec<Footprint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutDefect {
    WrongPartitionCount { expected: usize, found: usize },
    Misnumbered { index: usize },
    Invalid { index: usize, validity: Validity },
    TerminationOnly { index: usize },
    Overlap { a: usize, b: usize },
}

impl Layout {
    /// Checks the layout invariants; termination-only partitions count as
    /// defects only when `reject_termination_only` is set.
    pub fn check(&self, device: &Device, reject_termination_only: bool) -> Result<(), LayoutDefect> {
        let n = device.interfaces().len();
        if self.partitions.len() != n {
            return Err(LayoutDefect::WrongPartitionCount { expected: n, found: self.partitions.len() });
        }
        for (i, p) in self.partitions.iter().enumerate() {
            if p.interface != i {
                return Err(LayoutDefect::Misnumbered { index: i });
            }
            let validity = validate_footprint(device, p);
            if !validity.is_valid() {
                return Err(LayoutDefect::Invalid { index: i, validity });
            }
            if reject_termination_only && p.cells == device.interfaces()[i].termination {
                return Err(LayoutDefect::TerminationOnly { index: i });
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.partitions[a].cells.intersects(&self.partitions[b].cells) {
                    return Err(LayoutDefect::Overlap { a, b });
                }
            }
        }
        Ok(())
    }

    pub fn capacities(&self, device: &Device) -> Vec<ResourceVector> {
        self.partitions.iter().map(|p| device.capacity_unchecked(&p.cells)).collect()
    }

    pub fn to_records(&self) -> Vec<FootprintRecord> {
        self.partitions.iter().map(Footprint::to_record).collect()
    }

    pub fn from_records(device: &Device, recs: &[FootprintRecord]) -> Result<Self> {
        Ok(Layout {
            partitions: recs.iter().map(|r| Footprint::from_record(device, r)).collect::<Result<_>>()?,
        })
    }
}

// ---------------------------------------------------------------------------
// Naive layout
// ---------------------------------------------------------------------------

struct Split<'d> {
    device: &'d Device,
    owner: Vec<Option<usize>>,
    have: Vec<[f64; 3]>,
    mean: [f64; 3],
    /// Allowed absolute deviation from the mean per kind.
    tolerance: [f64; 3],
}

impl<'d> Split<'d> {
    fn present(&self) -> impl Iterator<Item = usize> + '_ {
        (0..3).filter(|&k| self.mean[k] > 0.0)
    }

    fn share(&self, p: usize, k: usize) -> f64 {
        self.have[p][k] / self.mean[k]
    }

    fn score(&self, p: usize) -> f64 {
        self.present().map(|k| self.share(p, k)).sum()
    }

    /// Squared relative deviation, plus a heavy penalty for leaving the
    /// tolerance band.
    fn objective_term(&self, have: &[f64; 3]) -> f64 {
        self.present()
            .map(|k| {
                let dev = (have[k] - self.mean[k]).abs();
                let over = (dev - self.tolerance[k]).max(0.0);
                (dev / self.mean[k]).powi(2) + 100.0 * (over / self.mean[k]).powi(2)
            })
            .sum()
    }

    fn cell_value(&self, i: usize) -> (usize, f64) {
        let col = self.device.columns()[i / self.device.rows() as usize];
        (kind_index(col.kind), col.capacity as f64)
    }

    fn claim(&mut self, p: usize, i: usize) {
        if let Some(old) = self.owner[i] {
            let (k, v) = self.cell_value(i);
            self.have[old][k] -= v;
        }
        self.owner[i] = Some(p);
        let (k, v) = self.cell_value(i);
        self.have[p][k] += v;
    }

    fn cells_of(&self, p: usize) -> CellSet {
        let mut s = self.device.empty_set();
        for (i, o) in self.owner.iter().enumerate() {
            if *o == Some(p) {
                s.insert_index(i);
            }
        }
        s
    }

    /// Next cell for `p`: the first step on a shortest unclaimed path to the
    /// nearest cell of its most under-supplied kind, falling back through the
    /// other kinds. Ties go to the lowest column, then row.
    fn next_step(&self, p: usize) -> Option<usize> {
        let region = self.device.region();
        let n = self.owner.len();
        let mut dist = vec![u32::MAX; n];
        let mut first = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for (i, o) in self.owner.iter().enumerate() {
            if *o == Some(p) {
                dist[i] = 0;
                queue.push_back(i);
            }
        }
        let mut found: Vec<(u32, usize, usize)> = Vec::new(); // (dist, kind, cell)
        while let Some(i) = queue.pop_front() {
            let c = region.cell_at(i);
            let mut nbs: Vec<usize> = region
                .grid_neighbours(c)
                .map(|nb| region.index_of(nb))
                .filter(|&j| region.contains_index(j) && self.owner[j].is_none() && dist[j] == u32::MAX)
                .collect();
            nbs.sort_unstable();
            for j in nbs {
                dist[j] = dist[i] + 1;
                first[j] = if dist[i] == 0 { j } else { first[i] };
                found.push((dist[j], self.cell_value(j).0, j));
                queue.push_back(j);
            }
        }
        if found.is_empty() {
            return None;
        }
        let mut kinds: Vec<usize> = self.present().collect();
        kinds.sort_by(|&a, &b| self.share(p, a).total_cmp(&self.share(p, b)).then(a.cmp(&b)));
        for k in kinds {
            if let Some(&(_, _, j)) = found.iter().filter(|f| f.1 == k).min_by_key(|f| (f.0, f.2)) {
                return Some(first[j]);
            }
        }
        found.iter().min_by_key(|f| (f.0, f.2)).map(|f| first[f.2])
    }
}

fn kind_index(k: ResourceKind) -> usize {
    match k {
        ResourceKind::LogicCell => 0,
        ResourceKind::Bram => 1,
        ResourceKind::Dsp => 2,
    }
}

/// Restarts tried by [`naive_layout`] besides the greedy construction.
pub const NAIVE_RESTARTS: usize = 32;
const ANNEAL_STEPS: usize = 40_000;
const NAIVE_SEED: u64 = 0x006e_6169_7665;

/// Divides the region into one roughly equally resourced partition per
/// interface.
///
/// The first start grows partitions from their termination cells, the
/// poorest partition (lowest summed share of the per-interface mean)
/// claiming a cell each step. Further starts are full-coverage random
/// growths from a fixed seed. Each start is annealed, then polished, over
/// single-cell transfers between neighbouring partitions, minimising the
/// squared relative deviation from the mean; the start with the smallest
/// deviation wins (lowest start on ties). The result must be within 15% of
/// the mean for every kind, or within one cell's capacity where the grid is
/// coarser than that.
pub fn naive_layout(device: &Device) -> Result<Layout> {
    let n = device.interfaces().len();
    if n == 0 {
        return Err(Error::Config("device has no interfaces".into()));
    }
    let total = device.capacity_unchecked(device.region());
    let mut mean = [0.0; 3];
    let mut tolerance = [0.0; 3];
    for k in ResourceKind::ALL {
        let m = total.get(k) as f64 / n as f64;
        let granule = device.columns().iter().filter(|c| c.kind == k).map(|c| c.capacity).max().unwrap_or(0);
        mean[kind_index(k)] = m;
        tolerance[kind_index(k)] = (0.15 * m).max(granule as f64);
    }
    let fresh = || {
        let mut split = Split {
            device,
            owner: vec![None; device.region().capacity()],
            have: vec![[0.0; 3]; n],
            mean,
            tolerance,
        };
        for iface in device.interfaces() {
            for i in iface.termination.indices() {
                split.claim(iface.id, i);
            }
        }
        split
    };

    let opts = RandomLayoutOptions { min_fill: 1.0, prune_termination_only: false, ..Default::default() };
    let polished: Vec<Option<(f64, Vec<Option<usize>>)>> = (0..=NAIVE_RESTARTS)
        .into_par_iter()
        .map(|start| {
            let mut split = fresh();
            if start == 0 {
                split.grow_greedy();
            } else {
                let layout = random_layout(device, &mut item_rng(NAIVE_SEED, stream::LAYOUTS, start as u64), &opts)?;
                for part in &layout.partitions {
                    for i in part.cells.indices() {
                        split.claim(part.interface, i);
                    }
                }
            }
            split.anneal(&mut item_rng(NAIVE_SEED, stream::LAYOUTS, (NAIVE_RESTARTS + 1 + start) as u64));
            split.polish();
            Some((split.objective(), split.owner))
        })
        .collect();
    let (_, owner) = polished
        .into_iter()
        .flatten()
        .reduce(|best, x| if x.0 + 1e-12 < best.0 { x } else { best })
        .expect("greedy start always completes");

    let mut split = fresh();
    for (i, o) in owner.iter().enumerate() {
        if let Some(p) = *o {
            split.claim(p, i);
        }
    }
    let layout = Layout {
        partitions: (0..n).map(|p| Footprint::new(p, split.cells_of(p))).collect(),
    };
    if let Err(defect) = layout.check(device, false) {
        return Err(Error::Config(format!("naive layout construction failed: {defect:?}")));
    }
    for (p, have) in layout.capacities(device).iter().enumerate() {
        for kind in ResourceKind::ALL {
            let m = mean[kind_index(kind)];
            if m > 0.0 && (have.get(kind) as f64 - m).abs() > tolerance[kind_index(kind)] {
                return Err(Error::NaiveLayoutInfeasible { partition: p, kind, have: have.get(kind) as u64, mean: m });
            }
        }
    }
    Ok(layout)
}

impl Split<'_> {
    fn objective(&self) -> f64 {
        self.have.iter().map(|h| self.objective_term(h)).sum()
    }

    fn grow_greedy(&mut self) {
        let n = self.have.len();
        loop {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| self.score(a).total_cmp(&self.score(b)).then(a.cmp(&b)));
            let Some((p, cell)) = order.iter().find_map(|&p| self.next_step(p).map(|c| (p, c))) else {
                break;
            };
            self.claim(p, cell);
        }
    }

    /// Movable cells: owned, outside every termination.
    fn movable(&self) -> Vec<usize> {
        let termination = self.device.all_termination();
        self.device
            .region()
            .indices()
            .filter(|&i| self.owner[i].is_some() && !termination.contains_index(i))
            .collect()
    }

    /// Simulated annealing over single-cell transfers, keeping the best
    /// state seen.
    fn anneal(&mut self, rng: &mut impl rand::Rng) {
        let region = self.device.region().clone();
        let movable = self.movable();
        if movable.is_empty() {
            return;
        }
        let mut current = self.objective();
        let mut best = (current, self.owner.clone());
        let (t0, t1) = (1.0f64, 1e-4f64);
        for step in 0..ANNEAL_STEPS {
            let t = t0 * (t1 / t0).powf(step as f64 / ANNEAL_STEPS as f64);
            let i = movable[rng.gen_range(0..movable.len())];
            let p = self.owner[i].expect("movable cells are owned");
            let nbs: Vec<usize> = region
                .grid_neighbours(region.cell_at(i))
                .filter_map(|nb| self.owner[region.index_of(nb)])
                .filter(|&q| q != p)
                .collect();
            if nbs.is_empty() {
                continue;
            }
            let q = nbs[rng.gen_range(0..nbs.len())];
            let (k, v) = self.cell_value(i);
            let mut hp = self.have[p];
            let mut hq = self.have[q];
            hp[k] -= v;
            hq[k] += v;
            let delta = self.objective_term(&hp) + self.objective_term(&hq)
                - self.objective_term(&self.have[p])
                - self.objective_term(&self.have[q]);
            if delta > 0.0 && rng.gen::<f64>() >= (-delta / t).exp() {
                continue;
            }
            let mut rest = self.cells_of(p);
            rest.remove_index(i);
            if !rest.is_connected() {
                continue;
            }
            self.claim(q, i);
            current += delta;
            if current + 1e-12 < best.0 {
                best = (current, self.owner.clone());
            }
        }
        let owner = best.1;
        for (i, o) in owner.into_iter().enumerate() {
            if let Some(p) = o {
                if self.owner[i] != Some(p) {
                    self.claim(p, i);
                }
            }
        }
    }

    fn polish(&mut self) {
        let region = self.device.region().clone();
        let termination = self.device.all_termination();
        for _pass in 0..500 {
            let mut improved = false;
            for i in region.indices() {
                let Some(p) = self.owner[i] else { continue };
                if termination.contains_index(i) {
                    continue;
                }
                let c = region.cell_at(i);
                let mut targets: Vec<usize> = region
                    .grid_neighbours(c)
                    .filter_map(|nb| self.owner[region.index_of(nb)])
                    .filter(|&q| q != p)
                    .collect();
                targets.sort_unstable();
                targets.dedup();
                let (k, v) = self.cell_value(i);
                for q in targets {
                    let before = self.objective_term(&self.have[p]) + self.objective_term(&self.have[q]);
                    let mut hp = self.have[p];
                    let mut hq = self.have[q];
                    hp[k] -= v;
                    hq[k] += v;
                    let after = self.objective_term(&hp) + self.objective_term(&hq);
                    if after + 1e-12 < before {
                        let mut rest = self.cells_of(p);
                        rest.remove_index(i);
                        if rest.is_connected() {
                            self.claim(q, i);
                            improved = true;
                            break;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random layouts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RandomLayoutOptions {
    /// Each layout claims a uniformly drawn fraction in `[min_fill, 1]` of
    /// the reachable cells; the rest is left over.
    pub min_fill: f64,
    /// Floor for the per-partition growth weights drawn from `[0, 1)`.
    pub min_weight: f64,
    /// Attempts allowed per requested layout before giving up.
    pub attempts_per_layout: usize,
    /// Prune layouts with a partition holding only its termination cells.
    pub prune_termination_only: bool,
}

impl Default for RandomLayoutOptions {
    fn default() -> Self {
        RandomLayoutOptions { min_fill: 0.9, min_weight: 0.05, attempts_per_layout: 20, prune_termination_only: true }
    }
}

/// Grows one random layout. Partitions start from their termination cells
/// and claim unclaimed neighbouring cells round-robin, each step picking a
/// partition with probability proportional to its growth weight.
pub fn random_layout(device: &Device, rng: &mut impl rand::Rng, opts: &RandomLayoutOptions) -> Option<Layout> {
    let n = device.interfaces().len();
    let region = device.region();
    let mut owner: Vec<Option<usize>> = vec![None; region.capacity()];
    let mut parts: Vec<CellSet> = Vec::with_capacity(n);
    for iface in device.interfaces() {
        for i in iface.termination.indices() {
            owner[i] = Some(iface.id);
        }
        parts.push(iface.termination.clone());
    }
    let weights: Vec<f64> = (0..n).map(|_| opts.min_weight + (1.0 - opts.min_weight) * rng.gen::<f64>()).collect();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new(); n];
    let push_neighbours = |frontier: &mut Vec<usize>, owner: &[Option<usize>], i: usize| {
        for nb in region.grid_neighbours(region.cell_at(i)) {
            let j = region.index_of(nb);
            if region.contains_index(j) && owner[j].is_none() {
                frontier.push(j);
            }
        }
    };
    for (p, cells) in parts.iter().enumerate() {
        for i in cells.indices() {
            push_neighbours(&mut frontier[p], &owner, i);
        }
    }
    let free = region.len() - owner.iter().filter(|o| o.is_some()).count();
    let fill = opts.min_fill + (1.0 - opts.min_fill) * rng.gen::<f64>();
    let target = (fill * free as f64).ceil() as usize;

    let mut claimed = 0;
    while claimed < target {
        let total: f64 = (0..n).filter(|&p| !frontier[p].is_empty()).map(|p| weights[p]).sum();
        if total <= 0.0 {
            break;
        }
        let mut x = rng.gen::<f64>() * total;
        let mut p = usize::MAX;
        for q in (0..n).filter(|&q| !frontier[q].is_empty()) {
            p = q;
            if x < weights[q] {
                break;
            }
            x -= weights[q];
        }
        let k = rng.gen_range(0..frontier[p].len());
        let i = frontier[p].swap_remove(k);
        if owner[i].is_some() {
            continue;
        }
        owner[i] = Some(p);
        parts[p].insert_index(i);
        claimed += 1;
        push_neighbours(&mut frontier[p], &owner, i);
    }

    let layout = Layout {
        partitions: parts.into_iter().enumerate().map(|(p, cells)| Footprint::new(p, cells)).collect(),
    };
    layout.check(device, opts.prune_termination_only).ok()?;
    Some(layout)
}

/// `n` distinct random layouts, deterministic in `seed`. Candidate
/// attempts are generated in parallel from per-attempt streams and accepted
/// in attempt order.
pub fn random_layouts(device: &Device, n: usize, seed: u64, opts: &RandomLayoutOptions) -> Result<Vec<Layout>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if device.interfaces().is_empty() {
        return Err(Error::Config("device has no interfaces".into()));
    }
    let budget = n.saturating_mul(opts.attempts_per_layout.max(1));
    let mut seen: HashSet<Layout> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut next = 0usize;
    let batch = 256;
    while out.len() < n && next < budget {
        let end = (next + batch).min(budget);
        let candidates: Vec<Option<Layout>> = (next..end)
            .into_par_iter()
            .map(|a| random_layout(device, &mut item_rng(seed, stream::LAYOUTS, a as u64), opts))
            .collect();
        for l in candidates.into_iter().flatten() {
            if out.len() == n {
                break;
            }
            if seen.insert(l.clone()) {
                out.push(l);
            }
        }
        next = end;
    }
    if out.len() < n {
        return Err(Error::LayoutGeneration { requested: n, produced: out.len() });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Pools and best-effort selection
// ---------------------------------------------------------------------------

/// Candidate layouts for standard DPR. Index 0 is always the naive layout,
/// so best-effort selection can never do worse than naive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayoutPool {
    layouts: Vec<Layout>,
}

impl LayoutPool {
    pub const NAIVE: usize = 0;

    pub fn new(naive: Layout, random: Vec<Layout>) -> Self {
        let mut layouts = Vec::with_capacity(random.len() + 1);
        layouts.push(naive);
        layouts.extend(random);
        LayoutPool { layouts }
    }

    pub fn build(device: &Device, n_random: usize, seed: u64, opts: &RandomLayoutOptions) -> Result<Self> {
        Ok(LayoutPool::new(naive_layout(device)?, random_layouts(device, n_random, seed, opts)?))
    }

    pub fn layouts(&self) -> &[Layout] {
        &self.layouts
    }

    pub fn naive(&self) -> &Layout {
        &self.layouts[Self::NAIVE]
    }

    pub fn len(&self) -> usize {
        self.layouts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layouts.is_empty()
    }

    pub fn to_file(&self, device: &Device) -> PoolFile {
        PoolFile {
            device: device.name().to_string(),
            cols: device.cols(),
            rows: device.rows(),
            layouts: self.layouts.iter().map(Layout::to_records).collect(),
        }
    }

    pub fn from_file(device: &Device, file: &PoolFile) -> Result<Self> {
        if file.cols != device.cols() || file.rows != device.rows() {
            return Err(Error::GeometryMismatch);
        }
        if file.layouts.is_empty() {
            return Err(Error::Config("layout pool is empty".into()));
        }
        let layouts = file
            .layouts
            .iter()
            .map(|recs| Layout::from_records(device, recs))
            .collect::<Result<Vec<_>>>()?;
        for (i, l) in layouts.iter().enumerate() {
            l.check(device, false)
                .map_err(|d| Error::Config(format!("pool layout {i} violates layout invariants: {d:?}")))?;
        }
        Ok(LayoutPool { layouts })
    }

    /// Short content hash identifying the pool in run manifests.
    pub fn id(&self, device: &Device) -> String {
        let json = serde_json::to_vec(&self.to_file(device)).expect("pool serializes");
        let digest = Sha256::digest(&json);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PoolFile {
    pub device: String,
    pub cols: u16,
    pub rows: u16,
    pub layouts: Vec<Vec<FootprintRecord>>,
}

/// The layout accepting the largest fraction of `combos`, lowest index
/// first on ties. `feasible(l, c)` decides combination `c` under layout `l`.
pub fn best_effort_layout<F>(n_layouts: usize, combos: &[Combination], feasible: F) -> (usize, f64)
where
    F: Fn(usize, &Combination) -> bool + Sync,
{
    assert!(n_layouts > 0 && !combos.is_empty());
    let counts: Vec<usize> = (0..n_layouts)
        .into_par_iter()
        .map(|l| combos.iter().filter(|c| feasible(l, c)).count())
        .collect();
    let (best, &count) = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("non-empty");
    (best, count as f64 / combos.len() as f64)
}
