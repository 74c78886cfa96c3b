//! AFU designs, the synthesis fit rule, and bitstream version databases.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellset::CellSet;
use crate::error::{Error, Result};
use crate::fabric::{Cell, Device, Interface, InterfaceKind, ResourceKind};
use crate::footprint::{bitstream_bytes, validate_footprint, Footprint, FootprintRecord, ResourceVector, SizeModel, Validity};
use crate::layouts::Layout;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AfuSpec {
    pub id: String,
    pub demand: ResourceVector,
    pub interface_kind: InterfaceKind,
}

impl AfuSpec {
    /// The zero-demand placeholder standing for an empty slot.
    pub fn is_absent(&self) -> bool {
        self.demand.is_zero()
    }
}

/// Fraction of a footprint's resources an AFU may use before routing
/// fails. Stored in parts per million so the fit rule is exact integer
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RoutabilityCap {
    ppm: u64,
}

impl RoutabilityCap {
    pub const DEFAULT: RoutabilityCap = RoutabilityCap { ppm: 700_000 };

    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!("routability cap {fraction} not in (0, 1]")));
        }
        Ok(RoutabilityCap { ppm: (fraction * 1e6).round() as u64 })
    }

    pub fn fraction(self) -> f64 {
        self.ppm as f64 / 1e6
    }

    /// `demand ≤ cap × capacity`.
    #[inline]
    pub fn admits(self, demand: u32, capacity: u32) -> bool {
        demand as u64 * 1_000_000 <= self.ppm * capacity as u64
    }

    /// First kind for which `demand` does not fit in `cap × capacity`.
    pub fn shortfall(self, demand: &ResourceVector, capacity: &ResourceVector) -> Option<ResourceKind> {
        ResourceKind::ALL
            .into_iter()
            .find(|&k| !self.admits(demand.get(k), capacity.get(k)))
    }
}

impl Default for RoutabilityCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// One compiled configuration: an AFU bound to an interface and a footprint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitstreamVersion {
    /// Index into the library the version was built against.
    pub afu: usize,
    pub footprint: Footprint,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthesisError {
    #[error("footprint is invalid: {0:?}")]
    InvalidFootprint(Validity),
    #[error("AFU needs a {afu:?} interface, interface {interface} is {provides:?}")]
    IncompatibleInterface {
        interface: usize,
        afu: InterfaceKind,
        provides: InterfaceKind,
    },
    #[error("infeasible: {kind} demand exceeds routable capacity")]
    Infeasible { kind: ResourceKind },
}

/// Everything the fit rule and size accounting depend on.
#[derive(Debug, Clone, Copy)]
pub struct Synthesizer<'d> {
    pub device: &'d Device,
    pub cap: RoutabilityCap,
    pub sizes: SizeModel,
}

impl<'d> Synthesizer<'d> {
    pub fn new(device: &'d Device, cap: RoutabilityCap, sizes: SizeModel) -> Self {
        Synthesizer { device, cap, sizes }
    }

    /// Capacity-only part of the fit rule.
    pub fn fits(&self, demand: &ResourceVector, cells: &CellSet) -> bool {
        let have = self.device.capacity_unchecked(cells);
        self.cap.shortfall(demand, &have).is_none()
    }

    pub fn synthesize(&self, afu_index: usize, afu: &AfuSpec, fp: &Footprint) -> Result<BitstreamVersion, SynthesisError> {
        let validity = validate_footprint(self.device, fp);
        if !validity.is_valid() {
            return Err(SynthesisError::InvalidFootprint(validity));
        }
        let iface = &self.device.interfaces()[fp.interface];
        if !iface.kind.accepts(afu.interface_kind) {
            return Err(SynthesisError::IncompatibleInterface {
                interface: iface.id,
                afu: afu.interface_kind,
                provides: iface.kind,
            });
        }
        let have = self.device.capacity_unchecked(&fp.cells);
        if let Some(kind) = self.cap.shortfall(&afu.demand, &have) {
            return Err(SynthesisError::Infeasible { kind });
        }
        Ok(BitstreamVersion {
            afu: afu_index,
            footprint: fp.clone(),
            bytes: bitstream_bytes(self.device, &fp.cells, &self.sizes),
        })
    }
}

/// Synthesizes `afu` into `fp`: feasible iff the footprint is valid, the
/// interface kinds match, and the demand fits within `cap` of the
/// footprint's capacity for every kind.
pub fn synthesize(
    device: &Device,
    afu_index: usize,
    afu: &AfuSpec,
    fp: &Footprint,
    cap: RoutabilityCap,
    sizes: &SizeModel,
) -> Result<BitstreamVersion, SynthesisError> {
    Synthesizer::new(device, cap, *sizes).synthesize(afu_index, afu, fp)
}

// ---------------------------------------------------------------------------
// Heuristic footprint generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GrowthOrder {
    Balanced,
    Tall,
    Wide,
}

/// Grows up to `k` small footprints around `interface`'s termination cells.
///
/// Each variant repeatedly claims the nearest cell supplying a still-short
/// resource kind, together with the path to it, until the fit rule holds.
/// Variants differ in tie-breaking: balanced (Manhattan distance from the
/// anchor), tall (stay near the anchor column), wide (stay near the anchor
/// row); variants beyond the first three start from progressively farther
/// providers. When a column is only partly consumed, interfaces on the
/// right half of the region take the bottom cells first and those on the
/// left half the top cells.
pub fn generate_footprints_heuristic(
    device: &Device,
    interface: &Interface,
    demand: &ResourceVector,
    k: usize,
    cap: RoutabilityCap,
) -> Vec<Footprint> {
    let foreign = {
        let mut s = device.all_termination();
        s.subtract(&interface.termination);
        s
    };
    let allowed = device.region().difference(&foreign);
    if !interface.termination.is_subset(&allowed) {
        return Vec::new();
    }
    // Everything reachable is the largest footprint we could ever build.
    let reach = reachable(&allowed, &interface.termination);
    if cap.shortfall(demand, &device.capacity_unchecked(&reach)).is_some() {
        return Vec::new();
    }

    let anchor = interface.termination.iter().next().expect("non-empty termination");
    let region_cols: Vec<u16> = device.region().iter().map(|c| c.col).collect();
    let mid = (region_cols.iter().min().unwrap() + region_cols.iter().max().unwrap()) as f64 / 2.0;
    let from_right = anchor.col as f64 > mid;

    let mut out: Vec<Footprint> = Vec::new();
    let orders = [GrowthOrder::Balanced, GrowthOrder::Tall, GrowthOrder::Wide];
    // A few extra attempts so duplicates do not starve the result.
    for v in 0..k.saturating_mul(3).max(3) {
        if out.len() >= k {
            break;
        }
        let order = orders[v % 3];
        let skip = v / 3;
        if let Some(cells) = grow(device, &allowed, interface, demand, cap, anchor, from_right, order, skip) {
            let fp = Footprint::new(interface.id, cells);
            if !out.contains(&fp) {
                out.push(fp);
            }
        }
    }
    out
}

fn reachable(allowed: &CellSet, seeds: &CellSet) -> CellSet {
    let mut seen = seeds.clone();
    let mut stack: Vec<Cell> = seeds.iter().collect();
    while let Some(c) = stack.pop() {
        for n in allowed.grid_neighbours(c) {
            if allowed.contains(n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen
}

#[allow(clippy::too_many_arguments)]
fn grow(
    device: &Device,
    allowed: &CellSet,
    interface: &Interface,
    demand: &ResourceVector,
    cap: RoutabilityCap,
    anchor: Cell,
    from_right: bool,
    order: GrowthOrder,
    skip: usize,
) -> Option<CellSet> {
    let rows = device.rows();
    let mut fp = interface.termination.clone();
    let mut first = true;
    loop {
        let have = device.capacity_unchecked(&fp);
        let short: Vec<ResourceKind> = ResourceKind::ALL
            .into_iter()
            .filter(|&k| !cap.admits(demand.get(k), have.get(k)))
            .collect();
        if short.is_empty() {
            return Some(fp);
        }
        // Multi-source BFS from the current footprint.
        let n = fp.capacity();
        let mut dist = vec![u32::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for i in fp.indices() {
            dist[i] = 0;
            queue.push_back(i);
        }
        let mut targets: Vec<(u32, usize)> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let c = fp.cell_at(i);
            for nb in allowed.grid_neighbours(c) {
                let j = fp.index_of(nb);
                if allowed.contains_index(j) && dist[j] == u32::MAX {
                    dist[j] = dist[i] + 1;
                    parent[j] = i;
                    queue.push_back(j);
                    if short.contains(&device.kind_at(nb)) {
                        targets.push((dist[j], j));
                    }
                }
            }
        }
        if targets.is_empty() {
            return None;
        }
        let row_key = |r: u16| if from_right { r } else { rows - 1 - r };
        let key = |&(d, j): &(u32, usize)| {
            let c = fp.cell_at(j);
            let dc = c.col.abs_diff(anchor.col) as u32;
            let dr = c.row.abs_diff(anchor.row) as u32;
            match order {
                GrowthOrder::Balanced => (d, dc + dr, row_key(c.row) as u32, c.col as u32),
                GrowthOrder::Tall => (dc, d, row_key(c.row) as u32, dr),
                GrowthOrder::Wide => (dr, d, dc, row_key(c.row) as u32),
            }
        };
        targets.sort_by_key(key);
        let pick = if first { skip.min(targets.len() - 1) } else { 0 };
        first = false;
        let mut j = targets[pick].1;
        while !fp.contains_index(j) {
            fp.insert_index(j);
            j = parent[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Bitstream database
// ---------------------------------------------------------------------------

/// All compiled versions for a library, indexed by `(afu, interface)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitstreamDb {
    library: Vec<AfuSpec>,
    versions: Vec<BitstreamVersion>,
    by_slot: BTreeMap<(usize, usize), Vec<usize>>,
}

impl BitstreamDb {
    pub fn new(library: Vec<AfuSpec>) -> Self {
        BitstreamDb { library, versions: Vec::new(), by_slot: BTreeMap::new() }
    }

    /// Builds a database from versions, dropping duplicate `(afu, footprint)`
    /// pairs and ordering canonically so the result is independent of input
    /// order.
    pub fn from_versions(library: Vec<AfuSpec>, mut versions: Vec<BitstreamVersion>) -> Self {
        versions.sort_by(|a, b| {
            (a.afu, a.footprint.interface, &a.footprint.cells).cmp(&(b.afu, b.footprint.interface, &b.footprint.cells))
        });
        versions.dedup_by(|a, b| a.afu == b.afu && a.footprint == b.footprint);
        let mut by_slot: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (i, v) in versions.iter().enumerate() {
            by_slot.entry((v.afu, v.footprint.interface)).or_default().push(i);
        }
        BitstreamDb { library, versions, by_slot }
    }

    pub fn library(&self) -> &[AfuSpec] {
        &self.library
    }

    pub fn versions(&self) -> &[BitstreamVersion] {
        &self.versions
    }

    pub fn len(&self) -> usize {
        self.versions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.versions.is_empty()
    }

    /// Versions of `afu` attached to `interface`.
    pub fn versions_for(&self, afu: usize, interface: usize) -> impl Iterator<Item = &BitstreamVersion> {
        self.by_slot
            .get(&(afu, interface))
            .into_iter()
            .flatten()
            .map(|&i| &self.versions[i])
    }

    /// Indices into [`versions`](Self::versions) of `afu` on `interface`.
    pub fn version_ids_for(&self, afu: usize, interface: usize) -> &[usize] {
        self.by_slot.get(&(afu, interface)).map_or(&[], Vec::as_slice)
    }

    /// Every version of `afu`, in canonical order.
    pub fn versions_of(&self, afu: usize) -> impl Iterator<Item = &BitstreamVersion> {
        self.by_slot
            .range((afu, 0)..(afu + 1, 0))
            .flat_map(|(_, ids)| ids.iter().map(|&i| &self.versions[i]))
    }

    /// Adds a version unless the same `(afu, footprint)` is present.
    pub fn insert(&mut self, v: BitstreamVersion) -> bool {
        if self.versions_for(v.afu, v.footprint.interface).any(|o| o.footprint == v.footprint) {
            return false;
        }
        let mut all = std::mem::take(&mut self.versions);
        all.push(v);
        *self = BitstreamDb::from_versions(std::mem::take(&mut self.library), all);
        true
    }

    /// Keeps at most `max` versions per `(afu, interface)`, preferring the
    /// smallest bitstreams.
    pub fn cap_per_slot(&self, max: usize) -> BitstreamDb {
        let mut keep = Vec::new();
        for ids in self.by_slot.values() {
            let mut vs: Vec<&BitstreamVersion> = ids.iter().map(|&i| &self.versions[i]).collect();
            vs.sort_by_key(|v| v.bytes);
            keep.extend(vs.into_iter().take(max).cloned());
        }
        BitstreamDb::from_versions(self.library.clone(), keep)
    }

    pub fn to_file(&self, device: &Device) -> DbFile {
        DbFile {
            device: device.name().to_string(),
            cols: device.cols(),
            rows: device.rows(),
            afus: self.library.clone(),
            versions: self
                .versions
                .iter()
                .map(|v| VersionRecord {
                    afu: self.library[v.afu].id.clone(),
                    footprint: v.footprint.to_record(),
                    bytes: v.bytes,
                })
                .collect(),
        }
    }

    pub fn from_file(device: &Device, file: &DbFile) -> Result<Self> {
        if file.cols != device.cols() || file.rows != device.rows() {
            return Err(Error::GeometryMismatch);
        }
        let ids: HashMap<&str, usize> = file.afus.iter().enumerate().map(|(i, a)| (a.id.as_str(), i)).collect();
        let mut versions = Vec::with_capacity(file.versions.len());
        for r in &file.versions {
            let afu = *ids
                .get(r.afu.as_str())
                .ok_or_else(|| Error::Config(format!("version references unknown AFU {}", r.afu)))?;
            versions.push(BitstreamVersion { afu, footprint: Footprint::from_record(device, &r.footprint)?, bytes: r.bytes });
        }
        Ok(BitstreamDb::from_versions(file.afus.clone(), versions))
    }

    /// `afuId,interfaceId,cellCount,bytes` per version.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["afuId", "interfaceId", "cellCount", "bytes"])?;
        for v in &self.versions {
            w.write_record([
                self.library[v.afu].id.clone(),
                v.footprint.interface.to_string(),
                v.footprint.cells.len().to_string(),
                v.bytes.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// JSON form of a [`BitstreamDb`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DbFile {
    pub device: String,
    pub cols: u16,
    pub rows: u16,
    pub afus: Vec<AfuSpec>,
    pub versions: Vec<VersionRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VersionRecord {
    pub afu: String,
    #[serde(flatten)]
    pub footprint: FootprintRecord,
    pub bytes: u64,
}

/// Synthesizes every compatible, non-absent AFU into every partition of
/// every layout and keeps the feasible results as the amorphous version
/// database. Identical `(afu, footprint)` pairs collapse to one version.
pub fn build_db_from_layouts(synth: &Synthesizer<'_>, layouts: &[Layout], library: &[AfuSpec]) -> BitstreamDb {
    let versions: Vec<BitstreamVersion> = layouts
        .par_iter()
        .flat_map_iter(|layout| {
            let mut local = Vec::new();
            for part in &layout.partitions {
                for (ai, afu) in library.iter().enumerate() {
                    if afu.is_absent() {
                        continue;
                    }
                    if let Ok(v) = synth.synthesize(ai, afu, part) {
                        local.push(v);
                    }
                }
            }
            local
        })
        .collect();
    BitstreamDb::from_versions(library.to_vec(), versions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::layouts::naive_layout;

    fn bram_afu(n: u32) -> AfuSpec {
        AfuSpec {
            id: format!("bram-{n:02}"),
            demand: ResourceVector::new(if n == 0 { 0 } else { 500 }, n, 0),
            interface_kind: InterfaceKind::Memory,
        }
    }

    fn whole_region(device: &Device, iface: usize) -> Footprint {
        // The whole region minus foreign termination cells, restricted to
        // the component holding the interface.
        let mut cells = device.region().clone();
        for i in device.interfaces() {
            if i.id != iface {
                cells.subtract(&i.termination);
            }
        }
        Footprint::new(iface, reachable(&cells, &device.interfaces()[iface].termination))
    }

    #[test]
    fn cap_arithmetic_is_exact() {
        let cap = RoutabilityCap::new(0.7).unwrap();
        assert!(cap.admits(7, 10));
        assert!(!cap.admits(8, 10));
        assert!(cap.admits(14, 20));
        assert!(cap.admits(56, 80));
        assert!(!cap.admits(57, 80));
        assert!(RoutabilityCap::new(0.0).is_err());
        assert!(RoutabilityCap::new(1.5).is_err());
    }

    #[test]
    fn forty_bram_fits_near_full_region() {
        let d = bundled::workload_bram();
        let fp = whole_region(&d, 0);
        let have = d.capacity_unchecked(&fp.cells);
        assert_eq!(have.bram, 80);
        let v = synthesize(&d, 0, &bram_afu(40), &fp, RoutabilityCap::DEFAULT, &SizeModel::default()).unwrap();
        assert_eq!(v.bytes, bitstream_bytes(&d, &fp.cells, &SizeModel::default()));
    }

    #[test]
    fn zero_afu_fits_minimal_footprint() {
        let d = bundled::workload_bram();
        let iface = &d.interfaces()[2];
        let fp = Footprint::new(2, iface.termination.clone());
        assert!(synthesize(&d, 0, &bram_afu(0), &fp, RoutabilityCap::DEFAULT, &SizeModel::default()).is_ok());
        // A real AFU does not fit a single logic cell.
        assert_eq!(
            synthesize(&d, 1, &bram_afu(5), &fp, RoutabilityCap::DEFAULT, &SizeModel::default()),
            Err(SynthesisError::Infeasible { kind: ResourceKind::LogicCell })
        );
    }

    #[test]
    fn incompatible_interface_is_rejected() {
        let d = bundled::workload_bram();
        let fp = whole_region(&d, 0);
        let mut afu = bram_afu(5);
        afu.interface_kind = InterfaceKind::Streaming;
        assert!(matches!(
            synthesize(&d, 0, &afu, &fp, RoutabilityCap::DEFAULT, &SizeModel::default()),
            Err(SynthesisError::IncompatibleInterface { .. })
        ));
    }

    #[test]
    fn heuristic_zero_demand_is_termination_only() {
        let d = bundled::workload_bram();
        let iface = &d.interfaces()[1];
        let fps = generate_footprints_heuristic(&d, iface, &ResourceVector::ZERO, 4, RoutabilityCap::DEFAULT);
        assert_eq!(fps, vec![Footprint::new(1, iface.termination.clone())]);
    }

    #[test]
    fn heuristic_unsatisfiable_is_empty() {
        let d = bundled::workload_bram();
        let demand = ResourceVector::new(500, 81, 0);
        assert!(generate_footprints_heuristic(&d, &d.interfaces()[0], &demand, 3, RoutabilityCap::DEFAULT).is_empty());
    }

    #[test]
    fn heuristic_footprints_are_valid_and_fit() {
        let d = bundled::workload_bram();
        let afu = AfuSpec { id: "x".into(), demand: ResourceVector::new(1000, 10, 0), interface_kind: InterfaceKind::Memory };
        for iface in d.interfaces() {
            let fps = generate_footprints_heuristic(&d, iface, &afu.demand, 5, RoutabilityCap::DEFAULT);
            assert!(!fps.is_empty());
            for fp in fps {
                assert_eq!(validate_footprint(&d, &fp), Validity::Valid);
                synthesize(&d, 0, &afu, &fp, RoutabilityCap::DEFAULT, &SizeModel::default()).unwrap();
            }
        }
    }

    #[test]
    fn db_from_single_layout_counts_feasible_pairs() {
        let d = bundled::workload_bram();
        let naive = naive_layout(&d).unwrap();
        let synth = Synthesizer::new(&d, RoutabilityCap::DEFAULT, SizeModel::default());
        let lib = vec![bram_afu(0), bram_afu(5)];
        let db = build_db_from_layouts(&synth, std::slice::from_ref(&naive), &lib);
        let expected = naive
            .partitions
            .iter()
            .filter(|p| synth.synthesize(1, &lib[1], p).is_ok())
            .count();
        assert_eq!(expected, 6);
        assert_eq!(db.len(), expected);
        assert!(build_db_from_layouts(&synth, &[], &lib).is_empty());
        // The same layout twice adds nothing.
        let twice = build_db_from_layouts(&synth, &[naive.clone(), naive], &lib);
        assert_eq!(twice, db);
    }

    #[test]
    fn db_file_round_trip() {
        let d = bundled::workload_bram();
        let naive = naive_layout(&d).unwrap();
        let synth = Synthesizer::new(&d, RoutabilityCap::DEFAULT, SizeModel::default());
        let db = build_db_from_layouts(&synth, &[naive], &[bram_afu(0), bram_afu(5), bram_afu(10)]);
        let json = serde_json::to_string(&db.to_file(&d)).unwrap();
        let back = BitstreamDb::from_file(&d, &serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, db);
        let mut csv = Vec::new();
        db.write_summary_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("afuId,interfaceId,cellCount,bytes\n"));
        assert_eq!(text.lines().count(), db.len() + 1);
    }
}
