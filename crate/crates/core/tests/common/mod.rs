#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::OnceLock;

use adpr_core::afu::{AfuSpec, BitstreamDb, RoutabilityCap, Synthesizer};
use adpr_core::bundled;
use adpr_core::packing::Combination;
use adpr_core::rng::item_rng;
use adpr_core::workloads::WorkloadFamily;
use adpr_core::{Cell, CellSet, Device, Footprint, ResourceKind, ResourceVector, SizeModel};
use rand::Rng;

pub fn devices() -> &'static [Device; 3] {
    static D: OnceLock<[Device; 3]> = OnceLock::new();
    D.get_or_init(|| WorkloadFamily::ALL.map(bundled::device))
}

pub fn family(i: usize) -> WorkloadFamily {
    WorkloadFamily::ALL[i % 3]
}

/// Grows a connected set from `start`, each step adding the frontier cell
/// picked by the next choice. `allowed` bounds the growth.
pub fn grow(device: &Device, start: Cell, choices: &[u32], allowed: impl Fn(Cell) -> bool) -> CellSet {
    let mut set: BTreeSet<Cell> = BTreeSet::from([start]);
    for &pick in choices {
        let frontier: Vec<Cell> = set
            .iter()
            .flat_map(|&c| neighbours(device, c))
            .filter(|c| !set.contains(c) && allowed(*c))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if frontier.is_empty() {
            break;
        }
        set.insert(frontier[pick as usize % frontier.len()]);
    }
    CellSet::from_cells(device.cols(), device.rows(), set)
}

/// A footprint grown from `interface`'s anchor that never touches another
/// interface's termination; valid by construction.
pub fn own_footprint(device: &Device, interface: usize, choices: &[u32]) -> Footprint {
    let iface = &device.interfaces()[interface];
    let foreign = device.all_termination().difference(&iface.termination);
    let start = iface.termination.iter().next().unwrap();
    let cells = grow(device, start, choices, |c| device.in_region(c) && !foreign.contains(c));
    Footprint::new(interface, cells)
}

pub fn region_cell(device: &Device, pick: u32) -> Cell {
    let cells: Vec<Cell> = device.region().iter().collect();
    cells[pick as usize % cells.len()]
}

pub fn any_cell(device: &Device, pick: u32) -> Cell {
    let n = device.cols() as u32 * device.rows() as u32;
    let i = pick % n;
    Cell::new((i / device.rows() as u32) as u16, (i % device.rows() as u32) as u16)
}

fn neighbours(device: &Device, c: Cell) -> Vec<Cell> {
    let mut v = Vec::with_capacity(4);
    if c.col > 0 {
        v.push(Cell::new(c.col - 1, c.row));
    }
    if c.col + 1 < device.cols() {
        v.push(Cell::new(c.col + 1, c.row));
    }
    if c.row > 0 {
        v.push(Cell::new(c.col, c.row - 1));
    }
    if c.row + 1 < device.rows() {
        v.push(Cell::new(c.col, c.row + 1));
    }
    v
}

pub fn as_hash(set: &CellSet) -> HashSet<Cell> {
    set.iter().collect()
}

pub fn connected(cells: &HashSet<Cell>, device: &Device) -> bool {
    let Some(&first) = cells.iter().next() else {
        return false;
    };
    let mut seen = HashSet::from([first]);
    let mut queue = VecDeque::from([first]);
    while let Some(c) = queue.pop_front() {
        for n in neighbours(device, c) {
            if cells.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == cells.len()
}

/// Capacity summed cell by cell from the column table.
pub fn capacity(device: &Device, cells: &HashSet<Cell>) -> ResourceVector {
    let mut v = ResourceVector::ZERO;
    for c in cells {
        let col = device.column(c.col);
        v.add_kind(col.kind, col.capacity);
    }
    v
}

pub fn bytes_per_cell(kind: ResourceKind) -> u64 {
    match kind {
        ResourceKind::LogicCell => 36 * 404,
        ResourceKind::Bram => 156 * 404,
        ResourceKind::Dsp => 28 * 404,
    }
}

pub const INSTANCES: u64 = 600;
pub const MAX_AFUS: usize = 3;
pub const MAX_VERSIONS: usize = 4;

pub struct Instance {
    pub family: usize,
    pub library: Vec<AfuSpec>,
    pub db: BitstreamDb,
    pub combo: Combination,
}

/// Up to three distinct AFUs with at most four random versions each, placed
/// into at most three of the six slots (repeats allowed).
pub fn instance(index: u64) -> Instance {
    let mut rng = item_rng(0x0AC1E, 9, index);
    let index = rng.gen_range(0..3);
    let d = &devices()[index];
    let kind = family(index).interface_kind();
    let synth = Synthesizer::new(d, RoutabilityCap::DEFAULT, SizeModel::default());
    let mut library = vec![AfuSpec { id: "zero".into(), demand: ResourceVector::ZERO, interface_kind: kind }];
    let n_afus = rng.gen_range(1..=MAX_AFUS);
    for a in 0..n_afus {
        let demand = ResourceVector::new(rng.gen_range(0..1500), rng.gen_range(0..25), rng.gen_range(0..25));
        library.push(AfuSpec { id: format!("afu-{a}"), demand, interface_kind: kind });
    }
    let mut versions = Vec::new();
    for afu in 1..=n_afus {
        let want = rng.gen_range(0..=MAX_VERSIONS);
        let mut got = 0;
        for _ in 0..40 {
            if got == want {
                break;
            }
            let interface = rng.gen_range(0..d.interfaces().len());
            let steps: Vec<u32> = (0..rng.gen_range(0..45)).map(|_| rng.gen()).collect();
            let fp = own_footprint(d, interface, &steps);
            if let Ok(v) = synth.synthesize(afu, &library[afu], &fp) {
                versions.push(v);
                got += 1;
            }
        }
    }
    let mut slots = vec![0; 6];
    for _ in 0..rng.gen_range(1..=MAX_AFUS) {
        let slot = rng.gen_range(0..6);
        slots[slot] = rng.gen_range(1..=n_afus);
    }
    Instance { family: index, db: BitstreamDb::from_versions(library.clone(), versions), library, combo: Combination::new(slots) }
}
