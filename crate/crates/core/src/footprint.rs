//! Footprints, their validity rules, and the bitstream size model.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::cellset::CellSet;
use crate::error::{Error, Result};
use crate::fabric::{Cell, Device, ResourceKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResourceVector {
    pub logic_cells: u32,
    pub bram: u32,
    pub dsp: u32,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector { logic_cells: 0, bram: 0, dsp: 0 };

    pub const fn new(logic_cells: u32, bram: u32, dsp: u32) -> Self {
        ResourceVector { logic_cells, bram, dsp }
    }

    pub fn get(&self, kind: ResourceKind) -> u32 {
        match kind {
            ResourceKind::LogicCell => self.logic_cells,
            ResourceKind::Bram => self.bram,
            ResourceKind::Dsp => self.dsp,
        }
    }

    pub fn add_kind(&mut self, kind: ResourceKind, n: u32) {
        match kind {
            ResourceKind::LogicCell => self.logic_cells += n,
            ResourceKind::Bram => self.bram += n,
            ResourceKind::Dsp => self.dsp += n,
        }
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// Componentwise `self ≤ other`.
    pub fn fits_within(&self, other: &ResourceVector) -> bool {
        ResourceKind::ALL.iter().all(|&k| self.get(k) <= other.get(k))
    }
}

impl Add for ResourceVector {
    type Output = ResourceVector;
    fn add(self, o: ResourceVector) -> ResourceVector {
        ResourceVector::new(self.logic_cells + o.logic_cells, self.bram + o.bram, self.dsp + o.dsp)
    }
}

impl AddAssign for ResourceVector {
    fn add_assign(&mut self, o: ResourceVector) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ResourceVector {
    fn sum<I: Iterator<Item = ResourceVector>>(iter: I) -> Self {
        iter.fold(ResourceVector::ZERO, Add::add)
    }
}

impl fmt::Display for ResourceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} LC, {} BRAM, {} DSP)", self.logic_cells, self.bram, self.dsp)
    }
}

/// The cells an AFU's bitstream occupies, bound to one interface.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Footprint {
    pub interface: usize,
    pub cells: CellSet,
}

impl Footprint {
    pub fn new(interface: usize, cells: CellSet) -> Self {
        Footprint { interface, cells }
    }

    pub fn to_record(&self) -> FootprintRecord {
        FootprintRecord { interface_id: self.interface, cells: self.cells.to_pairs() }
    }

    pub fn from_record(device: &Device, rec: &FootprintRecord) -> Result<Self> {
        let cells = device.cell_set(rec.cells.iter().copied().map(Cell::from))?;
        Ok(Footprint { interface: rec.interface_id, cells })
    }
}

/// Serialized footprint: cells in canonical col-major-then-row order, so
/// equal footprints serialize byte-for-byte identically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FootprintRecord {
    pub interface_id: usize,
    pub cells: Vec<[u16; 2]>,
}

/// Outcome of checking a footprint against the device's rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    UnknownInterface,
    Disconnected,
    MissingOwnTermination,
    EnclosesForeignTermination { interface: usize },
    EscapesRegion { cell: Cell },
}

impl Validity {
    pub fn is_valid(self) -> bool {
        self == Validity::Valid
    }
}

/// Checks `fp` and reports the first rule it breaks, in the order:
/// connectivity, own termination, foreign termination, region containment.
/// Interface net cells impose nothing.
pub fn validate_footprint(device: &Device, fp: &Footprint) -> Validity {
    let Some(own) = device.interface(fp.interface) else {
        return Validity::UnknownInterface;
    };
    if !fp.cells.same_grid(device.region()) || !fp.cells.is_connected() {
        return Validity::Disconnected;
    }
    if !own.termination.is_subset(&fp.cells) {
        return Validity::MissingOwnTermination;
    }
    if let Some(other) = device
        .interfaces()
        .iter()
        .find(|i| i.id != fp.interface && i.termination.intersects(&fp.cells))
    {
        return Validity::EnclosesForeignTermination { interface: other.id };
    }
    if let Some(cell) = fp.cells.difference(device.region()).iter().next() {
        return Validity::EscapesRegion { cell };
    }
    Validity::Valid
}

/// Whether two footprints share a cell.
pub fn overlaps(a: &Footprint, b: &Footprint) -> Result<bool> {
    if !a.cells.same_grid(&b.cells) {
        return Err(Error::GeometryMismatch);
    }
    Ok(a.cells.intersects(&b.cells))
}

/// Bytes in one configuration frame of 101 32-bit words.
pub const FRAME_BYTES: u64 = 101 * 4;

/// Linear bitstream size model: a fixed header plus a per-cell cost that
/// depends on the column kind. Only ratios between sizes are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SizeModel {
    pub header_bytes: u64,
    pub logic_cell_bytes: u64,
    pub bram_bytes: u64,
    pub dsp_bytes: u64,
}

impl Default for SizeModel {
    /// Interconnect frames per clock-region column segment (36 for CLB
    /// columns, 28 for BRAM and DSP), plus 128 content frames for BRAM.
    fn default() -> Self {
        SizeModel {
            header_bytes: FRAME_BYTES,
            logic_cell_bytes: 36 * FRAME_BYTES,
            bram_bytes: (28 + 128) * FRAME_BYTES,
            dsp_bytes: 28 * FRAME_BYTES,
        }
    }
}

impl SizeModel {
    pub fn per_cell(&self, kind: ResourceKind) -> u64 {
        match kind {
            ResourceKind::LogicCell => self.logic_cell_bytes,
            ResourceKind::Bram => self.bram_bytes,
            ResourceKind::Dsp => self.dsp_bytes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ResourceKind::ALL.iter().any(|&k| self.per_cell(k) == 0) {
            return Err(Error::InvalidParameter("size model needs positive per-cell bytes".into()));
        }
        Ok(())
    }
}

/// Size of a partial bitstream covering `cells`.
pub fn bitstream_bytes(device: &Device, cells: &CellSet, model: &SizeModel) -> u64 {
    let rows = device.rows() as usize;
    model.header_bytes
        + cells
            .indices()
            .map(|i| model.per_cell(device.columns()[i / rows].kind))
            .sum::<u64>()
}
