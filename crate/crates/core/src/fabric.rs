//! The fabric as a grid of allocation cells.
//!
//! A cell is one column within one clock-region row, the smallest unit a
//! reconfigurable partition can claim when the fabric is reset after
//! reconfiguration. Each column carries a single resource kind and a
//! per-cell capacity. Cells are either owned by the static partition or
//! belong to the uncommitted reconfiguration region that AFUs share.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cellset::CellSet;
use crate::error::{Error, Result};
use crate::footprint::ResourceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ResourceKind {
    LogicCell,
    Bram,
    Dsp,
}

impl ResourceKind {
    pub const ALL: [ResourceKind; 3] = [ResourceKind::LogicCell, ResourceKind::Bram, ResourceKind::Dsp];

    /// 7-series-like capacity of one column segment spanning a clock region.
    pub fn default_density(self) -> u32 {
        match self {
            ResourceKind::LogicCell => 400,
            ResourceKind::Bram => 10,
            ResourceKind::Dsp => 20,
        }
    }
}

impl fmt::Display for ResourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ResourceKind::LogicCell => "logic",
            ResourceKind::Bram => "BRAM",
            ResourceKind::Dsp => "DSP",
        })
    }
}

/// What kind of AXI4 attachment an interface provides, or an AFU requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InterfaceKind {
    Memory,
    Streaming,
    Both,
}

impl InterfaceKind {
    /// Whether an interface of this kind can host an AFU requiring `afu`.
    pub fn accepts(self, afu: InterfaceKind) -> bool {
        self == InterfaceKind::Both || self == afu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: u16,
    pub row: u16,
}

impl Cell {
    pub const fn new(col: u16, row: u16) -> Self {
        Cell { col, row }
    }

    pub fn manhattan(self, other: Cell) -> u32 {
        self.col.abs_diff(other.col) as u32 + self.row.abs_diff(other.row) as u32
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.col, self.row)
    }
}

impl From<[u16; 2]> for Cell {
    fn from([col, row]: [u16; 2]) -> Self {
        Cell { col, row }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub kind: ResourceKind,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interface {
    pub id: usize,
    pub kind: InterfaceKind,
    pub termination: CellSet,
    /// Routing withheld for the interface nets. Recorded only; foreign
    /// footprints may cover these cells.
    pub nets: CellSet,
}

// ---------------------------------------------------------------------------
// Configuration file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DeviceConfig {
    pub name: String,
    pub region_rows: u16,
    pub columns: Vec<ColumnGroup>,
    #[serde(default)]
    pub static_mask: Vec<Rect>,
    /// Declared uncommitted-region totals; the column map must hit them exactly.
    pub budget: ResourceVector,
    #[serde(default)]
    pub interfaces: Vec<InterfaceConfig>,
}

/// `count` adjacent columns of one kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ColumnGroup {
    pub kind: ResourceKind,
    #[serde(default = "one")]
    pub count: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_cell_capacity: Option<u32>,
}

fn one() -> u16 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Rect {
    pub col: u16,
    pub row: u16,
    pub width: u16,
    pub height: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct InterfaceConfig {
    pub id: usize,
    pub kind: InterfaceKind,
    pub anchor: [u16; 2],
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nets: Vec<[u16; 2]>,
}

impl DeviceConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

// ---------------------------------------------------------------------------
// Device
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    name: String,
    rows: u16,
    columns: Vec<Column>,
    static_mask: CellSet,
    region: CellSet,
    interfaces: Vec<Interface>,
    budget: ResourceVector,
}

/// Builds a device from its configuration, checking the cell partition,
/// the budget and the interface anchors.
pub fn build_device(config: &DeviceConfig) -> Result<Device> {
    if config.region_rows == 0 {
        return Err(Error::Config("regionRows must be positive".into()));
    }
    let mut columns = Vec::new();
    for g in &config.columns {
        let capacity = g.per_cell_capacity.unwrap_or_else(|| g.kind.default_density());
        if g.count == 0 || capacity == 0 {
            return Err(Error::Config("column groups need positive count and capacity".into()));
        }
        columns.extend(std::iter::repeat_n(Column { kind: g.kind, capacity }, g.count as usize));
    }
    if columns.is_empty() || columns.len() > u16::MAX as usize {
        return Err(Error::Config("column list is empty or too long".into()));
    }
    let (cols, rows) = (columns.len() as u16, config.region_rows);

    let mut static_mask = CellSet::empty(cols, rows);
    for r in &config.static_mask {
        if r.col as u32 + r.width as u32 > cols as u32 || r.row as u32 + r.height as u32 > rows as u32 {
            return Err(Error::Config(format!("static rectangle {r:?} exceeds the grid")));
        }
        for col in r.col..r.col + r.width {
            for row in r.row..r.row + r.height {
                static_mask.insert(Cell { col, row });
            }
        }
    }
    let mut region = CellSet::empty(cols, rows);
    for i in 0..region.capacity() {
        if !static_mask.contains_index(i) {
            region.insert_index(i);
        }
    }

    let mut device = Device {
        name: config.name.clone(),
        rows,
        columns,
        static_mask,
        region,
        interfaces: Vec::new(),
        budget: config.budget,
    };

    let actual = device.capacity_unchecked(&device.region);
    for kind in ResourceKind::ALL {
        if actual.get(kind) != config.budget.get(kind) {
            return Err(Error::BudgetMismatch {
                kind,
                declared: config.budget.get(kind) as u64,
                actual: actual.get(kind) as u64,
            });
        }
    }

    let mut interfaces: Vec<Interface> = Vec::with_capacity(config.interfaces.len());
    for (pos, ic) in config.interfaces.iter().enumerate() {
        if ic.id != pos {
            return Err(Error::Config(format!(
                "interface ids must be 0..n in order; found {} at position {pos}",
                ic.id
            )));
        }
        let anchor = Cell::from(ic.anchor);
        if !device.in_bounds(anchor) {
            return Err(Error::CellOutOfBounds(anchor));
        }
        if device.static_mask.contains(anchor) {
            return Err(Error::AnchorInStatic { id: ic.id, cell: anchor });
        }
        let termination = CellSet::from_cells(cols, rows, [anchor]);
        if let Some(other) = interfaces.iter().find(|o| o.termination.intersects(&termination)) {
            return Err(Error::TerminationOverlap { a: other.id, b: ic.id, cell: anchor });
        }
        let nets = device.cell_set(ic.nets.iter().copied().map(Cell::from))?;
        interfaces.push(Interface { id: ic.id, kind: ic.kind, termination, nets });
    }
    device.interfaces = interfaces;
    Ok(device)
}

impl Device {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cols(&self) -> u16 {
        self.columns.len() as u16
    }

    pub fn rows(&self) -> u16 {
        self.rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, col: u16) -> Column {
        self.columns[col as usize]
    }

    pub fn budget(&self) -> ResourceVector {
        self.budget
    }

    pub fn static_mask(&self) -> &CellSet {
        &self.static_mask
    }

    /// The uncommitted reconfiguration region.
    pub fn region(&self) -> &CellSet {
        &self.region
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn interface(&self, id: usize) -> Option<&Interface> {
        self.interfaces.get(id)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.col < self.cols() && c.row < self.rows
    }

    pub fn in_region(&self, c: Cell) -> bool {
        self.region.contains(c)
    }

    pub fn empty_set(&self) -> CellSet {
        CellSet::empty(self.cols(), self.rows)
    }

    /// Union of every interface's termination cells.
    pub fn all_termination(&self) -> CellSet {
        let mut s = self.empty_set();
        for i in &self.interfaces {
            s.union_with(&i.termination);
        }
        s
    }

    /// Collects cells into a set on this device's grid, rejecting any cell
    /// off the grid.
    pub fn cell_set<I: IntoIterator<Item = Cell>>(&self, cells: I) -> Result<CellSet> {
        let mut s = self.empty_set();
        for c in cells {
            if !self.in_bounds(c) {
                return Err(Error::CellOutOfBounds(c));
            }
            s.insert(c);
        }
        Ok(s)
    }

    /// Per-kind capacity of `cells`, which must lie in the uncommitted region.
    pub fn region_capacity(&self, cells: &CellSet) -> Result<ResourceVector> {
        if !cells.same_grid(&self.region) {
            return Err(Error::GeometryMismatch);
        }
        if let Some(bad) = cells.intersection(&self.static_mask).iter().next() {
            return Err(Error::CellInStatic(bad));
        }
        Ok(self.capacity_unchecked(cells))
    }

    /// Capacity tally with no region check.
    pub fn capacity_unchecked(&self, cells: &CellSet) -> ResourceVector {
        let mut v = ResourceVector::ZERO;
        for i in cells.indices() {
            let col = self.columns[i / self.rows as usize];
            v.add_kind(col.kind, col.capacity);
        }
        v
    }

    pub fn kind_at(&self, c: Cell) -> ResourceKind {
        self.columns[c.col as usize].kind
    }

    /// Region cells with at least one 4-neighbour that is static or off-grid.
    pub fn is_region_boundary(&self, c: Cell) -> bool {
        if !self.region.contains(c) {
            return false;
        }
        let mut n = 0;
        for nb in self.region.grid_neighbours(c) {
            if !self.region.contains(nb) {
                return true;
            }
            n += 1;
        }
        n < 4
    }

    /// The region's outer boundary cells in walk order, starting from the
    /// lowest cell of the leftmost region column (always a convex corner).
    pub fn perimeter_walk(&self) -> Vec<Cell> {
        let Some(start) = self.region.iter().next() else {
            return Vec::new();
        };
        // Clockwise with rows increasing upward.
        const DIRS: [(i32, i32); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];
        let at = |c: Cell, d: usize| -> Option<Cell> {
            let (dc, dr) = DIRS[d];
            let col = c.col as i32 + dc;
            let row = c.row as i32 + dr;
            (col >= 0 && row >= 0 && col < self.cols() as i32 && row < self.rows as i32)
                .then(|| Cell::new(col as u16, row as u16))
        };
        let inside = |c: Option<Cell>| c.is_some_and(|c| self.region.contains(c));
        let dir_between = |from: Cell, to: (i32, i32)| -> usize {
            let off = (to.0 - from.col as i32, to.1 - from.row as i32);
            DIRS.iter().position(|&d| d == off).expect("neighbouring offset")
        };

        let mut walk = vec![start];
        let mut seen = self.empty_set();
        seen.insert(start);
        let mut p = start;
        // The start is the lowest cell of the leftmost column, so its west
        // neighbour is outside.
        let start_back = 6;
        let mut back = start_back;
        let limit = 8 * self.region.len() + 8;
        for _ in 0..limit {
            let mut found = None;
            for k in 1..=8 {
                let d = (back + k) % 8;
                if inside(at(p, d)) {
                    found = Some(d);
                    break;
                }
            }
            let Some(d) = found else { break };
            let q = at(p, d).unwrap();
            let prev = (d + 7) % 8;
            let (bc, br) = DIRS[prev];
            let bpos = (p.col as i32 + bc, p.row as i32 + br);
            let nb = dir_between(q, bpos);
            if q == start && nb == start_back {
                break;
            }
            p = q;
            back = nb;
            if seen.insert(p) {
                walk.push(p);
            }
        }
        walk.retain(|&c| self.is_region_boundary(c));
        walk
    }

    /// Shortest region path from `anchor` to a cell touching the static
    /// partition, excluding the anchor itself. Empty when the anchor already
    /// touches static logic or no static partition exists.
    pub fn net_path(&self, anchor: Cell) -> CellSet {
        let mut out = self.empty_set();
        if self.static_mask.is_empty() {
            return out;
        }
        let touches_static =
            |c: Cell| self.region.grid_neighbours(c).any(|n| self.static_mask.contains(n));
        let n = self.region.capacity();
        let mut parent = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        let s = self.region.index_of(anchor);
        parent[s] = s;
        queue.push_back(anchor);
        while let Some(c) = queue.pop_front() {
            if touches_static(c) {
                let mut i = self.region.index_of(c);
                while i != s {
                    out.insert_index(i);
                    i = parent[i];
                }
                return out;
            }
            for nb in self.region.grid_neighbours(c) {
                let j = self.region.index_of(nb);
                if self.region.contains(nb) && parent[j] == usize::MAX {
                    parent[j] = self.region.index_of(c);
                    queue.push_back(nb);
                }
            }
        }
        out
    }

    /// Returns a copy of this device with its interfaces replaced.
    pub fn with_interfaces(&self, interfaces: Vec<Interface>) -> Result<Device> {
        for (pos, i) in interfaces.iter().enumerate() {
            if i.id != pos {
                return Err(Error::Config("interface ids must be 0..n in order".into()));
            }
            if !i.termination.same_grid(&self.region) || !i.termination.is_subset(&self.region) {
                return Err(Error::Config(format!("interface {pos} termination outside region")));
            }
            if i.termination.is_empty() {
                return Err(Error::Config(format!("interface {pos} has no termination cells")));
            }
            if let Some(o) = interfaces[..pos].iter().find(|o| o.termination.intersects(&i.termination)) {
                let cell = o.termination.intersection(&i.termination).iter().next().unwrap();
                return Err(Error::TerminationOverlap { a: o.id, b: i.id, cell });
            }
        }
        let mut d = self.clone();
        d.interfaces = interfaces;
        Ok(d)
    }

    /// Rebuilds the configuration this device corresponds to. Column groups
    /// are run-length encoded.
    pub fn to_config(&self) -> DeviceConfig {
        let mut columns: Vec<ColumnGroup> = Vec::new();
        for c in &self.columns {
            let cap = (c.capacity != c.kind.default_density()).then_some(c.capacity);
            match columns.last_mut() {
                Some(g) if g.kind == c.kind && g.per_cell_capacity == cap => g.count += 1,
                _ => columns.push(ColumnGroup { kind: c.kind, count: 1, per_cell_capacity: cap }),
            }
        }
        // One rectangle per static column run.
        let mut static_mask = Vec::new();
        for col in 0..self.cols() {
            let mut row = 0;
            while row < self.rows {
                if self.static_mask.contains(Cell::new(col, row)) {
                    let start = row;
                    while row < self.rows && self.static_mask.contains(Cell::new(col, row)) {
                        row += 1;
                    }
                    static_mask.push(Rect { col, row: start, width: 1, height: row - start });
                } else {
                    row += 1;
                }
            }
        }
        let interfaces = self
            .interfaces
            .iter()
            .map(|i| InterfaceConfig {
                id: i.id,
                kind: i.kind,
                anchor: i.termination.to_pairs()[0],
                nets: i.nets.to_pairs(),
            })
            .collect();
        DeviceConfig {
            name: self.name.clone(),
            region_rows: self.rows,
            columns,
            static_mask,
            budget: self.budget,
            interfaces,
        }
    }
}

/// Places `n` interfaces evenly along the region's perimeter walk.
///
/// Anchor `i` sits at walk position `floor(i·P/n)`; when that site is a hard
/// block column the next walk position is taken instead if it is a logic
/// site, since termination LUTs want logic. Each interface's net cells are
/// the shortest region path out to the static partition.
pub fn place_interfaces_peripheral(device: &Device, n: usize, kind: InterfaceKind) -> Result<Vec<Interface>> {
    let walk = device.perimeter_walk();
    if n == 0 || n > walk.len() {
        return Err(Error::NotEnoughPeripherySites { requested: n, available: walk.len() });
    }
    let p = walk.len();
    let base: Vec<usize> = (0..n).map(|i| i * p / n).collect();
    let mut out = Vec::with_capacity(n);
    for (i, &b) in base.iter().enumerate() {
        let next = if i + 1 < n { base[i + 1] } else { p };
        let mut pos = b;
        if device.kind_at(walk[b]) != ResourceKind::LogicCell
            && b + 1 < next
            && device.kind_at(walk[b + 1]) == ResourceKind::LogicCell
        {
            pos = b + 1;
        }
        let anchor = walk[pos];
        out.push(Interface {
            id: i,
            kind,
            termination: CellSet::from_cells(device.cols(), device.rows(), [anchor]),
            nets: device.net_path(anchor),
        });
    }
    Ok(out)
}
