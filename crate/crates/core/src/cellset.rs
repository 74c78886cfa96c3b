//! Fixed-geometry bitsets over the allocation grid.
//!
//! Bit `i` stands for the cell at column `i / rows`, row `i % rows`, so
//! iteration order is the canonical col-major-then-row order used by every
//! serialized footprint.

use std::fmt;

use crate::fabric::Cell;

/// A set of cells on a grid of fixed `cols × rows` geometry.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellSet {
    cols: u16,
    rows: u16,
    words: Vec<u64>,
}

impl CellSet {
    pub fn empty(cols: u16, rows: u16) -> Self {
        let bits = cols as usize * rows as usize;
        CellSet {
            cols,
            rows,
            words: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn from_cells<I: IntoIterator<Item = Cell>>(cols: u16, rows: u16, cells: I) -> Self {
        let mut set = CellSet::empty(cols, rows);
        for c in cells {
            set.insert(c);
        }
        set
    }

    #[inline]
    pub fn cols(&self) -> u16 {
        self.cols
    }

    #[inline]
    pub fn rows(&self) -> u16 {
        self.rows
    }

    /// True when both sets live on the same grid geometry.
    #[inline]
    pub fn same_grid(&self, other: &CellSet) -> bool {
        self.cols == other.cols && self.rows == other.rows
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.cols as usize * self.rows as usize
    }

    #[inline]
    pub fn in_bounds(&self, c: Cell) -> bool {
        c.col < self.cols && c.row < self.rows
    }

    #[inline]
    pub fn index_of(&self, c: Cell) -> usize {
        debug_assert!(self.in_bounds(c), "{c} outside {}x{}", self.cols, self.rows);
        c.col as usize * self.rows as usize + c.row as usize
    }

    #[inline]
    pub fn cell_at(&self, idx: usize) -> Cell {
        Cell {
            col: (idx / self.rows as usize) as u16,
            row: (idx % self.rows as usize) as u16,
        }
    }

    #[inline]
    pub fn insert(&mut self, c: Cell) -> bool {
        let i = self.index_of(c);
        self.insert_index(i)
    }

    #[inline]
    pub fn insert_index(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    #[inline]
    pub fn remove(&mut self, c: Cell) -> bool {
        let i = self.index_of(c);
        self.remove_index(i)
    }

    #[inline]
    pub fn remove_index(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        let had = self.words[w] & (1 << b) != 0;
        self.words[w] &= !(1 << b);
        had
    }

    #[inline]
    pub fn contains(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.contains_index(self.index_of(c))
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn intersects(&self, other: &CellSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .any(|(a, b)| a & b != 0)
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &CellSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn subtract(&mut self, other: &CellSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
        out
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        let mut out = self.clone();
        out.subtract(other);
        out
    }

    /// Bit indices in ascending (canonical) order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Cells in canonical col-major-then-row order.
    pub fn iter(&self) -> impl Iterator<Item = Cell> + '_ {
        self.indices().map(|i| self.cell_at(i))
    }

    /// 4-neighbours of `c` that lie on the grid.
    pub fn grid_neighbours(&self, c: Cell) -> impl Iterator<Item = Cell> {
        let (cols, rows) = (self.cols, self.rows);
        let cand = [
            (c.col.checked_sub(1), Some(c.row)),
            (Some(c.col + 1).filter(|&x| x < cols), Some(c.row)),
            (Some(c.col), c.row.checked_sub(1)),
            (Some(c.col), Some(c.row + 1).filter(|&y| y < rows)),
        ];
        cand.into_iter().filter_map(|(col, row)| Some(Cell { col: col?, row: row? }))
    }

    /// Edge-connectivity of the set. The empty set counts as disconnected.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.indices().next() else {
            return false;
        };
        let mut seen = CellSet::empty(self.cols, self.rows);
        seen.insert_index(start);
        let mut stack = vec![self.cell_at(start)];
        let mut count = 1;
        while let Some(c) = stack.pop() {
            for n in self.grid_neighbours(c) {
                if self.contains(n) && seen.insert(n) {
                    count += 1;
                    stack.push(n);
                }
            }
        }
        count == self.len()
    }

    /// `(col, row)` pairs in canonical order, for serialization.
    pub fn to_pairs(&self) -> Vec<[u16; 2]> {
        self.iter().map(|c| [c.col, c.row]).collect()
    }
}

impl fmt::Debug for CellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
