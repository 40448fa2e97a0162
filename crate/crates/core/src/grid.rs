//! Grids, selections and the compositing / comparison primitives every
//! operation is built from.
//!
//! Indexing is row-major and 0-based, `(row, col)` everywhere.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Largest height or width a grid may have.
pub const MAX_SIDE: usize = 30;

/// Number of distinct cell colors.
pub const NUM_COLORS: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("dimensions {height}x{width} outside 1x1..{max}x{max}", max = MAX_SIDE)]
    DimsOutOfRange { height: usize, width: usize },
    #[error("color {0} outside 0..=9")]
    ColorOutOfRange(i64),
    #[error("row {row} has {len} cells, expected {expected}")]
    RaggedRow { row: usize, len: usize, expected: usize },
    #[error("grid has no rows")]
    Empty,
    #[error("cell buffer has {len} entries, expected {expected}")]
    BufferLength { len: usize, expected: usize },
}

/// A cell color, 0..=9. Zero is black and doubles as "transparent" when
/// compositing object and clipboard layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Color(u8);

impl Color {
    pub const BLACK: Color = Color(0);

    pub fn new(value: u8) -> Result<Self, GridError> {
        if value < NUM_COLORS {
            Ok(Color(value))
        } else {
            Err(GridError::ColorOutOfRange(value as i64))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// All ten colors in ascending order.
    pub fn all() -> impl Iterator<Item = Color> {
        (0..NUM_COLORS).map(Color)
    }
}

impl TryFrom<i64> for Color {
    type Error = GridError;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        if (0..NUM_COLORS as i64).contains(&value) {
            Ok(Color(value as u8))
        } else {
            Err(GridError::ColorOutOfRange(value))
        }
    }
}

/// Height and width of a grid, both in `1..=30`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    height: usize,
    width: usize,
}

impl Dims {
    pub const MAX: Dims = Dims {
        height: MAX_SIDE,
        width: MAX_SIDE,
    };

    pub fn new(height: usize, width: usize) -> Result<Self, GridError> {
        if (1..=MAX_SIDE).contains(&height) && (1..=MAX_SIDE).contains(&width) {
            Ok(Dims { height, width })
        } else {
            Err(GridError::DimsOutOfRange { height, width })
        }
    }

    pub fn height(self) -> usize {
        self.height
    }

    pub fn width(self) -> usize {
        self.width
    }

    pub fn area(self) -> usize {
        self.height * self.width
    }

    pub fn contains(self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    /// Height and width exchanged.
    pub fn transposed(self) -> Dims {
        Dims {
            height: self.width,
            width: self.height,
        }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.height, self.width)
    }
}

impl Serialize for Dims {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.height, self.width].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dims {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [h, w] = <[usize; 2]>::deserialize(d)?;
        Dims::new(h, w).map_err(serde::de::Error::custom)
    }
}

/// Signed cell position. Object layers may sit partially (or entirely)
/// outside the visible grid, so positions are not clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Pos {
    pub row: i64,
    pub col: i64,
}

impl Pos {
    pub const ORIGIN: Pos = Pos { row: 0, col: 0 };

    pub fn new(row: i64, col: i64) -> Self {
        Pos { row, col }
    }
}

/// Dense 2-D array of colors. The backing buffer always holds exactly
/// `height * width` cells, so equality is structural.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    dims: Dims,
    cells: Vec<u8>,
}

impl Grid {
    /// A grid filled with one color.
    pub fn filled(dims: Dims, color: Color) -> Self {
        Grid {
            dims,
            cells: vec![color.0; dims.area()],
        }
    }

    pub fn zeros(dims: Dims) -> Self {
        Self::filled(dims, Color::BLACK)
    }

    /// Builds a grid from a row-major buffer of raw values.
    pub fn from_cells(dims: Dims, cells: Vec<u8>) -> Result<Self, GridError> {
        if cells.len() != dims.area() {
            return Err(GridError::BufferLength {
                len: cells.len(),
                expected: dims.area(),
            });
        }
        if let Some(&bad) = cells.iter().find(|&&c| c >= NUM_COLORS) {
            return Err(GridError::ColorOutOfRange(bad as i64));
        }
        Ok(Grid { dims, cells })
    }

    /// Builds a grid from nested rows, checking raggedness, bounds and colors.
    pub fn from_rows<R, T>(rows: &[R]) -> Result<Self, GridError>
    where
        R: AsRef<[T]>,
        T: Copy + Into<i64>,
    {
        let height = rows.len();
        if height == 0 {
            return Err(GridError::Empty);
        }
        let width = rows[0].as_ref().len();
        let dims = Dims::new(height, width)?;
        let mut cells = Vec::with_capacity(dims.area());
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != width {
                return Err(GridError::RaggedRow {
                    row: r,
                    len: row.len(),
                    expected: width,
                });
            }
            for &v in row {
                cells.push(Color::try_from(v.into())?.0);
            }
        }
        Ok(Grid { dims, cells })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn height(&self) -> usize {
        self.dims.height
    }

    pub fn width(&self) -> usize {
        self.dims.width
    }

    /// Row-major raw cell values.
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.dims.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, color: Color) {
        self.cells[row * self.dims.width + col] = color.0;
    }

    /// Value at a signed position, `None` when outside the grid.
    pub fn get_signed(&self, row: i64, col: i64) -> Option<u8> {
        self.dims
            .contains(row, col)
            .then(|| self.get(row as usize, col as usize))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.cells.chunks(self.dims.width)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.rows().map(<[u8]>::to_vec).collect()
    }

    /// Resizes to `dims`, keeping the overlapping top-left region and filling
    /// any newly exposed cells with black.
    pub fn resized(&self, dims: Dims) -> Grid {
        if dims == self.dims {
            return self.clone();
        }
        let mut out = Grid::zeros(dims);
        let h = dims.height.min(self.dims.height);
        let w = dims.width.min(self.dims.width);
        for r in 0..h {
            let src = &self.cells[r * self.dims.width..r * self.dims.width + w];
            out.cells[r * dims.width..r * dims.width + w].copy_from_slice(src);
        }
        out
    }

    /// The `bbox`-sized patch of this grid where cells selected by `sel` keep
    /// their value and every other cell becomes black.
    pub fn masked_patch(&self, sel: &Selection, bbox: BBox) -> Grid {
        let dims = bbox.dims();
        let mut out = Grid::zeros(dims);
        for r in 0..dims.height {
            for c in 0..dims.width {
                let (gr, gc) = (bbox.top + r, bbox.left + c);
                if sel.get(gr, gc) {
                    out.cells[r * dims.width + c] = self.get(gr, gc);
                }
            }
        }
        out
    }

    /// 64-bit FNV-1a over height, width, then the row-major cells, one byte
    /// each.
    pub fn digest(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut hash = OFFSET;
        let header = [self.dims.height as u8, self.dims.width as u8];
        for &b in header.iter().chain(self.cells.iter()) {
            hash ^= b as u64;
            hash = hash.wrapping_mul(PRIME);
        }
        hash
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid{}[", self.dims)?;
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for &v in row {
                write!(f, "{v}")?;
            }
        }
        f.write_str("]")
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.rows())
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        Grid::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Inclusive, 0-based rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BBox {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl BBox {
    pub fn new(top: usize, left: usize, bottom: usize, right: usize) -> Self {
        debug_assert!(top <= bottom && left <= right);
        BBox {
            top,
            left,
            bottom,
            right,
        }
    }

    pub fn height(&self) -> usize {
        self.bottom - self.top + 1
    }

    pub fn width(&self) -> usize {
        self.right - self.left + 1
    }

    /// Dimensions of the box. Boxes only ever come from selections, so they
    /// are always within grid bounds.
    pub fn dims(&self) -> Dims {
        Dims {
            height: self.height(),
            width: self.width(),
        }
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.top..=self.bottom).contains(&row) && (self.left..=self.right).contains(&col)
    }
}

/// Binary mask aligned with some grid's dimensions.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Selection {
    dims: Dims,
    bits: Vec<bool>,
}

impl Selection {
    pub fn empty(dims: Dims) -> Self {
        Selection {
            dims,
            bits: vec![false; dims.area()],
        }
    }

    pub fn full(dims: Dims) -> Self {
        Selection {
            dims,
            bits: vec![true; dims.area()],
        }
    }

    pub fn from_bits(dims: Dims, bits: Vec<bool>) -> Result<Self, GridError> {
        if bits.len() != dims.area() {
            return Err(GridError::BufferLength {
                len: bits.len(),
                expected: dims.area(),
            });
        }
        Ok(Selection { dims, bits })
    }

    /// Selection containing exactly the listed cells.
    ///
    /// Panics if a cell lies outside `dims`.
    pub fn from_cells(dims: Dims, cells: &[(usize, usize)]) -> Self {
        let mut sel = Selection::empty(dims);
        for &(r, c) in cells {
            sel.set(r, c, true);
        }
        sel
    }

    /// The filled rectangle between two corners (in any order), clipped to
    /// `dims`. Corners entirely outside yield an empty selection.
    pub fn rect(dims: Dims, r0: i64, c0: i64, r1: i64, c1: i64) -> Self {
        let mut sel = Selection::empty(dims);
        let top = r0.min(r1).max(0);
        let bottom = r0.max(r1).min(dims.height as i64 - 1);
        let left = c0.min(c1).max(0);
        let right = c0.max(c1).min(dims.width as i64 - 1);
        if top > bottom || left > right {
            return sel;
        }
        for r in top as usize..=bottom as usize {
            let base = r * dims.width;
            sel.bits[base + left as usize..=base + right as usize].fill(true);
        }
        sel
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.dims.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.dims.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Coordinates of every set cell, row-major.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.dims.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i / w, i % w))
    }

    /// Minimal box covering every set cell, `None` when nothing is set.
    pub fn bounding_box(&self) -> Option<BBox> {
        let mut it = self.iter_set();
        let (r, c) = it.next()?;
        let mut bbox = BBox::new(r, c, r, c);
        for (r, c) in it {
            bbox.top = bbox.top.min(r);
            bbox.bottom = bbox.bottom.max(r);
            bbox.left = bbox.left.min(c);
            bbox.right = bbox.right.max(c);
        }
        Some(bbox)
    }

    /// The part of this selection inside `bbox`, as a bbox-sized mask.
    pub fn restricted(&self, bbox: BBox) -> Selection {
        let dims = bbox.dims();
        let mut out = Selection::empty(dims);
        for r in 0..dims.height {
            for c in 0..dims.width {
                out.bits[r * dims.width + c] = self.get(bbox.top + r, bbox.left + c);
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.bits
            .chunks(self.dims.width)
            .map(|row| row.iter().map(|&b| b as u8).collect())
            .collect()
    }
}

impl fmt::Debug for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Selection{}[", self.dims)?;
        for (i, row) in self.bits.chunks(self.dims.width).enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for &b in row {
                f.write_str(if b { "1" } else { "." })?;
            }
        }
        f.write_str("]")
    }
}

impl Serialize for Selection {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

/// Minimal box covering every set cell of `sel`; `None` for an empty mask.
pub fn bounding_box(sel: &Selection) -> Option<BBox> {
    sel.bounding_box()
}

/// Writes `patch` onto `base` with its top-left corner at `at`.
///
/// A patch cell is written only where `patch_mask` is set and the patch
/// value is non-zero. Cells landing outside `base` are skipped.
pub fn overlay_into(base: &mut Grid, patch: &Grid, at: Pos, patch_mask: &Selection) {
    debug_assert_eq!(patch.dims, patch_mask.dims);
    let (bh, bw) = (base.dims.height as i64, base.dims.width as i64);
    let (ph, pw) = (patch.dims.height as i64, patch.dims.width as i64);
    let r_lo = (-at.row).max(0);
    let r_hi = (bh - at.row).min(ph);
    let c_lo = (-at.col).max(0);
    let c_hi = (bw - at.col).min(pw);
    for pr in r_lo..r_hi {
        let prow = (pr * pw) as usize;
        let brow = ((pr + at.row) * bw) as usize;
        for pc in c_lo..c_hi {
            let i = prow + pc as usize;
            let v = patch.cells[i];
            if v != 0 && patch_mask.bits[i] {
                base.cells[brow + (pc + at.col) as usize] = v;
            }
        }
    }
}

/// Pure form of [`overlay_into`].
pub fn overlay(base: &Grid, patch: &Grid, at: Pos, patch_mask: &Selection) -> Grid {
    let mut out = base.clone();
    overlay_into(&mut out, patch, at, patch_mask);
    out
}

/// True iff both grids have the same dimensions and identical cells.
pub fn compare_exact(a: &Grid, b: &Grid) -> bool {
    a == b
}

/// Fraction of incorrect cells over the frame spanning both grids.
///
/// The frame is `max(h) x max(w)`; a frame cell is incorrect when it falls
/// outside either grid or the two values differ.
pub fn mismatch_ratio(grid: &Grid, answer: &Grid) -> f64 {
    let h = grid.height().max(answer.height());
    let w = grid.width().max(answer.width());
    let mut wrong = 0usize;
    for r in 0..h {
        for c in 0..w {
            let a = (r < grid.height() && c < grid.width()).then(|| grid.get(r, c));
            let b = (r < answer.height() && c < answer.width()).then(|| answer.get(r, c));
            match (a, b) {
                (Some(x), Some(y)) if x == y => {}
                _ => wrong += 1,
            }
        }
    }
    wrong as f64 / (h * w) as f64
}
