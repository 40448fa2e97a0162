//! The operation catalogue.
//!
//! Every operation maps `(state, selection)` to a successor state. Object
//! operations (move, rotate, flip) go through the two-layer mechanism in
//! [`crate::object`]; every other operation first commits any lifted object.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grid::{Color, Dims, Grid, Pos, Selection, overlay_into};
use crate::object;
use crate::state::EnvState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Right,
    Left,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Right, Direction::Left];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Right => (0, 1),
            Direction::Left => (0, -1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }

    fn letter(self) -> char {
        match self {
            Direction::Up => 'U',
            Direction::Down => 'D',
            Direction::Right => 'R',
            Direction::Left => 'L',
        }
    }
}

/// Counterclockwise rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    Ccw90,
    Ccw180,
    Ccw270,
}

impl Rotation {
    fn degrees(self) -> u16 {
        match self {
            Rotation::Ccw90 => 90,
            Rotation::Ccw180 => 180,
            Rotation::Ccw270 => 270,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Mirror left-right.
    Horizontal,
    /// Mirror up-down.
    Vertical,
    /// Transpose over the major diagonal.
    Diagonal,
    /// Transpose over the minor diagonal.
    AntiDiagonal,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Horizontal, Axis::Vertical, Axis::Diagonal, Axis::AntiDiagonal];

    fn suffix(self) -> &'static str {
        match self {
            Axis::Horizontal => "H",
            Axis::Vertical => "V",
            Axis::Diagonal => "D0",
            Axis::AntiDiagonal => "D1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CopySource {
    /// The task input (`CopyI`).
    Input,
    /// The editable grid (`CopyO`).
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Category {
    Coloring,
    FloodFill,
    ObjectOriented,
    Clipboard,
    Critical,
}

/// One grid-editing operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    Color(Color),
    FloodFill(Color),
    Move(Direction),
    Rotate(Rotation),
    Flip(Axis),
    Copy(CopySource),
    Paste,
    CopyInput,
    ResetGrid,
    ResizeGrid,
    CropGrid,
    Submit,
}

/// Number of operations in [`Operation::catalogue`].
pub const CATALOGUE_LEN: usize = 39;

impl Operation {
    /// Every operation. The first 35 are in O2ARC index order; the four
    /// operations O2ARC does not expose follow.
    pub fn catalogue() -> Vec<Operation> {
        let mut ops = Vec::with_capacity(CATALOGUE_LEN);
        ops.extend(Color::all().map(Operation::Color));
        ops.extend(Color::all().map(Operation::FloodFill));
        ops.extend(Direction::ALL.map(Operation::Move));
        ops.extend([
            Operation::Rotate(Rotation::Ccw90),
            Operation::Rotate(Rotation::Ccw270),
            Operation::Flip(Axis::Horizontal),
            Operation::Flip(Axis::Vertical),
            Operation::Copy(CopySource::Input),
            Operation::Copy(CopySource::Grid),
            Operation::Paste,
            Operation::CopyInput,
            Operation::ResetGrid,
            Operation::ResizeGrid,
            Operation::Submit,
            Operation::Rotate(Rotation::Ccw180),
            Operation::Flip(Axis::Diagonal),
            Operation::Flip(Axis::AntiDiagonal),
            Operation::CropGrid,
        ]);
        debug_assert_eq!(ops.len(), CATALOGUE_LEN);
        ops
    }

    pub fn category(self) -> Category {
        match self {
            Operation::Color(_) => Category::Coloring,
            Operation::FloodFill(_) => Category::FloodFill,
            Operation::Move(_) | Operation::Rotate(_) | Operation::Flip(_) => Category::ObjectOriented,
            Operation::Copy(_) | Operation::Paste => Category::Clipboard,
            Operation::CopyInput
            | Operation::ResetGrid
            | Operation::ResizeGrid
            | Operation::CropGrid
            | Operation::Submit => Category::Critical,
        }
    }

    pub fn is_object_oriented(self) -> bool {
        self.category() == Category::ObjectOriented
    }

    /// Dimensions a selection for this operation must have in `state`.
    ///
    /// `CopyI` selects on the input; `ResizeGrid` selects on the full 30x30
    /// canvas so the grid can grow; everything else selects on the grid.
    pub fn selection_frame(self, state: &EnvState) -> Dims {
        match self {
            Operation::Copy(CopySource::Input) => state.input.dims(),
            Operation::ResizeGrid => Dims::MAX,
            _ => state.grid.dims(),
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Color(c) => write!(f, "Color{}", c.value()),
            Operation::FloodFill(c) => write!(f, "FloodFill{}", c.value()),
            Operation::Move(d) => write!(f, "Move{}", d.letter()),
            Operation::Rotate(r) => write!(f, "Rotate{}", r.degrees()),
            Operation::Flip(a) => write!(f, "Flip{}", a.suffix()),
            Operation::Copy(CopySource::Input) => f.write_str("CopyI"),
            Operation::Copy(CopySource::Grid) => f.write_str("CopyO"),
            Operation::Paste => f.write_str("Paste"),
            Operation::CopyInput => f.write_str("CopyInput"),
            Operation::ResetGrid => f.write_str("ResetGrid"),
            Operation::ResizeGrid => f.write_str("ResizeGrid"),
            Operation::CropGrid => f.write_str("CropGrid"),
            Operation::Submit => f.write_str("Submit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown operation name {0:?}")]
pub struct UnknownOperation(pub String);

impl FromStr for Operation {
    type Err = UnknownOperation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Operation::catalogue()
            .into_iter()
            .find(|op| op.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownOperation(s.to_string()))
    }
}

impl Serialize for Operation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Operation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Why an operation left the grid untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoOpReason {
    EmptySelection,
    /// Object operation with nothing selected and no active object.
    EmptyObject,
    /// Paste with an empty clipboard.
    EmptyClip,
}

/// Outcome of applying an operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effect {
    Applied,
    NoOp(NoOpReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpError {
    #[error("{op} expects a {expected} selection, got {actual}")]
    SelectionShape { op: Operation, expected: Dims, actual: Dims },
}

/// Applies `op` to `state` in place.
///
/// The state is untouched when an error is returned.
pub fn apply_in_place(state: &mut EnvState, op: Operation, sel: &Selection) -> Result<Effect, OpError> {
    let frame = op.selection_frame(state);
    if sel.dims() != frame {
        return Err(OpError::SelectionShape {
            op,
            expected: frame,
            actual: sel.dims(),
        });
    }
    let effect = match op {
        Operation::Move(d) => object::move_object(state, sel, d),
        Operation::Rotate(r) => object::rotate_object(state, sel, r),
        Operation::Flip(a) => object::flip_object(state, sel, a),
        _ => {
            state.object = None;
            apply_plain(state, op, sel)
        }
    };
    Ok(effect)
}

/// Pure form of [`apply_in_place`].
pub fn apply(state: &EnvState, op: Operation, sel: &Selection) -> Result<(EnvState, Effect), OpError> {
    let mut next = state.clone();
    let effect = apply_in_place(&mut next, op, sel)?;
    Ok((next, effect))
}

fn apply_plain(state: &mut EnvState, op: Operation, sel: &Selection) -> Effect {
    let needs_selection = !matches!(op, Operation::CopyInput | Operation::ResetGrid | Operation::Submit);
    if needs_selection && sel.is_empty() {
        return Effect::NoOp(NoOpReason::EmptySelection);
    }
    match op {
        Operation::Color(c) => {
            for (r, col) in sel.iter_set() {
                state.grid.set(r, col, c);
            }
        }
        Operation::FloodFill(c) => flood_fill_in_place(&mut state.grid, sel, c),
        Operation::Copy(source) => {
            let src = match source {
                CopySource::Input => &state.input,
                CopySource::Grid => &state.grid,
            };
            let bbox = sel.bounding_box().expect("non-empty selection");
            state.clip = Some(src.masked_patch(sel, bbox));
        }
        Operation::Paste => {
            let Some(clip) = &state.clip else {
                return Effect::NoOp(NoOpReason::EmptyClip);
            };
            let bbox = sel.bounding_box().expect("non-empty selection");
            let at = Pos::new(bbox.top as i64, bbox.left as i64);
            overlay_into(&mut state.grid, clip, at, &Selection::full(clip.dims()));
        }
        Operation::CopyInput => state.grid = state.input.clone(),
        Operation::ResetGrid => state.grid = Grid::zeros(state.grid.dims()),
        Operation::ResizeGrid => {
            let bbox = sel.bounding_box().expect("non-empty selection");
            let dims = Dims::new(bbox.bottom + 1, bbox.right + 1).expect("selection within canvas");
            state.grid = state.grid.resized(dims);
        }
        Operation::CropGrid => {
            let bbox = sel.bounding_box().expect("non-empty selection");
            state.grid = state.grid.masked_patch(sel, bbox);
        }
        Operation::Submit => state.terminated = true,
        Operation::Move(_) | Operation::Rotate(_) | Operation::Flip(_) => {
            unreachable!("object operations are dispatched separately")
        }
    }
    Effect::Applied
}

/// Recolors, for every selected seed, the 4-connected region sharing the
/// seed's color. Regions are computed on the grid as it was before any
/// write, so the result does not depend on seed order.
pub fn flood_fill_in_place(grid: &mut Grid, seeds: &Selection, color: Color) {
    let dims = grid.dims();
    let (h, w) = (dims.height(), dims.width());
    let mut region = vec![false; dims.area()];
    let mut stack = Vec::new();
    for (sr, sc) in seeds.iter_set() {
        let start = sr * w + sc;
        if region[start] {
            continue;
        }
        let target = grid.get(sr, sc);
        region[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (r, c) = (i / w, i % w);
            let mut visit = |j: usize| {
                if !region[j] && grid.cells()[j] == target {
                    region[j] = true;
                    stack.push(j);
                }
            };
            if r > 0 {
                visit(i - w);
            }
            if r + 1 < h {
                visit(i + w);
            }
            if c > 0 {
                visit(i - 1);
            }
            if c + 1 < w {
                visit(i + 1);
            }
        }
    }
    for (i, hit) in region.into_iter().enumerate() {
        if hit {
            grid.set(i / w, i % w, color);
        }
    }
}
