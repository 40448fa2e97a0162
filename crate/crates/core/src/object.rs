//! Two-layer mechanism for object operations.
//!
//! The first object operation after a fresh selection lifts the selected
//! pixels into an object layer and leaves the rest as background. Later
//! object operations with an empty selection keep transforming the same
//! object; the grid is always re-rendered as background + object, so pixels
//! the object passes over are never destroyed.

use crate::grid::{Color, Dims, Grid, Pos, Selection};
use crate::ops::{Axis, Direction, Effect, NoOpReason, Rotation};
use crate::state::{EnvState, ObjectLayer};

/// Pixel rearrangements of an object box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Transform {
    Rot90,
    Rot180,
    Rot270,
    FlipH,
    FlipV,
    Transpose,
    AntiTranspose,
}

impl Transform {
    fn swaps_dims(self) -> bool {
        matches!(
            self,
            Transform::Rot90 | Transform::Rot270 | Transform::Transpose | Transform::AntiTranspose
        )
    }

    /// Source cell in an `h x w` box for output cell `(i, j)`.
    fn source(self, i: usize, j: usize, h: usize, w: usize) -> (usize, usize) {
        match self {
            Transform::Rot90 => (j, w - 1 - i),
            Transform::Rot180 => (h - 1 - i, w - 1 - j),
            Transform::Rot270 => (h - 1 - j, i),
            Transform::FlipH => (i, w - 1 - j),
            Transform::FlipV => (h - 1 - i, j),
            Transform::Transpose => (j, i),
            Transform::AntiTranspose => (h - 1 - j, w - 1 - i),
        }
    }

    fn out_dims(self, dims: Dims) -> Dims {
        if self.swaps_dims() {
            dims.transposed()
        } else {
            dims
        }
    }

    fn grid(self, src: &Grid) -> Grid {
        let (h, w) = (src.height(), src.width());
        let dims = self.out_dims(src.dims());
        let mut out = Grid::zeros(dims);
        for i in 0..dims.height() {
            for j in 0..dims.width() {
                let (r, c) = self.source(i, j, h, w);
                out.set(i, j, Color::new(src.get(r, c)).expect("valid cell"));
            }
        }
        out
    }

    fn mask(self, src: &Selection) -> Selection {
        let (h, w) = (src.dims().height(), src.dims().width());
        let dims = self.out_dims(src.dims());
        let mut out = Selection::empty(dims);
        for i in 0..dims.height() {
            for j in 0..dims.width() {
                let (r, c) = self.source(i, j, h, w);
                out.set(i, j, src.get(r, c));
            }
        }
        out
    }
}

impl From<Rotation> for Transform {
    fn from(r: Rotation) -> Self {
        match r {
            Rotation::Ccw90 => Transform::Rot90,
            Rotation::Ccw180 => Transform::Rot180,
            Rotation::Ccw270 => Transform::Rot270,
        }
    }
}

impl From<Axis> for Transform {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Horizontal => Transform::FlipH,
            Axis::Vertical => Transform::FlipV,
            Axis::Diagonal => Transform::Transpose,
            Axis::AntiDiagonal => Transform::AntiTranspose,
        }
    }
}

/// Lifts `sel` out of the grid into a fresh object layer.
pub fn lift(grid: &Grid, sel: &Selection) -> Option<ObjectLayer> {
    let bbox = sel.bounding_box()?;
    let mut background = grid.clone();
    for (r, c) in sel.iter_set() {
        background.set(r, c, Color::BLACK);
    }
    Some(ObjectLayer {
        selected: sel.clone(),
        pixels: grid.masked_patch(sel, bbox),
        mask: sel.restricted(bbox),
        pos: Pos::new(bbox.top as i64, bbox.left as i64),
        rotation_parity: false,
        background,
    })
}

/// Activation step shared by every object operation: a non-empty selection
/// lifts a new object from the current grid, an empty one continues with the
/// active object. Returns `false` when there is nothing to act on.
fn activate(state: &mut EnvState, sel: &Selection) -> bool {
    if !sel.is_empty() {
        state.object = lift(&state.grid, sel);
    }
    state.object.is_some()
}

fn finish(state: &mut EnvState) -> Effect {
    let obj = state.object.as_mut().expect("active object");
    obj.selected = obj.footprint();
    state.grid = obj.render();
    Effect::Applied
}

pub(crate) fn move_object(state: &mut EnvState, sel: &Selection, dir: Direction) -> Effect {
    if !activate(state, sel) {
        return Effect::NoOp(NoOpReason::EmptyObject);
    }
    let obj = state.object.as_mut().expect("active object");
    let (dr, dc) = dir.delta();
    obj.pos = Pos::new(obj.pos.row + dr, obj.pos.col + dc);
    finish(state)
}

pub(crate) fn rotate_object(state: &mut EnvState, sel: &Selection, rot: Rotation) -> Effect {
    transform_object(state, sel, rot.into())
}

pub(crate) fn flip_object(state: &mut EnvState, sel: &Selection, axis: Axis) -> Effect {
    transform_object(state, sel, axis.into())
}

fn transform_object(state: &mut EnvState, sel: &Selection, t: Transform) -> Effect {
    if !activate(state, sel) {
        return Effect::NoOp(NoOpReason::EmptyObject);
    }
    let obj = state.object.as_mut().expect("active object");
    if t.swaps_dims() {
        let (pos, parity) = recenter(obj.pos, obj.dims(), obj.rotation_parity);
        obj.pos = pos;
        obj.rotation_parity = parity;
    }
    obj.pixels = t.grid(&obj.pixels);
    obj.mask = t.mask(&obj.mask);
    finish(state)
}

/// New top-left corner for a box whose height and width are about to be
/// exchanged, keeping the box centre fixed.
///
/// In half-cell units the centre is `2*pos + (dims - 1)`. When `h - w` is odd
/// the new corner is fractional; parity 0 rounds down and parity 1 rounds
/// up, and the parity flips, so a pair of swaps always returns the corner
/// to where it started.
fn recenter(pos: Pos, dims: Dims, parity: bool) -> (Pos, bool) {
    let d = dims.height() as i64 - dims.width() as i64;
    let half = |v: i64| if parity { div_ceil(v, 2) } else { v.div_euclid(2) };
    (Pos::new(pos.row + half(d), pos.col + half(-d)), !parity)
}

fn div_ceil(v: i64, d: i64) -> i64 {
    -(-v).div_euclid(d)
}
