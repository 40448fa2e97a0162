//! Environment state and its agent-facing observation view.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::grid::{overlay_into, Dims, Grid, Pos, Selection};

/// The lifted object of the two-layer mechanism.
///
/// While an object is active the visible grid is always
/// `overlay(background, pixels, pos, mask)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectLayer {
    /// Grid-sized footprint of the object as currently rendered.
    pub selected: Selection,
    /// Lifted pixels; unselected cells inside the bounding box are black.
    pub pixels: Grid,
    /// Exact selected shape, same dims as `pixels`.
    pub mask: Selection,
    /// Top-left corner of the object's box on the grid. May lie off-grid.
    pub pos: Pos,
    /// Rounding toggle for box-swapping transforms, so that two quarter
    /// turns land exactly where one half turn does.
    pub rotation_parity: bool,
    /// Grid with the lifted pixels removed.
    pub background: Grid,
}

impl ObjectLayer {
    pub fn dims(&self) -> Dims {
        self.pixels.dims()
    }

    /// Composites the object over the background.
    pub fn render(&self) -> Grid {
        let mut out = self.background.clone();
        overlay_into(&mut out, &self.pixels, self.pos, &self.mask);
        out
    }

    /// Grid-sized mask of the object's selected cells at its current
    /// position, clipped to the grid.
    pub fn footprint(&self) -> Selection {
        let dims = self.background.dims();
        let mut sel = Selection::empty(dims);
        for (r, c) in self.mask.iter_set() {
            let (gr, gc) = (self.pos.row + r as i64, self.pos.col + c as i64);
            if dims.contains(gr, gc) {
                sel.set(gr as usize, gc as usize, true);
            }
        }
        sel
    }
}

/// Full environment state. The answer is hidden from agents unless the
/// environment is configured to expose it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvState {
    pub input: Grid,
    pub grid: Grid,
    pub clip: Option<Grid>,
    pub object: Option<ObjectLayer>,
    answer: Grid,
    pub terminated: bool,
    pub step_count: u32,
}

impl EnvState {
    /// Fresh episode state: the editable grid starts as a copy of the input.
    pub fn new(input: Grid, answer: Grid) -> Self {
        EnvState {
            grid: input.clone(),
            input,
            clip: None,
            object: None,
            answer,
            terminated: false,
            step_count: 0,
        }
    }

    pub fn answer(&self) -> &Grid {
        &self.answer
    }

    pub fn is_object_active(&self) -> bool {
        self.object.is_some()
    }

    pub fn view(&self, expose_answer: bool) -> Observation<'_> {
        Observation {
            state: self,
            expose_answer,
        }
    }
}

/// Borrowed view of an [`EnvState`] as an agent sees it.
///
/// Serializes every state variable; `answer`/`answer_dim` are present only
/// when exposed, never as nulls.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    state: &'a EnvState,
    expose_answer: bool,
}

impl<'a> Observation<'a> {
    pub fn state(&self) -> &'a EnvState {
        self.state
    }

    pub fn grid(&self) -> &'a Grid {
        &self.state.grid
    }

    pub fn answer(&self) -> Option<&'a Grid> {
        self.expose_answer.then_some(&self.state.answer)
    }
}

struct ObjectStates<'a>(Option<&'a ObjectLayer>);

impl Serialize for ObjectStates<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            None => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("active", &false)?;
                m.end()
            }
            Some(obj) => {
                let mut m = s.serialize_map(Some(8))?;
                m.serialize_entry("active", &true)?;
                m.serialize_entry("selected", &obj.selected)?;
                m.serialize_entry("object", &obj.pixels)?;
                m.serialize_entry("object_sel", &obj.mask)?;
                m.serialize_entry("object_dim", &obj.dims())?;
                m.serialize_entry("object_pos", &[obj.pos.row, obj.pos.col])?;
                m.serialize_entry("rotation_parity", &(obj.rotation_parity as u8))?;
                m.serialize_entry("background", &obj.background)?;
                m.end()
            }
        }
    }
}

impl Serialize for Observation<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let st = self.state;
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("input", &st.input)?;
        m.serialize_entry("input_dim", &st.input.dims())?;
        m.serialize_entry("grid", &st.grid)?;
        m.serialize_entry("grid_dim", &st.grid.dims())?;
        match &st.clip {
            Some(clip) => {
                m.serialize_entry("clip", clip)?;
                m.serialize_entry("clip_dim", &clip.dims())?;
            }
            None => {
                m.serialize_entry("clip", &[(); 0])?;
                m.serialize_entry("clip_dim", &[0, 0])?;
            }
        }
        m.serialize_entry("object_states", &ObjectStates(st.object.as_ref()))?;
        if self.expose_answer {
            m.serialize_entry("answer", &st.answer)?;
            m.serialize_entry("answer_dim", &st.answer.dims())?;
        }
        m.serialize_entry("terminated", &st.terminated)?;
        m.serialize_entry("step_count", &st.step_count)?;
        m.end()
    }
}
