//! Depth layers stacked behind the physical screen.
//!
//! Layer 0 is frontmost. In the aligned view the active layer sits at screen depth,
//! layers behind it recede by `spacing_cm` each and layers in front of it are
//! flagged transparent. The flat view puts everything at screen depth.

use serde::{Deserialize, Serialize};

use crate::error::{CapacityError, ConfigError, InputError};
use crate::geometry::{non_negative, positive, Pose, VirtualScreen};
use crate::routing::quantize;

/// Largest ring size the explosion capacity search considers.
const MAX_EXPLOSION_SLOTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ViewMode {
    Aligned,
    Flat,
    Explosion,
    Parallax { gain: f64 },
}

impl ViewMode {
    pub fn name(&self) -> &'static str {
        match self {
            ViewMode::Aligned => "aligned",
            ViewMode::Flat => "flat",
            ViewMode::Explosion => "explosion",
            ViewMode::Parallax { .. } => "parallax",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackParams {
    pub layer_count: usize,
    pub spacing_cm: f64,
    pub swipe_cm_per_layer: f64,
    /// Drop the partial swipe when the two-finger gesture ends.
    pub reset_swipe_on_end: bool,
    pub view_mode: ViewMode,
}

impl Default for StackParams {
    fn default() -> Self {
        Self {
            layer_count: 1,
            spacing_cm: 2.5,
            swipe_cm_per_layer: 2.0,
            reset_swipe_on_end: true,
            view_mode: ViewMode::Aligned,
        }
    }
}

impl StackParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.layer_count == 0 {
            return Err(ConfigError::Invalid("stack.layer_count must be at least 1".into()));
        }
        non_negative("stack.spacing_cm", self.spacing_cm)?;
        positive("stack.swipe_cm_per_layer", self.swipe_cm_per_layer)?;
        if let ViewMode::Parallax { gain } = self.view_mode {
            non_negative("stack.view_mode.gain", gain)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub index: usize,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
    pub active_index: usize,
    pub spacing_cm: f64,
    pub swipe_cm_per_layer: f64,
    /// Partial swipe, kept in `[0, swipe_cm_per_layer)`.
    pub swipe_accum_cm: f64,
    pub view_mode: ViewMode,
    /// Set by [`LayerStack::show_all`]; cleared by selecting a layer.
    pub collapsed: bool,
}

/// How one layer is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerView {
    pub index: usize,
    /// Depth behind the physical screen, cm.
    pub z_cm: f64,
    pub transparent: bool,
    pub visible: bool,
    /// Sideways shift under amplified parallax, cm.
    pub lateral_shift_cm: f64,
}

impl LayerStack {
    pub fn new(params: &StackParams) -> Result<Self, ConfigError> {
        params.validate()?;
        Ok(Self {
            layers: (0..params.layer_count).map(|index| Layer { index, visible: true }).collect(),
            active_index: 0,
            spacing_cm: params.spacing_cm,
            swipe_cm_per_layer: params.swipe_cm_per_layer,
            swipe_accum_cm: 0.0,
            view_mode: params.view_mode,
            collapsed: false,
        })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    fn check(&self, i: usize) -> Result<(), InputError> {
        if i < self.layers.len() {
            Ok(())
        } else {
            Err(InputError::LayerOutOfRange { index: i, count: self.layers.len() })
        }
    }

    /// Relative navigation: each full quantum moves one layer, positive deltas
    /// going deeper. Clamping at either end clears the partial swipe.
    pub fn swipe_layers(&mut self, delta_cm: f64) {
        let (steps, rest) = quantize(self.swipe_accum_cm, delta_cm, self.swipe_cm_per_layer);
        let target = self.active_index as i64 + steps;
        let last = self.layers.len() as i64 - 1;
        let (index, rest) = if target < 0 {
            (0, 0.0)
        } else if target > last {
            (last, 0.0)
        } else {
            (target, rest)
        };
        self.swipe_accum_cm = rest;
        if index as usize != self.active_index {
            self.active_index = index as usize;
            self.collapsed = false;
        }
    }

    pub fn end_swipe(&mut self) {
        self.swipe_accum_cm = 0.0;
    }

    pub fn select_layer(&mut self, i: usize) -> Result<(), InputError> {
        self.check(i)?;
        self.active_index = i;
        self.collapsed = false;
        Ok(())
    }

    pub fn toggle_visibility(&mut self, i: usize) -> Result<(), InputError> {
        self.check(i)?;
        self.layers[i].visible = !self.layers[i].visible;
        Ok(())
    }

    /// Collapses every layer onto the screen plane and makes them all visible.
    pub fn show_all(&mut self) {
        for layer in &mut self.layers {
            layer.visible = true;
        }
        self.collapsed = true;
    }

    fn flattened(&self) -> bool {
        self.collapsed || self.view_mode == ViewMode::Flat
    }

    /// Rendered depth of layer `j`.
    pub fn z_of(&self, j: usize) -> f64 {
        if self.flattened() {
            0.0
        } else {
            (j as f64 - self.active_index as f64) * self.spacing_cm
        }
    }

    pub fn is_transparent(&self, j: usize) -> bool {
        !self.flattened() && j < self.active_index
    }

    /// Rendered state of every layer for a head displaced `head_lateral_cm`
    /// sideways from the anchor.
    pub fn views(&self, head_lateral_cm: f64, viewing_distance_cm: f64) -> Vec<LayerView> {
        self.layers
            .iter()
            .map(|layer| {
                let z_cm = self.z_of(layer.index);
                let lateral_shift_cm = match self.view_mode {
                    ViewMode::Parallax { gain } => parallax_offset(head_lateral_cm, z_cm, gain, viewing_distance_cm),
                    _ => 0.0,
                };
                LayerView {
                    index: layer.index,
                    z_cm,
                    transparent: self.is_transparent(layer.index),
                    visible: layer.visible,
                    lateral_shift_cm,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeekParams {
    pub lean_threshold_cm: f64,
    /// How far below the threshold the head must return before peeking stops.
    pub lean_hysteresis_cm: f64,
    pub parallax_gain: f64,
    pub viewing_distance_cm: f64,
    pub explosion_radius_cm: f64,
    /// Size of an exploded layer relative to the physical screen.
    pub explosion_scale: f64,
}

impl Default for PeekParams {
    fn default() -> Self {
        Self {
            lean_threshold_cm: 10.0,
            lean_hysteresis_cm: 1.0,
            parallax_gain: 3.0,
            viewing_distance_cm: 50.0,
            explosion_radius_cm: 40.0,
            explosion_scale: 1.0,
        }
    }
}

impl PeekParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("peek.lean_threshold_cm", self.lean_threshold_cm)?;
        non_negative("peek.lean_hysteresis_cm", self.lean_hysteresis_cm)?;
        positive("peek.parallax_gain", self.parallax_gain)?;
        positive("peek.viewing_distance_cm", self.viewing_distance_cm)?;
        positive("peek.explosion_radius_cm", self.explosion_radius_cm)?;
        positive("peek.explosion_scale", self.explosion_scale)
    }
}

/// One exploded layer, coplanar with the physical screen.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub layer: usize,
    pub pose: Pose,
    pub width_cm: f64,
    pub height_cm: f64,
    /// Centre offset from the physical screen centre along its right and up axes.
    pub offset_cm: (f64, f64),
}

fn ring_offsets(n: usize, radius: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let a = (90.0 + k as f64 * 360.0 / n as f64).to_radians();
            (radius * a.cos(), radius * a.sin())
        })
        .collect()
}

/// Whether two axis-aligned rectangles given by centre and half extents share
/// interior points.
fn rects_overlap(a: (f64, f64), b: (f64, f64), half: (f64, f64), other_half: (f64, f64)) -> bool {
    (a.0 - b.0).abs() < half.0 + other_half.0 && (a.1 - b.1).abs() < half.1 + other_half.1
}

fn ring_fits(n: usize, screen: &VirtualScreen, params: &PeekParams) -> bool {
    let half_screen = (screen.width_cm / 2.0, screen.height_cm / 2.0);
    let half = (half_screen.0 * params.explosion_scale, half_screen.1 * params.explosion_scale);
    let offsets = ring_offsets(n, params.explosion_radius_cm);
    offsets.iter().enumerate().all(|(i, &a)| {
        !rects_overlap(a, (0.0, 0.0), half, half_screen) && offsets[i + 1..].iter().all(|&b| !rects_overlap(a, b, half, half))
    })
}

/// Most layers a single explosion ring can hold without overlaps.
pub fn explosion_capacity(screen: &VirtualScreen, params: &PeekParams) -> usize {
    (1..=MAX_EXPLOSION_SLOTS)
        .find(|&n| !ring_fits(n, screen, params))
        .map_or(MAX_EXPLOSION_SLOTS, |n| n - 1)
}

/// Scatters every layer onto equal slots of a ring around the physical screen,
/// starting directly above it and proceeding counter-clockwise.
pub fn explosion_layout(stack: &LayerStack, screen: &VirtualScreen, params: &PeekParams) -> Result<Vec<Placement>, CapacityError> {
    let n = stack.len();
    let max = explosion_capacity(screen, params);
    if n > max {
        return Err(CapacityError { requested: n, max });
    }
    let (w, h) = (screen.width_cm * params.explosion_scale, screen.height_cm * params.explosion_scale);
    let right = screen.center_pose.right();
    let up = screen.center_pose.up();
    Ok(ring_offsets(n, params.explosion_radius_cm)
        .into_iter()
        .enumerate()
        .map(|(layer, (dx, dy))| Placement {
            layer,
            pose: Pose::new(screen.center() + right * dx + up * dy, screen.center_pose.orientation),
            width_cm: w,
            height_cm: h,
            offset_cm: (dx, dy),
        })
        .collect())
}

/// Sideways shift of a layer at depth `layer_z_cm` when the head moves
/// `head_offset_cm` sideways. A gain of one is the natural parallax ratio.
pub fn parallax_offset(head_offset_cm: f64, layer_z_cm: f64, gain: f64, viewing_distance_cm: f64) -> f64 {
    gain * head_offset_cm * layer_z_cm / viewing_distance_cm
}

/// Forward lean of `head` relative to `anchor`, cm.
pub fn lean_cm(head: &Pose, anchor: &Pose) -> f64 {
    (head.position - anchor.position).dot(&anchor.forward())
}

/// Sideways head offset relative to `anchor`, cm.
pub fn lateral_cm(head: &Pose, anchor: &Pose) -> f64 {
    (head.position - anchor.position).dot(&anchor.right())
}

/// Lean-to-peek with release hysteresis: peeking starts at the threshold and ends
/// only once the lean drops below `threshold - hysteresis`.
pub fn peek_active(head: &Pose, anchor: &Pose, params: &PeekParams, was_active: bool) -> bool {
    let lean = lean_cm(head, anchor);
    if was_active {
        lean >= params.lean_threshold_cm - params.lean_hysteresis_cm
    } else {
        lean >= params.lean_threshold_cm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PeekState {
    pub active: bool,
}

impl PeekState {
    pub fn update(&mut self, head: &Pose, anchor: &Pose, params: &PeekParams) -> bool {
        self.active = peek_active(head, anchor, params, self.active);
        self.active
    }
}

/// A head pose `lean` cm forward and `lateral` cm sideways of `anchor`.
pub fn head_at(anchor: &Pose, lean: f64, lateral: f64) -> Pose {
    Pose::new(
        anchor.position + anchor.forward() * lean + anchor.right() * lateral,
        anchor.orientation,
    )
}
