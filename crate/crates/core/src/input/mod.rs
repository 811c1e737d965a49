//! Input vocabulary: tablet contacts, gaze rays, head poses and discrete commands.
//!
//! Tablet coordinates are centimetres with the origin at the bottom-left corner of
//! the active area; bezel positions extend into negative `x`/`y` or beyond the
//! active width.

mod gesture;
mod trace;

pub use gesture::{GestureEvent, GestureKind, GestureParams, GestureRecognizer};
pub use trace::{parse_event_line, parse_trace, serialize_event, serialize_trace, InputTrace, TraceHeader, TRACE_VERSION};

use nalgebra::{Quaternion, UnitQuaternion};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geometry::{non_negative, positive, Pose, Vec3, CM_PER_INCH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabletConfig {
    pub active_width_cm: f64,
    pub active_height_cm: f64,
    /// Width of the touch-sensitive bezel strip on the left, right and bottom edges.
    pub bezel_width_cm: f64,
}

impl Default for TabletConfig {
    /// A 10.1 inch 16:10 tablet with a 2 cm bezel.
    fn default() -> Self {
        Self::from_diagonal(10.1, 16.0 / 10.0, 2.0)
    }
}

impl TabletConfig {
    pub fn from_diagonal(diagonal_inch: f64, aspect_ratio: f64, bezel_width_cm: f64) -> Self {
        let diagonal = diagonal_inch * CM_PER_INCH;
        let norm = aspect_ratio.hypot(1.0);
        Self {
            active_width_cm: diagonal * aspect_ratio / norm,
            active_height_cm: diagonal / norm,
            bezel_width_cm,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("tablet.active_width_cm", self.active_width_cm)?;
        positive("tablet.active_height_cm", self.active_height_cm)?;
        non_negative("tablet.bezel_width_cm", self.bezel_width_cm)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.active_width_cm / 2.0, self.active_height_cm / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Surface,
    BezelLeft,
    BezelRight,
    BezelBottom,
    Outside,
}

impl Region {
    pub fn is_bezel(self) -> bool {
        matches!(self, Region::BezelLeft | Region::BezelRight | Region::BezelBottom)
    }
}

/// Assigns a tablet point to exactly one region. The active area is closed. The
/// bezel strips are closed on their outer edge; the two bottom corners belong to
/// the bottom strip. There is no top bezel.
pub fn classify_contact(tablet: &TabletConfig, x_cm: f64, y_cm: f64) -> Region {
    let w = tablet.active_width_cm;
    let h = tablet.active_height_cm;
    let b = tablet.bezel_width_cm;
    if !(x_cm.is_finite() && y_cm.is_finite()) {
        return Region::Outside;
    }
    if y_cm > h || y_cm < -b || x_cm < -b || x_cm > w + b {
        return Region::Outside;
    }
    if (0.0..=w).contains(&x_cm) && y_cm >= 0.0 {
        return Region::Surface;
    }
    if y_cm < 0.0 {
        Region::BezelBottom
    } else if x_cm < 0.0 {
        Region::BezelLeft
    } else {
        Region::BezelRight
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Down,
    Move,
    Up,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Down => "down",
            Phase::Move => "move",
            Phase::Up => "up",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub t: f64,
    pub contact_id: u32,
    pub phase: Phase,
    pub x_cm: f64,
    pub y_cm: f64,
}

impl ContactEvent {
    pub fn new(t: f64, contact_id: u32, phase: Phase, x_cm: f64, y_cm: f64) -> Self {
        Self { t, contact_id, phase, x_cm, y_cm }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub t: f64,
    pub origin: Vec3,
    pub direction: Vec3,
}

/// Head pose as recorded. The quaternion is stored as written so that traces
/// round-trip exactly; [`HeadPoseEvent::pose`] normalises it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadPoseEvent {
    pub t: f64,
    pub position: Vec3,
    pub orientation: Quaternion<f64>,
}

impl HeadPoseEvent {
    pub fn from_pose(t: f64, pose: &Pose) -> Self {
        Self {
            t,
            position: pose.position,
            orientation: *pose.orientation.quaternion(),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position, UnitQuaternion::from_quaternion(self.orientation))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SelectLayer(usize),
    ToggleVisibility(usize),
    ShowAll,
    Next,
    GrabOverride,
    ReleaseOverride,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SelectLayer(_) => "select_layer",
            Command::ToggleVisibility(_) => "toggle_visibility",
            Command::ShowAll => "show_all",
            Command::Next => "next",
            Command::GrabOverride => "grab_override",
            Command::ReleaseOverride => "release_override",
        }
    }

    pub fn arg(&self) -> Option<usize> {
        match *self {
            Command::SelectLayer(i) | Command::ToggleVisibility(i) => Some(i),
            _ => None,
        }
    }

    pub fn from_parts(name: &str, arg: Option<usize>) -> Result<Self, String> {
        let need = |arg: Option<usize>| arg.ok_or_else(|| format!("command `{name}` needs an `arg`"));
        Ok(match name {
            "select_layer" => Command::SelectLayer(need(arg)?),
            "toggle_visibility" => Command::ToggleVisibility(need(arg)?),
            "show_all" => Command::ShowAll,
            "next" => Command::Next,
            "grab_override" => Command::GrabOverride,
            "release_override" => Command::ReleaseOverride,
            other => return Err(format!("unknown command `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandEvent {
    pub t: f64,
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    Contact(ContactEvent),
    Gaze(GazeSample),
    Head(HeadPoseEvent),
    Command(CommandEvent),
}

impl TraceEvent {
    pub fn t(&self) -> f64 {
        match self {
            TraceEvent::Contact(e) => e.t,
            TraceEvent::Gaze(e) => e.t,
            TraceEvent::Head(e) => e.t,
            TraceEvent::Command(e) => e.t,
        }
    }

    pub fn set_t(&mut self, t: f64) {
        match self {
            TraceEvent::Contact(e) => e.t = t,
            TraceEvent::Gaze(e) => e.t = t,
            TraceEvent::Head(e) => e.t = t,
            TraceEvent::Command(e) => e.t = t,
        }
    }

    pub fn command(t: f64, command: Command) -> Self {
        TraceEvent::Command(CommandEvent { t, command })
    }

    pub fn gaze(t: f64, origin: Vec3, direction: Vec3) -> Self {
        TraceEvent::Gaze(GazeSample { t, origin, direction })
    }

    pub fn contact(t: f64, contact_id: u32, phase: Phase, x_cm: f64, y_cm: f64) -> Self {
        TraceEvent::Contact(ContactEvent::new(t, contact_id, phase, x_cm, y_cm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn default_tablet_matches_ten_inch_panel() {
        let t = TabletConfig::default();
        // 25.654 cm diagonal split 16:10 over sqrt(356).
        assert_abs_diff_eq!(t.active_width_cm, 25.654 * 16.0 / 356f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(t.active_width_cm, 21.75, epsilon = 0.01);
        assert_abs_diff_eq!(t.active_height_cm, 13.60, epsilon = 0.01);
        assert_eq!(t.bezel_width_cm, 2.0);
    }

    #[test]
    fn classification_examples() {
        let t = TabletConfig::default();
        assert_eq!(classify_contact(&t, 10.0, 6.0), Region::Surface);
        assert_eq!(classify_contact(&t, -1.0, 6.0), Region::BezelLeft);
        assert_eq!(classify_contact(&t, -2.5, 6.0), Region::Outside);
        assert_eq!(classify_contact(&t, t.active_width_cm + 1.0, 6.0), Region::BezelRight);
        assert_eq!(classify_contact(&t, 10.0, -1.0), Region::BezelBottom);
        assert_eq!(classify_contact(&t, -1.0, -1.0), Region::BezelBottom);
        assert_eq!(classify_contact(&t, 10.0, t.active_height_cm + 0.5), Region::Outside);
        assert_eq!(classify_contact(&t, 0.0, 0.0), Region::Surface);
        assert_eq!(classify_contact(&t, -2.0, 3.0), Region::BezelLeft);
        assert_eq!(classify_contact(&t, f64::NAN, 3.0), Region::Outside);
    }

    proptest! {
        // Each point lands in exactly one region, and the region agrees with an
        // independent description of the strips.
        #[test]
        fn classification_partitions_plane(x in -5.0f64..30.0, y in -5.0f64..20.0) {
            let t = TabletConfig::default();
            let (w, h, b) = (t.active_width_cm, t.active_height_cm, t.bezel_width_cm);
            let surface = x >= 0.0 && x <= w && y >= 0.0 && y <= h;
            let bottom = !surface && y >= -b && y < 0.0 && x >= -b && x <= w + b;
            let left = !surface && !bottom && x >= -b && x < 0.0 && y >= 0.0 && y <= h;
            let right = !surface && !bottom && x > w && x <= w + b && y >= 0.0 && y <= h;
            let inside = [surface, bottom, left, right];
            prop_assert!(inside.iter().filter(|&&f| f).count() <= 1);
            let expected = if surface { Region::Surface }
                else if bottom { Region::BezelBottom }
                else if left { Region::BezelLeft }
                else if right { Region::BezelRight }
                else { Region::Outside };
            prop_assert_eq!(classify_contact(&t, x, y), expected);
        }
    }
}
