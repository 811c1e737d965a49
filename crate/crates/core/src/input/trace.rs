//! Newline-delimited trace files.
//!
//! The first line is a `header` record; each following line is one event record.
//! Records are flat JSON objects whose `type` field is one of `contact`, `gaze`,
//! `head` or `command`. Canonical field order:
//!
//! | type      | fields after `type`                                            |
//! |-----------|----------------------------------------------------------------|
//! | `header`  | version, technique, seed, tablet_width_cm, tablet_height_cm, bezel_width_cm, screens, columns, rows, diagonal_inch, aspect_ratio, radius_cm, horizontal_gap_deg, vertical_gap_cm |
//! | `contact` | t, id, phase, x, y                                             |
//! | `gaze`    | t, ox, oy, oz, dx, dy, dz                                      |
//! | `head`    | t, px, py, pz, qw, qx, qy, qz                                  |
//! | `command` | t, cmd, arg (only for `select_layer` / `toggle_visibility`)    |
//!
//! Event numbers are written with six decimals (seconds and centimetres). Header
//! reals use the shortest exact decimal form so a configuration survives the trip
//! unchanged.

use std::collections::BTreeSet;

use nalgebra::Quaternion;
use serde::Deserialize;

use super::{Command, CommandEvent, ContactEvent, GazeSample, HeadPoseEvent, Phase, TabletConfig, TraceEvent};
use crate::error::TraceError;
use crate::geometry::{LayoutConfig, Vec3};
use crate::records::Record;
use crate::routing::TechniqueKind;

pub const TRACE_VERSION: u32 = 1;

const DIRECTION_TOLERANCE: f64 = 1e-6;
const QUATERNION_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceHeader {
    pub version: u32,
    pub technique: TechniqueKind,
    pub seed: u64,
    pub tablet: TabletConfig,
    pub layout: LayoutConfig,
}

impl Default for TraceHeader {
    fn default() -> Self {
        Self {
            version: TRACE_VERSION,
            technique: TechniqueKind::GazeTouch,
            seed: 0,
            tablet: TabletConfig::default(),
            layout: LayoutConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InputTrace {
    pub header: TraceHeader,
    pub events: Vec<TraceEvent>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum RawRecord {
    Header {
        version: u32,
        technique: TechniqueKind,
        seed: u64,
        tablet_width_cm: f64,
        tablet_height_cm: f64,
        bezel_width_cm: f64,
        screens: u32,
        columns: u32,
        rows: u32,
        diagonal_inch: f64,
        aspect_ratio: f64,
        radius_cm: f64,
        horizontal_gap_deg: f64,
        vertical_gap_cm: f64,
    },
    Contact {
        t: Option<f64>,
        id: u32,
        phase: Phase,
        x: f64,
        y: f64,
    },
    Gaze {
        t: Option<f64>,
        ox: f64,
        oy: f64,
        oz: f64,
        dx: f64,
        dy: f64,
        dz: f64,
    },
    Head {
        t: Option<f64>,
        px: f64,
        py: f64,
        pz: f64,
        qw: f64,
        qx: f64,
        qy: f64,
        qz: f64,
    },
    Command {
        t: Option<f64>,
        cmd: String,
        arg: Option<usize>,
    },
}

pub fn serialize_header(h: &TraceHeader) -> String {
    Record::new("header")
        .int("version", h.version)
        .text("technique", h.technique.as_str())
        .int("seed", h.seed)
        .exact("tablet_width_cm", h.tablet.active_width_cm)
        .exact("tablet_height_cm", h.tablet.active_height_cm)
        .exact("bezel_width_cm", h.tablet.bezel_width_cm)
        .int("screens", h.layout.screen_count)
        .int("columns", h.layout.columns)
        .int("rows", h.layout.rows)
        .exact("diagonal_inch", h.layout.diagonal_inch)
        .exact("aspect_ratio", h.layout.aspect_ratio)
        .exact("radius_cm", h.layout.radius_cm)
        .exact("horizontal_gap_deg", h.layout.horizontal_gap_deg)
        .exact("vertical_gap_cm", h.layout.vertical_gap_cm)
        .finish()
}

/// Canonical single-line form of one event.
pub fn serialize_event(event: &TraceEvent) -> String {
    match event {
        TraceEvent::Contact(e) => Record::new("contact")
            .num("t", e.t)
            .int("id", e.contact_id)
            .text("phase", e.phase.as_str())
            .num("x", e.x_cm)
            .num("y", e.y_cm)
            .finish(),
        TraceEvent::Gaze(e) => Record::new("gaze")
            .num("t", e.t)
            .num("ox", e.origin.x)
            .num("oy", e.origin.y)
            .num("oz", e.origin.z)
            .num("dx", e.direction.x)
            .num("dy", e.direction.y)
            .num("dz", e.direction.z)
            .finish(),
        TraceEvent::Head(e) => Record::new("head")
            .num("t", e.t)
            .num("px", e.position.x)
            .num("py", e.position.y)
            .num("pz", e.position.z)
            .num("qw", e.orientation.w)
            .num("qx", e.orientation.i)
            .num("qy", e.orientation.j)
            .num("qz", e.orientation.k)
            .finish(),
        TraceEvent::Command(e) => {
            let rec = Record::new("command").num("t", e.t).text("cmd", e.command.name());
            match e.command.arg() {
                Some(arg) => rec.int("arg", arg).finish(),
                None => rec.finish(),
            }
        }
    }
}

pub fn serialize_trace(trace: &InputTrace) -> String {
    let mut out = serialize_header(&trace.header);
    out.push('\n');
    for e in &trace.events {
        out.push_str(&serialize_event(e));
        out.push('\n');
    }
    out
}

fn finite(values: &[f64]) -> Result<(), String> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err("non-finite number".into())
    }
}

/// Parses one event record. A missing `t` is replaced with `default_t`; when that
/// is `None` the timestamp is required.
pub fn parse_event_line(line: &str, default_t: Option<f64>) -> Result<TraceEvent, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let stamp = |t: Option<f64>| -> Result<f64, String> {
        let t = t.or(default_t).ok_or("missing `t`")?;
        if t.is_finite() && t >= 0.0 {
            Ok(t)
        } else {
            Err(format!("invalid timestamp {t}"))
        }
    };
    Ok(match raw {
        RawRecord::Header { .. } => return Err("unexpected header record".into()),
        RawRecord::Contact { t, id, phase, x, y } => {
            finite(&[x, y])?;
            TraceEvent::Contact(ContactEvent::new(stamp(t)?, id, phase, x, y))
        }
        RawRecord::Gaze { t, ox, oy, oz, dx, dy, dz } => {
            finite(&[ox, oy, oz, dx, dy, dz])?;
            let direction = Vec3::new(dx, dy, dz);
            if (direction.norm() - 1.0).abs() > DIRECTION_TOLERANCE {
                return Err(format!("gaze direction has length {}", direction.norm()));
            }
            TraceEvent::Gaze(GazeSample {
                t: stamp(t)?,
                origin: Vec3::new(ox, oy, oz),
                direction,
            })
        }
        RawRecord::Head { t, px, py, pz, qw, qx, qy, qz } => {
            finite(&[px, py, pz, qw, qx, qy, qz])?;
            let orientation = Quaternion::new(qw, qx, qy, qz);
            if (orientation.norm() - 1.0).abs() > QUATERNION_TOLERANCE {
                return Err(format!("head orientation has norm {}", orientation.norm()));
            }
            TraceEvent::Head(HeadPoseEvent {
                t: stamp(t)?,
                position: Vec3::new(px, py, pz),
                orientation,
            })
        }
        RawRecord::Command { t, cmd, arg } => TraceEvent::Command(CommandEvent {
            t: stamp(t)?,
            command: Command::from_parts(&cmd, arg)?,
        }),
    })
}

pub fn parse_header_line(line: &str) -> Result<TraceHeader, String> {
    match serde_json::from_str::<RawRecord>(line).map_err(|e| e.to_string())? {
        RawRecord::Header {
            version,
            technique,
            seed,
            tablet_width_cm,
            tablet_height_cm,
            bezel_width_cm,
            screens,
            columns,
            rows,
            diagonal_inch,
            aspect_ratio,
            radius_cm,
            horizontal_gap_deg,
            vertical_gap_cm,
        } => {
            if version != TRACE_VERSION {
                return Err(format!("unsupported trace version {version}, expected {TRACE_VERSION}"));
            }
            Ok(TraceHeader {
                version,
                technique,
                seed,
                tablet: TabletConfig {
                    active_width_cm: tablet_width_cm,
                    active_height_cm: tablet_height_cm,
                    bezel_width_cm,
                },
                layout: LayoutConfig {
                    screen_count: screens,
                    columns,
                    rows,
                    diagonal_inch,
                    aspect_ratio,
                    radius_cm,
                    horizontal_gap_deg,
                    vertical_gap_cm,
                },
            })
        }
        _ => Err("first record must be a header".into()),
    }
}

/// Parses a whole trace, checking time order and per-contact phase order.
pub fn parse_trace(bytes: &[u8]) -> Result<InputTrace, TraceError> {
    let text = std::str::from_utf8(bytes).map_err(|e| TraceError::Malformed {
        line: 1,
        reason: format!("not UTF-8: {e}"),
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty());
    let (line_no, first) = lines.next().ok_or(TraceError::Malformed {
        line: 1,
        reason: "empty trace".into(),
    })?;
    let header = parse_header_line(first).map_err(|reason| TraceError::Malformed { line: line_no, reason })?;

    let mut events = Vec::new();
    let mut prev_t: Option<f64> = None;
    let mut down = BTreeSet::new();
    for (line, text) in lines {
        let event = parse_event_line(text, None).map_err(|reason| TraceError::Malformed { line, reason })?;
        let t = event.t();
        if let Some(prev) = prev_t {
            if t < prev {
                return Err(TraceError::NonMonotonicLine { line, t, prev });
            }
        }
        prev_t = Some(t);
        if let TraceEvent::Contact(c) = &event {
            let ok = match c.phase {
                Phase::Down => down.insert(c.contact_id),
                Phase::Move => down.contains(&c.contact_id),
                Phase::Up => down.remove(&c.contact_id),
            };
            if !ok {
                return Err(TraceError::Malformed {
                    line,
                    reason: format!("contact {} phase `{}` out of sequence", c.contact_id, c.phase.as_str()),
                });
            }
        }
        events.push(event);
    }
    Ok(InputTrace { header, events })
}
