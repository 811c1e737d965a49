//! Gesture recognition over a single contact stream.
//!
//! The recogniser is causal: a long-press fires at `down + long_press_s` and is
//! reported the first time the stream (or [`GestureRecognizer::advance`]) reaches
//! that instant, stamped with the deadline itself.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{classify_contact, ContactEvent, Phase, Region, TabletConfig};
use crate::error::{ConfigError, TraceError};
use crate::geometry::{non_negative, positive};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GestureParams {
    pub long_press_s: f64,
    /// Drift allowed around the down point before a long-press is abandoned.
    pub movement_tolerance_cm: f64,
    /// Two contacts closer than this are not treated as a swipe pair.
    pub min_swipe_separation_cm: f64,
    /// Largest angle between the two contacts' motions that still counts as a swipe.
    pub max_swipe_angle_deg: f64,
}

impl Default for GestureParams {
    fn default() -> Self {
        Self {
            long_press_s: 0.5,
            movement_tolerance_cm: 0.3,
            min_swipe_separation_cm: 1.0,
            max_swipe_angle_deg: 45.0,
        }
    }
}

impl GestureParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        non_negative("gesture.long_press_s", self.long_press_s)?;
        non_negative("gesture.movement_tolerance_cm", self.movement_tolerance_cm)?;
        non_negative("gesture.min_swipe_separation_cm", self.min_swipe_separation_cm)?;
        positive("gesture.max_swipe_angle_deg", self.max_swipe_angle_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GestureKind {
    TwoFingerSwipe { delta_y_cm: f64 },
    LongPress { contact_id: u32, x_cm: f64, y_cm: f64 },
    BezelHold { active: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GestureEvent {
    pub t: f64,
    pub kind: GestureKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PressState {
    Pending { deadline: f64 },
    Done,
}

#[derive(Debug, Clone)]
struct Contact {
    region: Region,
    down: (f64, f64),
    pos: (f64, f64),
    press: PressState,
    swipe_ref: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct GestureRecognizer {
    tablet: TabletConfig,
    params: GestureParams,
    contacts: BTreeMap<u32, Contact>,
    bezel_down: usize,
    last_t: Option<f64>,
    index: usize,
}

impl GestureRecognizer {
    pub fn new(tablet: TabletConfig, params: GestureParams) -> Self {
        Self {
            tablet,
            params,
            contacts: BTreeMap::new(),
            bezel_down: 0,
            last_t: None,
            index: 0,
        }
    }

    pub fn surface_contacts(&self) -> usize {
        self.contacts.values().filter(|c| c.region == Region::Surface).count()
    }

    pub fn bezel_held(&self) -> bool {
        self.bezel_down > 0
    }

    /// Whether a pair of surface contacts is currently down.
    pub fn swipe_pair_active(&self) -> bool {
        self.surface_contacts() == 2
    }

    /// Fires long-presses whose deadline is at or before `t`.
    pub fn advance(&mut self, t: f64) -> Vec<GestureEvent> {
        let mut due: Vec<(f64, u32)> = self
            .contacts
            .iter()
            .filter_map(|(&id, c)| match c.press {
                PressState::Pending { deadline } if deadline <= t => Some((deadline, id)),
                _ => None,
            })
            .collect();
        due.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        due.into_iter()
            .map(|(deadline, id)| {
                let c = self.contacts.get_mut(&id).expect("due contact is tracked");
                c.press = PressState::Done;
                GestureEvent {
                    t: deadline,
                    kind: GestureKind::LongPress {
                        contact_id: id,
                        x_cm: c.down.0,
                        y_cm: c.down.1,
                    },
                }
            })
            .collect()
    }

    pub fn push(&mut self, ev: &ContactEvent) -> Result<Vec<GestureEvent>, TraceError> {
        let index = self.index;
        if let Some(prev) = self.last_t {
            if ev.t < prev {
                return Err(TraceError::NonMonotonic { index, t: ev.t, prev });
            }
        }
        let phase_err = |reason: &str| TraceError::Phase {
            index,
            contact_id: ev.contact_id,
            reason: reason.to_string(),
        };
        match ev.phase {
            Phase::Down if self.contacts.contains_key(&ev.contact_id) => return Err(phase_err("down while already down")),
            Phase::Move | Phase::Up if !self.contacts.contains_key(&ev.contact_id) => {
                return Err(phase_err("not down"))
            }
            _ => {}
        }

        let mut out = self.advance(ev.t);
        self.last_t = Some(ev.t);
        self.index += 1;
        let pos = (ev.x_cm, ev.y_cm);

        match ev.phase {
            Phase::Down => {
                let region = classify_contact(&self.tablet, ev.x_cm, ev.y_cm);
                let press = if region == Region::Surface {
                    PressState::Pending {
                        deadline: ev.t + self.params.long_press_s,
                    }
                } else {
                    PressState::Done
                };
                self.contacts.insert(
                    ev.contact_id,
                    Contact {
                        region,
                        down: pos,
                        pos,
                        press,
                        swipe_ref: pos,
                    },
                );
                if region.is_bezel() {
                    self.bezel_down += 1;
                    if self.bezel_down == 1 {
                        out.push(GestureEvent {
                            t: ev.t,
                            kind: GestureKind::BezelHold { active: true },
                        });
                    }
                }
                if region == Region::Surface && self.surface_contacts() >= 2 {
                    // A second finger turns the touch into a multi-finger gesture.
                    for c in self.contacts.values_mut().filter(|c| c.region == Region::Surface) {
                        c.press = PressState::Done;
                        c.swipe_ref = c.pos;
                    }
                }
            }
            Phase::Move => {
                let tol = self.params.movement_tolerance_cm;
                let c = self.contacts.get_mut(&ev.contact_id).expect("checked above");
                c.pos = pos;
                if matches!(c.press, PressState::Pending { .. })
                    && (pos.0 - c.down.0).hypot(pos.1 - c.down.1) > tol
                {
                    c.press = PressState::Done;
                }
                if c.region == Region::Surface && self.swipe_pair_active() {
                    if let Some(g) = self.try_swipe(ev.t) {
                        out.push(g);
                    }
                }
            }
            Phase::Up => {
                let c = self.contacts.remove(&ev.contact_id).expect("checked above");
                if c.region.is_bezel() {
                    self.bezel_down -= 1;
                    if self.bezel_down == 0 {
                        out.push(GestureEvent {
                            t: ev.t,
                            kind: GestureKind::BezelHold { active: false },
                        });
                    }
                }
                if c.region == Region::Surface && self.swipe_pair_active() {
                    for c in self.contacts.values_mut().filter(|c| c.region == Region::Surface) {
                        c.swipe_ref = c.pos;
                    }
                }
            }
        }
        Ok(out)
    }

    fn try_swipe(&mut self, t: f64) -> Option<GestureEvent> {
        let mut pair = self.contacts.values_mut().filter(|c| c.region == Region::Surface);
        let a = pair.next()?;
        let b = pair.next()?;
        let da = (a.pos.0 - a.swipe_ref.0, a.pos.1 - a.swipe_ref.1);
        let db = (b.pos.0 - b.swipe_ref.0, b.pos.1 - b.swipe_ref.1);
        let la = da.0.hypot(da.1);
        let lb = db.0.hypot(db.1);
        if la < 1e-12 || lb < 1e-12 {
            // Wait until both fingers have moved.
            return None;
        }
        let separation = (a.pos.0 - b.pos.0).hypot(a.pos.1 - b.pos.1);
        let cos = (da.0 * db.0 + da.1 * db.1) / (la * lb);
        a.swipe_ref = a.pos;
        b.swipe_ref = b.pos;
        if separation < self.params.min_swipe_separation_cm
            || cos < self.params.max_swipe_angle_deg.to_radians().cos()
        {
            return None;
        }
        let delta_y_cm = (da.1 + db.1) / 2.0;
        Some(GestureEvent {
            t,
            kind: GestureKind::TwoFingerSwipe { delta_y_cm },
        })
    }
}
