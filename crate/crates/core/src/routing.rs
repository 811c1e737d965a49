//! Cursor routing between the tablet and the virtual screens.
//!
//! A single surface contact drives the cursor on the active screen at `fine_gain`
//! (centimetres on the screen per centimetre on the tablet). Switching the active
//! screen happens either with the bimanual technique (hold the bezel, then drag
//! `coarse_cm_per_screen` per screen) or with gaze+touch (look past the target
//! screen's near edge by a fraction of its size). Switching never changes the
//! cursor's normalised position.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ConfigError, InputError, SceneError, TraceError};
use crate::geometry::{non_negative, positive, GridPos, ScaffoldLayout, ScreenCoord, VirtualScreen};
use crate::input::{classify_contact, ContactEvent, GazeSample, GestureEvent, GestureKind, Phase, Region, TabletConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechniqueKind {
    Bimanual,
    GazeTouch,
}

impl TechniqueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TechniqueKind::Bimanual => "bimanual",
            TechniqueKind::GazeTouch => "gaze_touch",
        }
    }
}

impl std::str::FromStr for TechniqueKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bimanual" => Ok(TechniqueKind::Bimanual),
            "gaze_touch" => Ok(TechniqueKind::GazeTouch),
            other => Err(format!("unknown technique `{other}`")),
        }
    }
}

/// How touching the tablet interacts with gaze switching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClutchMode {
    /// Gaze switching is always live.
    Study,
    /// Gaze switching is suspended while any surface contact is down.
    WindowManager,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TechniqueParams {
    pub fine_gain: f64,
    pub coarse_cm_per_screen: f64,
    pub gaze_spatial_threshold_frac: f64,
    pub gaze_temporal_threshold_s: f64,
    pub clutch_mode: ClutchMode,
}

impl Default for TechniqueParams {
    fn default() -> Self {
        Self {
            fine_gain: 1.0,
            coarse_cm_per_screen: 2.0,
            gaze_spatial_threshold_frac: 0.05,
            gaze_temporal_threshold_s: 0.0,
            clutch_mode: ClutchMode::Study,
        }
    }
}

impl TechniqueParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        non_negative("technique.fine_gain", self.fine_gain)?;
        positive("technique.coarse_cm_per_screen", self.coarse_cm_per_screen)?;
        non_negative("technique.gaze_spatial_threshold_frac", self.gaze_spatial_threshold_frac)?;
        non_negative("technique.gaze_temporal_threshold_s", self.gaze_temporal_threshold_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Technique {
    pub kind: TechniqueKind,
    pub params: TechniqueParams,
}

impl Technique {
    pub fn bimanual() -> Self {
        Self {
            kind: TechniqueKind::Bimanual,
            params: TechniqueParams::default(),
        }
    }

    pub fn gaze_touch() -> Self {
        Self {
            kind: TechniqueKind::GazeTouch,
            params: TechniqueParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteMode {
    Fine,
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: u32,
    pub owner_screen: u32,
    pub layer: usize,
    pub u: f64,
    pub v: f64,
    pub radius_cm: f64,
}

/// Items the router can pick up. Only items on `active_layer` are pickable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub items: Vec<Item>,
    pub active_layer: usize,
}

impl Scene {
    pub fn item(&self, id: u32) -> Option<&Item> {
        self.items.iter().find(|i| i.id == id)
    }

    pub fn item_mut(&mut self, id: u32) -> Option<&mut Item> {
        self.items.iter_mut().find(|i| i.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tracked {
    region: Region,
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouterState {
    pub active_screen: u32,
    pub cursor: ScreenCoord,
    pub mode: RouteMode,
    /// Coarse-mode drag not yet converted into screen steps, cm. Each axis stays in
    /// `[0, coarse_cm_per_screen)`.
    pub coarse_accum: (f64, f64),
    pub held_item: Option<u32>,
    /// Screen that currently satisfies the spatial threshold and when it started to.
    pub pending_gaze: Option<(u32, f64)>,
    contacts: BTreeMap<u32, Tracked>,
    last_t: Option<f64>,
    events_seen: usize,
}

impl RouterState {
    /// Cursor centred on the screen straight ahead.
    pub fn new(layout: &ScaffoldLayout) -> Self {
        Self::on_screen(layout.center_screen().id)
    }

    pub fn on_screen(screen_id: u32) -> Self {
        Self {
            active_screen: screen_id,
            cursor: ScreenCoord::new(screen_id, 0.5, 0.5),
            mode: RouteMode::Fine,
            coarse_accum: (0.0, 0.0),
            held_item: None,
            pending_gaze: None,
            contacts: BTreeMap::new(),
            last_t: None,
            events_seen: 0,
        }
    }

    pub fn surface_contacts(&self) -> usize {
        self.contacts.values().filter(|c| c.region == Region::Surface).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouterInput {
    Contact(ContactEvent),
    Gesture(GestureEvent),
    Gaze(GazeSample),
    /// Explicit pick-up at the cursor, bypassing long-press.
    Grab { t: f64 },
    /// Explicit drop at the cursor.
    Release { t: f64 },
}

impl RouterInput {
    pub fn t(&self) -> f64 {
        match self {
            RouterInput::Contact(e) => e.t,
            RouterInput::Gesture(e) => e.t,
            RouterInput::Gaze(e) => e.t,
            RouterInput::Grab { t } | RouterInput::Release { t } => *t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchCause {
    Gaze,
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RouterEffect {
    Switched { t: f64, from: u32, to: u32, cause: SwitchCause },
    Grabbed { t: f64, item: u32, screen: u32, u: f64, v: f64 },
    Released { t: f64, item: u32, screen: u32, u: f64, v: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Input(#[from] InputError),
}

/// Splits `accum + delta` into whole quanta (rounded towards negative infinity)
/// and a remainder in `[0, quantum)`.
pub fn quantize(accum: f64, delta: f64, quantum: f64) -> (i64, f64) {
    let x = accum + delta;
    let mut steps = (x / quantum).floor();
    let mut rest = x - steps * quantum;
    if rest < 0.0 {
        steps -= 1.0;
        rest += quantum;
    }
    if rest >= quantum {
        steps += 1.0;
        rest -= quantum;
    }
    (steps as i64, rest.max(0.0))
}

/// The routing rules for one layout, tablet and technique.
#[derive(Debug, Clone)]
pub struct Router<'a> {
    pub layout: &'a ScaffoldLayout,
    pub tablet: TabletConfig,
    pub technique: Technique,
}

impl<'a> Router<'a> {
    pub fn new(layout: &'a ScaffoldLayout, tablet: TabletConfig, technique: Technique) -> Self {
        Self { layout, tablet, technique }
    }

    fn screen(&self, id: u32) -> Result<&'a VirtualScreen, SceneError> {
        self.layout.screen(id).ok_or(SceneError::UnknownScreen(id))
    }

    pub fn step(&self, state: &mut RouterState, input: &RouterInput, scene: &mut Scene) -> Result<Vec<RouterEffect>, RoutingError> {
        let t = input.t();
        let index = state.events_seen;
        if let Some(prev) = state.last_t {
            if t < prev {
                return Err(TraceError::NonMonotonic { index, t, prev }.into());
            }
        }
        self.screen(state.active_screen)?;
        if let Some(id) = state.held_item {
            scene.item(id).ok_or(SceneError::UnknownItem(id))?;
        }

        let mut effects = Vec::new();
        match *input {
            RouterInput::Contact(c) => self.on_contact(state, &c, index, &mut effects)?,
            RouterInput::Gesture(g) => self.on_gesture(state, &g, scene, &mut effects)?,
            RouterInput::Gaze(g) => self.on_gaze(state, &g, &mut effects)?,
            RouterInput::Grab { t } => {
                if state.held_item.is_none() {
                    self.grab(state, t, scene, &mut effects)?;
                }
            }
            RouterInput::Release { t } => {
                if state.held_item.is_some() {
                    self.release(state, t, scene, &mut effects)?;
                }
            }
        }

        if let Some(id) = state.held_item {
            let item = scene.item_mut(id).ok_or(SceneError::UnknownItem(id))?;
            item.owner_screen = state.active_screen;
            item.u = state.cursor.u;
            item.v = state.cursor.v;
        }
        state.last_t = Some(t);
        state.events_seen += 1;
        Ok(effects)
    }

    fn on_contact(&self, state: &mut RouterState, c: &ContactEvent, index: usize, effects: &mut Vec<RouterEffect>) -> Result<(), RoutingError> {
        let phase_err = |reason: &str| TraceError::Phase {
            index,
            contact_id: c.contact_id,
            reason: reason.into(),
        };
        match c.phase {
            Phase::Down => {
                if state.contacts.contains_key(&c.contact_id) {
                    return Err(phase_err("down while already down").into());
                }
                let region = classify_contact(&self.tablet, c.x_cm, c.y_cm);
                state.contacts.insert(c.contact_id, Tracked { region, x: c.x_cm, y: c.y_cm });
                if region == Region::Surface && self.technique.params.clutch_mode == ClutchMode::WindowManager {
                    state.pending_gaze = None;
                }
            }
            Phase::Move => {
                let surface_count = state.surface_contacts();
                let tracked = state.contacts.get_mut(&c.contact_id).ok_or_else(|| phase_err("not down"))?;
                let (dx, dy) = (c.x_cm - tracked.x, c.y_cm - tracked.y);
                tracked.x = c.x_cm;
                tracked.y = c.y_cm;
                if tracked.region == Region::Surface && surface_count == 1 {
                    match state.mode {
                        RouteMode::Fine => self.move_cursor(state, dx, dy)?,
                        RouteMode::Coarse => self.coarse_drag(state, c.t, dx, dy, effects)?,
                    }
                }
            }
            Phase::Up => {
                state.contacts.remove(&c.contact_id).ok_or_else(|| phase_err("not down"))?;
            }
        }
        Ok(())
    }

    fn move_cursor(&self, state: &mut RouterState, dx: f64, dy: f64) -> Result<(), SceneError> {
        let screen = self.screen(state.active_screen)?;
        let gain = self.technique.params.fine_gain;
        state.cursor = ScreenCoord::clamped(
            state.active_screen,
            state.cursor.u + gain * dx / screen.width_cm,
            state.cursor.v + gain * dy / screen.height_cm,
        );
        Ok(())
    }

    fn coarse_drag(&self, state: &mut RouterState, t: f64, dx: f64, dy: f64, effects: &mut Vec<RouterEffect>) -> Result<(), SceneError> {
        let q = self.technique.params.coarse_cm_per_screen;
        let from = self.screen(state.active_screen)?.grid_pos;
        let (sx, rx) = quantize(state.coarse_accum.0, dx, q);
        let (sy, ry) = quantize(state.coarse_accum.1, dy, q);
        let (col, ax) = clamp_axis(from.col as i64 + sx, self.layout.columns, rx);
        let (row, ay) = clamp_axis(from.row as i64 + sy, self.layout.rows, ry);
        state.coarse_accum = (ax, ay);
        let to = GridPos::new(col, row);
        if to != from {
            let target = self.layout.screen_at(to).ok_or(SceneError::UnknownScreen(u32::MAX))?.id;
            self.switch_to(state, t, target, SwitchCause::Coarse, effects);
        }
        Ok(())
    }

    fn on_gesture(&self, state: &mut RouterState, g: &GestureEvent, scene: &mut Scene, effects: &mut Vec<RouterEffect>) -> Result<(), RoutingError> {
        match g.kind {
            GestureKind::BezelHold { active } => {
                state.coarse_accum = (0.0, 0.0);
                state.mode = if active && self.technique.kind == TechniqueKind::Bimanual {
                    RouteMode::Coarse
                } else {
                    RouteMode::Fine
                };
            }
            GestureKind::LongPress { .. } => {
                if state.held_item.is_some() {
                    self.release(state, g.t, scene, effects)?;
                } else {
                    self.grab(state, g.t, scene, effects)?;
                }
            }
            GestureKind::TwoFingerSwipe { .. } => {}
        }
        Ok(())
    }

    fn on_gaze(&self, state: &mut RouterState, g: &GazeSample, effects: &mut Vec<RouterEffect>) -> Result<(), RoutingError> {
        if self.technique.kind != TechniqueKind::GazeTouch {
            return Ok(());
        }
        let params = &self.technique.params;
        if params.clutch_mode == ClutchMode::WindowManager && state.surface_contacts() > 0 {
            state.pending_gaze = None;
            return Ok(());
        }
        let Some(hit) = self.layout.gaze_hit(&g.origin, &g.direction)? else {
            state.pending_gaze = None;
            return Ok(());
        };
        let target = hit.coord.screen_id;
        if target == state.active_screen {
            state.pending_gaze = None;
            return Ok(());
        }
        let from = self.screen(state.active_screen)?.grid_pos;
        let to = self.screen(target)?.grid_pos;
        if !penetrates(from, to, hit.coord.u, hit.coord.v, params.gaze_spatial_threshold_frac) {
            state.pending_gaze = None;
            return Ok(());
        }
        if params.gaze_temporal_threshold_s > 0.0 {
            match state.pending_gaze {
                Some((s, since)) if s == target => {
                    if g.t - since < params.gaze_temporal_threshold_s {
                        return Ok(());
                    }
                }
                _ => {
                    state.pending_gaze = Some((target, g.t));
                    return Ok(());
                }
            }
        }
        self.switch_to(state, g.t, target, SwitchCause::Gaze, effects);
        Ok(())
    }

    fn switch_to(&self, state: &mut RouterState, t: f64, to: u32, cause: SwitchCause, effects: &mut Vec<RouterEffect>) {
        let from = state.active_screen;
        state.active_screen = to;
        state.cursor.screen_id = to;
        state.pending_gaze = None;
        effects.push(RouterEffect::Switched { t, from, to, cause });
    }

    /// Picks up the nearest item on the active screen and layer whose disc contains
    /// the cursor. Ties go to the lower id.
    fn grab(&self, state: &mut RouterState, t: f64, scene: &Scene, effects: &mut Vec<RouterEffect>) -> Result<(), SceneError> {
        let screen = self.screen(state.active_screen)?;
        let mut best: Option<(f64, u32)> = None;
        for item in scene
            .items
            .iter()
            .filter(|i| i.owner_screen == screen.id && i.layer == scene.active_layer)
        {
            let d = ((item.u - state.cursor.u) * screen.width_cm).hypot((item.v - state.cursor.v) * screen.height_cm);
            if d <= item.radius_cm && best.is_none_or(|(bd, bid)| d < bd || (d == bd && item.id < bid)) {
                best = Some((d, item.id));
            }
        }
        if let Some((_, id)) = best {
            state.held_item = Some(id);
            effects.push(RouterEffect::Grabbed {
                t,
                item: id,
                screen: screen.id,
                u: state.cursor.u,
                v: state.cursor.v,
            });
        }
        Ok(())
    }

    fn release(&self, state: &mut RouterState, t: f64, scene: &mut Scene, effects: &mut Vec<RouterEffect>) -> Result<(), SceneError> {
        let Some(id) = state.held_item.take() else {
            return Ok(());
        };
        let item = scene.item_mut(id).ok_or(SceneError::UnknownItem(id))?;
        item.owner_screen = state.active_screen;
        item.u = state.cursor.u;
        item.v = state.cursor.v;
        effects.push(RouterEffect::Released {
            t,
            item: id,
            screen: state.active_screen,
            u: state.cursor.u,
            v: state.cursor.v,
        });
        Ok(())
    }
}

fn clamp_axis(target: i64, cells: u32, rest: f64) -> (i32, f64) {
    let max = cells as i64 - 1;
    if target < 0 {
        (0, 0.0)
    } else if target > max {
        (max as i32, 0.0)
    } else {
        (target as i32, rest)
    }
}

/// Whether a gaze point `(u, v)` on the screen at `to` lies far enough past the
/// edge it crossed coming from `from`. Each axis along which the grid position
/// changes imposes its own threshold.
pub fn penetrates(from: GridPos, to: GridPos, u: f64, v: f64, threshold: f64) -> bool {
    let horizontal = match to.col.cmp(&from.col) {
        std::cmp::Ordering::Greater => u >= threshold,
        std::cmp::Ordering::Less => u <= 1.0 - threshold,
        std::cmp::Ordering::Equal => true,
    };
    let vertical = match to.row.cmp(&from.row) {
        std::cmp::Ordering::Greater => v >= threshold,
        std::cmp::Ordering::Less => v <= 1.0 - threshold,
        std::cmp::Ordering::Equal => true,
    };
    horizontal && vertical
}

/// Absolute mapping of the tablet's active area onto a whole target screen.
pub fn retarget(x_cm: f64, y_cm: f64, tablet: &TabletConfig, target: &VirtualScreen) -> ScreenCoord {
    ScreenCoord::clamped(target.id, x_cm / tablet.active_width_cm, y_cm / tablet.active_height_cm)
}

/// Per-axis control-display gain implied by [`retarget`].
pub fn retarget_gain(tablet: &TabletConfig, target: &VirtualScreen) -> (f64, f64) {
    (
        target.width_cm / tablet.active_width_cm,
        target.height_cm / tablet.active_height_cm,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_layout, LayoutConfig, Pose, Vec3};
    use approx::assert_abs_diff_eq;

    fn layout15() -> ScaffoldLayout {
        build_layout(&LayoutConfig::fifteen_screens(), Pose::identity()).unwrap()
    }

    fn contact(t: f64, id: u32, phase: Phase, x: f64, y: f64) -> RouterInput {
        RouterInput::Contact(ContactEvent::new(t, id, phase, x, y))
    }

    fn bezel(t: f64, active: bool) -> RouterInput {
        RouterInput::Gesture(GestureEvent { t, kind: GestureKind::BezelHold { active } })
    }

    fn gaze_at(layout: &ScaffoldLayout, t: f64, screen: u32, u: f64, v: f64) -> RouterInput {
        let p = layout.screen(screen).unwrap().screen_to_world(u, v);
        RouterInput::Gaze(GazeSample { t, origin: Vec3::zeros(), direction: p.normalize() })
    }

    fn run(router: &Router, state: &mut RouterState, scene: &mut Scene, inputs: &[RouterInput]) -> Vec<RouterEffect> {
        inputs.iter().flat_map(|i| router.step(state, i, scene).unwrap()).collect()
    }

    #[test]
    fn fine_drag_is_one_to_one() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::bimanual());
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        let screen = layout.screen(state.active_screen).unwrap().clone();
        let before = screen.screen_to_world(state.cursor.u, state.cursor.v);
        run(&router, &mut state, &mut scene, &[contact(0.0, 1, Phase::Down, 10.0, 6.0), contact(0.1, 1, Phase::Move, 11.0, 5.5)]);
        let after = screen.screen_to_world(state.cursor.u, state.cursor.v);
        let d = after - before;
        assert_abs_diff_eq!(d.dot(&screen.center_pose.right()), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d.dot(&screen.center_pose.up()), -0.5, epsilon = 1e-9);
    }

    #[test]
    fn fine_cursor_clamps_at_edges() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::bimanual());
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        let start = state.active_screen;
        run(&router, &mut state, &mut scene, &[contact(0.0, 1, Phase::Down, 1.0, 6.0), contact(0.1, 1, Phase::Move, 1.0 + 20.0, 6.0), contact(0.2, 1, Phase::Up, 21.0, 6.0)]);
        run(&router, &mut state, &mut scene, &[contact(0.3, 1, Phase::Down, 1.0, 6.0), contact(0.4, 1, Phase::Move, 21.0, 6.0)]);
        assert_eq!(state.cursor.u, 1.0);
        assert!(state.cursor.clamped);
        assert_eq!(state.active_screen, start);
    }

    #[test]
    fn bezel_drag_switches_two_columns() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::bimanual());
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        state.cursor = ScreenCoord::new(state.active_screen, 0.3, 0.7);
        let start = layout.screen(state.active_screen).unwrap().grid_pos;
        let effects = run(
            &router,
            &mut state,
            &mut scene,
            &[bezel(0.0, true), contact(0.0, 1, Phase::Down, 5.0, 6.0), contact(0.1, 1, Phase::Move, 9.0, 6.0)],
        );
        let now = layout.screen(state.active_screen).unwrap().grid_pos;
        assert_eq!(now, GridPos::new(start.col + 2, start.row));
        assert_eq!(effects.len(), 1);
        assert_eq!((state.cursor.u, state.cursor.v), (0.3, 0.7));
        assert_eq!(state.cursor.screen_id, state.active_screen);
    }

    #[test]
    fn bezel_drag_below_quantum_accumulates() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::bimanual());
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        let start = state.active_screen;
        run(&router, &mut state, &mut scene, &[bezel(0.0, true), contact(0.0, 1, Phase::Down, 5.0, 6.0), contact(0.1, 1, Phase::Move, 6.9, 6.0)]);
        assert_eq!(state.active_screen, start);
        assert_abs_diff_eq!(state.coarse_accum.0, 1.9, epsilon = 1e-12);
        assert_eq!(state.mode, RouteMode::Coarse);
        run(&router, &mut state, &mut scene, &[bezel(0.2, false)]);
        assert_eq!(state.coarse_accum, (0.0, 0.0));
        assert_eq!(state.mode, RouteMode::Fine);
    }

    #[test]
    fn coarse_clamps_at_layout_edge() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::bimanual());
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        run(&router, &mut state, &mut scene, &[bezel(0.0, true), contact(0.0, 1, Phase::Down, 1.0, 6.0), contact(0.1, 1, Phase::Move, 20.0, 6.0)]);
        assert_eq!(layout.screen(state.active_screen).unwrap().grid_pos.col, 4);
        assert_eq!(state.coarse_accum.0, 0.0);
    }

    #[test]
    fn gaze_touch_ignores_bezel() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::gaze_touch());
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        run(&router, &mut state, &mut scene, &[bezel(0.0, true)]);
        assert_eq!(state.mode, RouteMode::Fine);
    }

    #[test]
    fn gaze_switch_respects_spatial_threshold() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::gaze_touch());
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        let a = state.active_screen;
        state.cursor = ScreenCoord::new(a, 0.3, 0.7);
        let b = a + 1;
        run(&router, &mut state, &mut scene, &[gaze_at(&layout, 0.0, b, 0.02, 0.5)]);
        assert_eq!(state.active_screen, a);
        let fx = run(&router, &mut state, &mut scene, &[gaze_at(&layout, 0.1, b, 0.06, 0.5)]);
        assert_eq!(state.active_screen, b);
        assert_eq!(state.cursor, ScreenCoord::new(b, 0.3, 0.7));
        assert_eq!(fx, vec![RouterEffect::Switched { t: 0.1, from: a, to: b, cause: SwitchCause::Gaze }]);
        // Back towards A: needs to be 5% inside A's right edge.
        run(&router, &mut state, &mut scene, &[gaze_at(&layout, 0.2, a, 0.97, 0.5)]);
        assert_eq!(state.active_screen, b);
        run(&router, &mut state, &mut scene, &[gaze_at(&layout, 0.3, a, 0.94, 0.5)]);
        assert_eq!(state.active_screen, a);
    }

    #[test]
    fn vertical_and_diagonal_thresholds() {
        assert!(!penetrates(GridPos::new(0, 0), GridPos::new(0, 1), 0.5, 0.04, 0.05));
        assert!(penetrates(GridPos::new(0, 0), GridPos::new(0, 1), 0.5, 0.05, 0.05));
        assert!(!penetrates(GridPos::new(0, 1), GridPos::new(0, 0), 0.5, 0.96, 0.05));
        assert!(!penetrates(GridPos::new(0, 0), GridPos::new(1, 1), 0.5, 0.01, 0.05));
        assert!(!penetrates(GridPos::new(0, 0), GridPos::new(1, 1), 0.01, 0.5, 0.05));
        assert!(penetrates(GridPos::new(0, 0), GridPos::new(1, 1), 0.2, 0.2, 0.05));
    }

    #[test]
    fn temporal_threshold_delays_switch() {
        let layout = layout15();
        let mut technique = Technique::gaze_touch();
        technique.params.gaze_temporal_threshold_s = 0.25;
        let router = Router::new(&layout, TabletConfig::default(), technique);
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        let a = state.active_screen;
        run(&router, &mut state, &mut scene, &[gaze_at(&layout, 1.0, a + 1, 0.5, 0.5), gaze_at(&layout, 1.2, a + 1, 0.5, 0.5)]);
        assert_eq!(state.active_screen, a);
        assert_eq!(state.pending_gaze, Some((a + 1, 1.0)));
        // Looking back resets the timer.
        run(&router, &mut state, &mut scene, &[gaze_at(&layout, 1.21, a, 0.5, 0.5), gaze_at(&layout, 1.3, a + 1, 0.5, 0.5), gaze_at(&layout, 1.5, a + 1, 0.5, 0.5)]);
        assert_eq!(state.active_screen, a);
        run(&router, &mut state, &mut scene, &[gaze_at(&layout, 1.55, a + 1, 0.5, 0.5)]);
        assert_eq!(state.active_screen, a + 1);
    }

    #[test]
    fn window_manager_clutch_holds_screen_while_touching() {
        let layout = layout15();
        let mut technique = Technique::gaze_touch();
        technique.params.clutch_mode = ClutchMode::WindowManager;
        let router = Router::new(&layout, TabletConfig::default(), technique);
        let mut state = RouterState::new(&layout);
        let mut scene = Scene::default();
        let a = state.active_screen;
        run(&router, &mut state, &mut scene, &[contact(0.0, 1, Phase::Down, 5.0, 5.0), gaze_at(&layout, 0.1, a + 1, 0.5, 0.5)]);
        assert_eq!(state.active_screen, a);
        run(&router, &mut state, &mut scene, &[contact(0.2, 1, Phase::Up, 5.0, 5.0), gaze_at(&layout, 0.3, a + 1, 0.5, 0.5)]);
        assert_eq!(state.active_screen, a + 1);
    }

    #[test]
    fn long_press_grabs_and_releases_with_transfer() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::gaze_touch());
        let mut state = RouterState::new(&layout);
        let a = state.active_screen;
        let mut scene = Scene {
            items: vec![Item { id: 4, owner_screen: a, layer: 0, u: 0.52, v: 0.5, radius_cm: 2.0 }],
            active_layer: 0,
        };
        let press = RouterInput::Gesture(GestureEvent { t: 0.5, kind: GestureKind::LongPress { contact_id: 1, x_cm: 0.0, y_cm: 0.0 } });
        let fx = run(&router, &mut state, &mut scene, &[press]);
        assert!(matches!(fx[..], [RouterEffect::Grabbed { item: 4, .. }]));
        run(&router, &mut state, &mut scene, &[gaze_at(&layout, 0.6, a + 5, 0.5, 0.5)]);
        assert_eq!(scene.items[0].owner_screen, a + 5);
        let release = RouterInput::Gesture(GestureEvent { t: 0.9, kind: GestureKind::LongPress { contact_id: 2, x_cm: 0.0, y_cm: 0.0 } });
        let fx = run(&router, &mut state, &mut scene, &[release]);
        assert!(matches!(fx[..], [RouterEffect::Released { item: 4, screen, .. }] if screen == a + 5));
        assert_eq!(state.held_item, None);
        assert_eq!((scene.items[0].u, scene.items[0].v), (0.5, 0.5));
    }

    #[test]
    fn long_press_off_item_grabs_nothing() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::gaze_touch());
        let mut state = RouterState::new(&layout);
        let a = state.active_screen;
        // 2.1 cm away on a 53 cm wide screen.
        let du = 2.1 / layout.screens[0].width_cm;
        let mut scene = Scene {
            items: vec![Item { id: 1, owner_screen: a, layer: 0, u: 0.5 + du, v: 0.5, radius_cm: 2.0 }],
            active_layer: 0,
        };
        let fx = run(&router, &mut state, &mut scene, &[RouterInput::Grab { t: 0.0 }]);
        assert!(fx.is_empty());
        scene.active_layer = 1;
        scene.items[0].u = 0.5;
        let fx = run(&router, &mut state, &mut scene, &[RouterInput::Grab { t: 0.1 }]);
        assert!(fx.is_empty(), "items on other layers are not pickable");
    }

    #[test]
    fn errors_for_unknown_references_and_time_travel() {
        let layout = layout15();
        let router = Router::new(&layout, TabletConfig::default(), Technique::gaze_touch());
        let mut scene = Scene::default();
        let mut state = RouterState::on_screen(99);
        assert_eq!(router.step(&mut state, &RouterInput::Grab { t: 0.0 }, &mut scene), Err(RoutingError::Scene(SceneError::UnknownScreen(99))));
        let mut state = RouterState::new(&layout);
        state.held_item = Some(3);
        assert_eq!(router.step(&mut state, &RouterInput::Grab { t: 0.0 }, &mut scene), Err(RoutingError::Scene(SceneError::UnknownItem(3))));
        let mut state = RouterState::new(&layout);
        router.step(&mut state, &RouterInput::Grab { t: 1.0 }, &mut scene).unwrap();
        assert!(matches!(router.step(&mut state, &RouterInput::Grab { t: 0.5 }, &mut scene), Err(RoutingError::Trace(TraceError::NonMonotonic { index: 1, .. }))));
    }

    #[test]
    fn retarget_maps_corners_and_center() {
        let layout = layout15();
        let tablet = TabletConfig::default();
        let s = &layout.screens[0];
        let c = retarget(0.0, 0.0, &tablet, s);
        assert_eq!((c.u, c.v), (0.0, 0.0));
        let c = retarget(tablet.active_width_cm / 2.0, tablet.active_height_cm / 2.0, &tablet, s);
        assert_abs_diff_eq!(c.u, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(c.v, 0.5, epsilon = 1e-12);
        let c = retarget(tablet.active_width_cm, tablet.active_height_cm, &tablet, s);
        assert_eq!((c.u, c.v, c.clamped), (1.0, 1.0, false));
        assert!(retarget(-1.0, 3.0, &tablet, s).clamped);
        // 53.13 / 21.75 by direct division.
        let (gx, _) = retarget_gain(&tablet, s);
        assert_abs_diff_eq!(gx, 53.131244743 / 21.754548491, epsilon = 1e-6);
        assert_abs_diff_eq!(gx, 2.44, epsilon = 0.005);
    }

    #[test]
    fn retarget_preserves_collinearity() {
        let layout = layout15();
        let tablet = TabletConfig::default();
        let s = &layout.screens[3];
        let pts = [(1.0, 2.0), (6.0, 5.0), (11.0, 8.0)];
        let m: Vec<_> = pts.iter().map(|&(x, y)| retarget(x, y, &tablet, s)).collect();
        let cross = (m[1].u - m[0].u) * (m[2].v - m[0].v) - (m[1].v - m[0].v) * (m[2].u - m[0].u);
        assert_abs_diff_eq!(cross, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quantize_floor_semantics() {
        assert_eq!(quantize(0.0, 4.2, 2.0).0, 2);
        assert_abs_diff_eq!(quantize(0.0, 4.2, 2.0).1, 0.2, epsilon = 1e-12);
        assert_eq!(quantize(0.0, -1.0, 2.0), (-1, 1.0));
        assert_eq!(quantize(1.9, 0.0, 2.0), (0, 1.9));
        let (s, r) = quantize(1.0, 1.0, 2.0);
        assert_eq!((s, r), (1, 0.0));
    }
}
