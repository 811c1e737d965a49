//! One interactive session: recogniser, router, layer stack and task runner fed
//! from a single event stream.
//!
//! Events are applied transactionally. A rejected event leaves the engine exactly
//! as it was, so the accepted events alone reproduce the session.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{SessionConfig, TaskConfig};
use crate::error::{ConfigError, InputError, TaskError, TraceError};
use crate::geometry::{build_layout, Pose, ScaffoldLayout};
use crate::input::{Command, GestureEvent, GestureKind, GestureRecognizer, TraceEvent};
use crate::layers::{lateral_cm, LayerStack, PeekState, StackParams};
use crate::routing::{Item, RouteMode, Router, RouterEffect, RouterInput, RouterState, RoutingError, Scene, TechniqueKind};
use crate::tasks::{
    gen_puzzle_set, gen_transfer_block, score_puzzle, score_transfer, slot_uv, snap_to_grid, LayoutKind, PuzzleSpec, TransferBlock, TrialMetrics,
};

/// Item id of the transfer disk.
pub const DISK_ID: u32 = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ApplyError {
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Task(#[from] TaskError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("event {index}: {error}")]
pub struct EngineError {
    pub index: usize,
    pub error: ApplyError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenState {
    pub id: u32,
    pub col: i32,
    pub row: i32,
    pub center: [f64; 3],
    pub width_cm: f64,
    pub height_cm: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CursorState {
    pub screen: u32,
    pub u: f64,
    pub v: f64,
    pub mode: RouteMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub index: usize,
    pub z_cm: f64,
    pub transparent: bool,
    pub visible: bool,
    pub lateral_shift_cm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackState {
    pub active_index: usize,
    pub view_mode: String,
    pub collapsed: bool,
    pub peek: bool,
    pub layers: Vec<LayerState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemState {
    pub id: u32,
    pub owner: u32,
    pub layer: usize,
    pub u: f64,
    pub v: f64,
    pub radius_cm: f64,
    pub held: bool,
}

/// Where an item should end up: the transfer target, or a puzzle piece's
/// template cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub item: u32,
    pub screen: u32,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStatus {
    pub kind: String,
    pub condition: String,
    pub trial: usize,
    pub trials: usize,
    pub scored: usize,
    pub done: bool,
    pub targets: Vec<TargetState>,
}

/// Full scene state after a prefix of events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "snapshot")]
pub struct SceneSnapshot {
    pub revision: u64,
    pub t: Option<f64>,
    pub technique: TechniqueKind,
    pub screens: Vec<ScreenState>,
    pub cursor: CursorState,
    pub stack: StackState,
    pub items: Vec<ItemState>,
    pub task: TaskStatus,
}

impl SceneSnapshot {
    pub fn to_record(&self) -> String {
        serde_json::to_string(self).expect("snapshot serialises")
    }

    pub fn from_record(line: &str) -> Result<Self, String> {
        serde_json::from_str(line).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone)]
struct TransferRun {
    block: TransferBlock,
    current: usize,
    log: Vec<RouterEffect>,
}

#[derive(Debug, Clone)]
struct PuzzleRun {
    specs: Vec<PuzzleSpec>,
    current: usize,
    t_start: f64,
}

#[derive(Debug, Clone)]
enum TaskRun {
    Free,
    Transfer(TransferRun),
    Puzzle(PuzzleRun),
}

#[derive(Debug, Clone)]
struct State {
    recognizer: GestureRecognizer,
    router: RouterState,
    scene: Scene,
    stack: LayerStack,
    peek: PeekState,
    head: Pose,
    task: TaskRun,
    last_t: Option<f64>,
    applied: usize,
    scored: usize,
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: SessionConfig,
    layout: ScaffoldLayout,
    condition: String,
    state: State,
}

impl Engine {
    pub fn new(config: &SessionConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let layout = build_layout(&config.layout, Pose::identity())?;
        let mut stack_params: StackParams = config.stack;
        let mut scene = Scene::default();
        let (task, condition) = match config.task {
            None => (TaskRun::Free, "free".to_string()),
            Some(TaskConfig::Transfer { screens }) => {
                let kind = LayoutKind::from_screens(screens).expect("validated");
                let block = gen_transfer_block(kind, config.seed, &config.transfer);
                scene.items.push(Item {
                    id: DISK_ID,
                    owner_screen: 0,
                    layer: 0,
                    u: 0.5,
                    v: 0.5,
                    radius_cm: config.transfer.disk_diameter_cm / 2.0,
                });
                let run = TransferRun { block, current: 0, log: Vec::new() };
                (TaskRun::Transfer(run), format!("{}/{}", config.technique.as_str(), screens))
            }
            Some(TaskConfig::Puzzle { layers, puzzles }) => {
                stack_params.layer_count = layers;
                let specs = gen_puzzle_set(layers, puzzles, config.seed, &config.puzzle_grid)?;
                let visual = if stack_params.view_mode == crate::layers::ViewMode::Flat { "flat" } else { "depth" };
                (TaskRun::Puzzle(PuzzleRun { specs, current: 0, t_start: 0.0 }), format!("{visual}/{layers}"))
            }
        };
        let stack = LayerStack::new(&stack_params)?;
        let state = State {
            recognizer: GestureRecognizer::new(config.tablet, config.gesture),
            router: RouterState::new(&layout),
            scene,
            stack,
            peek: PeekState::default(),
            head: layout.anchor,
            task,
            last_t: None,
            applied: 0,
            scored: 0,
        };
        let mut engine = Self {
            config: config.clone(),
            layout,
            condition,
            state,
        };
        let mut state = engine.state.clone();
        engine.prepare_task(&mut state);
        engine.state = state;
        Ok(engine)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn layout(&self) -> &ScaffoldLayout {
        &self.layout
    }

    pub fn router_state(&self) -> &RouterState {
        &self.state.router
    }

    pub fn scene(&self) -> &Scene {
        &self.state.scene
    }

    pub fn stack(&self) -> &LayerStack {
        &self.state.stack
    }

    pub fn last_t(&self) -> Option<f64> {
        self.state.last_t
    }

    /// Number of events applied so far.
    pub fn applied(&self) -> usize {
        self.state.applied
    }

    pub fn revision(&self) -> u64 {
        1 + self.state.applied as u64
    }

    pub fn task_done(&self) -> bool {
        match &self.state.task {
            TaskRun::Free => false,
            TaskRun::Transfer(r) => r.current >= r.block.trials.len(),
            TaskRun::Puzzle(r) => r.current >= r.specs.len(),
        }
    }

    /// The current transfer block, if this session runs the transfer task.
    pub fn transfer_block(&self) -> Option<&TransferBlock> {
        match &self.state.task {
            TaskRun::Transfer(r) => Some(&r.block),
            _ => None,
        }
    }

    pub fn puzzles(&self) -> Option<&[PuzzleSpec]> {
        match &self.state.task {
            TaskRun::Puzzle(r) => Some(&r.specs),
            _ => None,
        }
    }

    /// Index of the running trial or puzzle.
    pub fn current_trial(&self) -> usize {
        match &self.state.task {
            TaskRun::Free => 0,
            TaskRun::Transfer(r) => r.current,
            TaskRun::Puzzle(r) => r.current,
        }
    }

    /// Applies one event. On error nothing changes.
    pub fn apply(&mut self, event: &TraceEvent) -> Result<Vec<TrialMetrics>, EngineError> {
        let mut next = self.state.clone();
        let index = next.applied;
        let metrics = self
            .apply_to(&mut next, event)
            .map_err(|error| EngineError { index, error })?;
        next.applied += 1;
        next.last_t = Some(event.t());
        self.state = next;
        Ok(metrics)
    }

    fn router(&self) -> Router<'_> {
        Router::new(&self.layout, self.config.tablet, self.config.technique())
    }

    fn apply_to(&self, s: &mut State, event: &TraceEvent) -> Result<Vec<TrialMetrics>, ApplyError> {
        let t = event.t();
        if let Some(prev) = s.last_t {
            if t < prev {
                return Err(TraceError::NonMonotonic { index: s.applied, t, prev }.into());
            }
        }
        let mut metrics = Vec::new();
        for g in s.recognizer.advance(t) {
            self.on_gesture(s, &g, &mut metrics)?;
        }
        match event {
            TraceEvent::Contact(c) => {
                let pair_before = s.recognizer.swipe_pair_active();
                self.route(s, &RouterInput::Contact(*c), &mut metrics)?;
                for g in s.recognizer.push(c)? {
                    self.on_gesture(s, &g, &mut metrics)?;
                }
                if pair_before && !s.recognizer.swipe_pair_active() && self.config.stack.reset_swipe_on_end {
                    s.stack.end_swipe();
                }
            }
            TraceEvent::Gaze(g) => self.route(s, &RouterInput::Gaze(*g), &mut metrics)?,
            TraceEvent::Head(h) => {
                s.head = h.pose();
                s.peek.update(&s.head, &self.layout.anchor, &self.config.peek);
            }
            TraceEvent::Command(c) => match c.command {
                Command::SelectLayer(i) => {
                    s.stack.select_layer(i)?;
                    s.scene.active_layer = s.stack.active_index;
                }
                Command::ToggleVisibility(i) => s.stack.toggle_visibility(i)?,
                Command::ShowAll => s.stack.show_all(),
                Command::Next => self.next_puzzle(s, t, &mut metrics)?,
                Command::GrabOverride => self.route(s, &RouterInput::Grab { t }, &mut metrics)?,
                Command::ReleaseOverride => self.route(s, &RouterInput::Release { t }, &mut metrics)?,
            },
        }
        Ok(metrics)
    }

    fn on_gesture(&self, s: &mut State, g: &GestureEvent, metrics: &mut Vec<TrialMetrics>) -> Result<(), ApplyError> {
        match g.kind {
            GestureKind::TwoFingerSwipe { delta_y_cm } => {
                s.stack.swipe_layers(delta_y_cm);
                s.scene.active_layer = s.stack.active_index;
                Ok(())
            }
            _ => self.route(s, &RouterInput::Gesture(*g), metrics),
        }
    }

    fn route(&self, s: &mut State, input: &RouterInput, metrics: &mut Vec<TrialMetrics>) -> Result<(), ApplyError> {
        let effects = self.router().step(&mut s.router, input, &mut s.scene)?;
        for effect in effects {
            self.on_effect(s, effect, metrics)?;
        }
        Ok(())
    }

    fn on_effect(&self, s: &mut State, effect: RouterEffect, metrics: &mut Vec<TrialMetrics>) -> Result<(), ApplyError> {
        let mut advance = false;
        match &mut s.task {
            TaskRun::Free => {}
            TaskRun::Transfer(run) => {
                if run.current >= run.block.trials.len() {
                    return Ok(());
                }
                run.log.push(effect);
                if let RouterEffect::Released { item: DISK_ID, .. } = effect {
                    let trial = &run.block.trials[run.current];
                    let m = score_transfer(trial, &self.layout, run.block.params.slot_radius_cm, DISK_ID, &self.condition, &run.log)?;
                    if m.success {
                        metrics.push(m.canonical());
                        s.scored += 1;
                        run.current += 1;
                        run.log.clear();
                        advance = true;
                    }
                }
            }
            TaskRun::Puzzle(_) => {
                if let RouterEffect::Released { item, .. } = effect {
                    let grid = self.config.puzzle_grid;
                    let screen = &self.layout.screens[0];
                    let piece = s.scene.item_mut(item).expect("released item exists");
                    let (x, y) = to_grid(screen.width_cm, screen.height_cm, &grid, piece.u, piece.v);
                    let cell = snap_to_grid(x, y, &grid);
                    (piece.u, piece.v) = from_grid(screen.width_cm, screen.height_cm, &grid, grid.cell_center(cell));
                }
            }
        }
        if advance {
            self.prepare_task(s);
        }
        Ok(())
    }

    fn next_puzzle(&self, s: &mut State, t: f64, metrics: &mut Vec<TrialMetrics>) -> Result<(), ApplyError> {
        let TaskRun::Puzzle(run) = &mut s.task else {
            return Ok(());
        };
        let Some(spec) = run.specs.get(run.current) else {
            return Ok(());
        };
        let screen = &self.layout.screens[0];
        let grid = self.config.puzzle_grid;
        let placed: Vec<(u32, u32)> = (0..spec.layer_count())
            .map(|layer| {
                let piece = s.scene.item(layer as u32).expect("one piece per layer");
                let (x, y) = to_grid(screen.width_cm, screen.height_cm, &grid, piece.u, piece.v);
                snap_to_grid(x, y, &grid)
            })
            .collect();
        let m = score_puzzle(spec, &placed, run.t_start, Some(t), &self.condition)?;
        metrics.push(m.canonical());
        s.scored += 1;
        run.current += 1;
        run.t_start = t;
        self.prepare_task(s);
        Ok(())
    }

    /// Lays out the scene for the running trial or puzzle.
    fn prepare_task(&self, s: &mut State) {
        match &s.task {
            TaskRun::Free => {}
            TaskRun::Transfer(run) => {
                if let Some(trial) = run.block.trials.get(run.current) {
                    let screen = self.layout.screen(trial.start.screen).expect("block matches layout");
                    let (u, v) = slot_uv(screen, trial.start.slot, run.block.params.slot_radius_cm);
                    let disk = s.scene.item_mut(DISK_ID).expect("disk exists");
                    disk.owner_screen = screen.id;
                    (disk.u, disk.v) = (u, v);
                    s.router.held_item = None;
                }
            }
            TaskRun::Puzzle(run) => {
                if let Some(spec) = run.specs.get(run.current) {
                    let screen = &self.layout.screens[0];
                    let grid = self.config.puzzle_grid;
                    s.scene.items = spec
                        .start
                        .iter()
                        .enumerate()
                        .map(|(layer, &cell)| {
                            let (u, v) = from_grid(screen.width_cm, screen.height_cm, &grid, grid.cell_center(cell));
                            Item {
                                id: layer as u32,
                                owner_screen: screen.id,
                                layer,
                                u,
                                v,
                                radius_cm: grid.cell_cm / 2.0,
                            }
                        })
                        .collect();
                    s.router.held_item = None;
                    let mut params = self.config.stack;
                    params.layer_count = spec.layer_count();
                    s.stack = LayerStack::new(&params).expect("validated");
                    s.scene.active_layer = 0;
                }
            }
        }
    }

    pub fn snapshot(&self) -> SceneSnapshot {
        let s = &self.state;
        let screens = self
            .layout
            .screens
            .iter()
            .map(|sc| ScreenState {
                id: sc.id,
                col: sc.grid_pos.col,
                row: sc.grid_pos.row,
                center: [sc.center().x, sc.center().y, sc.center().z],
                width_cm: sc.width_cm,
                height_cm: sc.height_cm,
                active: sc.id == s.router.active_screen,
            })
            .collect();
        let lateral = lateral_cm(&s.head, &self.layout.anchor);
        let layers = s
            .stack
            .views(lateral, self.config.peek.viewing_distance_cm)
            .into_iter()
            .map(|v| LayerState {
                index: v.index,
                z_cm: v.z_cm,
                transparent: v.transparent,
                visible: v.visible,
                lateral_shift_cm: v.lateral_shift_cm,
            })
            .collect();
        let items = s
            .scene
            .items
            .iter()
            .map(|i| ItemState {
                id: i.id,
                owner: i.owner_screen,
                layer: i.layer,
                u: i.u,
                v: i.v,
                radius_cm: i.radius_cm,
                held: s.router.held_item == Some(i.id),
            })
            .collect();
        SceneSnapshot {
            revision: self.revision(),
            t: s.last_t,
            technique: self.config.technique,
            screens,
            cursor: CursorState {
                screen: s.router.cursor.screen_id,
                u: s.router.cursor.u,
                v: s.router.cursor.v,
                mode: s.router.mode,
            },
            stack: StackState {
                active_index: s.stack.active_index,
                view_mode: s.stack.view_mode.name().to_string(),
                collapsed: s.stack.collapsed,
                peek: s.peek.active,
                layers,
            },
            items,
            task: self.task_status(),
        }
    }

    fn task_status(&self) -> TaskStatus {
        let s = &self.state;
        let (kind, trials, targets) = match &s.task {
            TaskRun::Free => ("none", 0, Vec::new()),
            TaskRun::Transfer(run) => {
                let targets = run
                    .block
                    .trials
                    .get(run.current)
                    .map(|trial| {
                        let screen = self.layout.screen(trial.target.screen).expect("block matches layout");
                        let (u, v) = slot_uv(screen, trial.target.slot, run.block.params.slot_radius_cm);
                        vec![TargetState { item: DISK_ID, screen: screen.id, u, v }]
                    })
                    .unwrap_or_default();
                ("transfer", run.block.trials.len(), targets)
            }
            TaskRun::Puzzle(run) => {
                let screen = &self.layout.screens[0];
                let grid = self.config.puzzle_grid;
                let targets = run
                    .specs
                    .get(run.current)
                    .map(|spec| {
                        spec.template
                            .iter()
                            .enumerate()
                            .map(|(layer, &cell)| {
                                let (u, v) = from_grid(screen.width_cm, screen.height_cm, &grid, grid.cell_center(cell));
                                TargetState { item: layer as u32, screen: screen.id, u, v }
                            })
                            .collect()
                    })
                    .unwrap_or_default();
                ("puzzle", run.specs.len(), targets)
            }
        };
        TaskStatus {
            kind: kind.to_string(),
            condition: self.condition.clone(),
            trial: self.current_trial(),
            trials,
            scored: s.scored,
            done: self.task_done(),
            targets,
        }
    }
}

/// Screen coordinates to grid centimetres; the grid is centred on the screen.
pub fn to_grid(width_cm: f64, height_cm: f64, grid: &crate::tasks::PuzzleGrid, u: f64, v: f64) -> (f64, f64) {
    (
        u * width_cm - (width_cm - grid.width_cm()) / 2.0,
        v * height_cm - (height_cm - grid.height_cm()) / 2.0,
    )
}

pub fn from_grid(width_cm: f64, height_cm: f64, grid: &crate::tasks::PuzzleGrid, (x, y): (f64, f64)) -> (f64, f64) {
    (
        (x + (width_cm - grid.width_cm()) / 2.0) / width_cm,
        (y + (height_cm - grid.height_cm()) / 2.0) / height_cm,
    )
}
