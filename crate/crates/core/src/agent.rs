//! A scripted user. It drives an [`Engine`] closed-loop, reading back the cursor
//! and task state after each action, and records the events it produced as a
//! replayable trace.
//!
//! Cursor motion is relative, so long moves are split into several strokes that
//! each fit on the tablet (clutching). Grabs and releases are long-presses.
//! Screen switches use gaze under gaze+touch and a bezel-held drag under the
//! bimanual technique.

use thiserror::Error;

use crate::error::ConfigError;
use crate::input::{
    parse_event_line, serialize_event, Command, CommandEvent, ContactEvent, GazeSample, HeadPoseEvent, InputTrace, Phase, TraceEvent,
};
use crate::layers::head_at;
use crate::routing::TechniqueKind;
use crate::session::{Engine, EngineError, SceneSnapshot, SessionConfig, DISK_ID};
use crate::tasks::TrialMetrics;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("engine rejected a scripted event: {0}")]
    Engine(#[from] EngineError),
    #[error("trial {trial}: {reason}")]
    Stuck { trial: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    /// Finger travel between successive move samples, cm.
    pub step_cm: f64,
    /// Time between samples, s.
    pub sample_dt_s: f64,
    /// Distance kept from the tablet edges when planning strokes, cm.
    pub margin_cm: f64,
    /// Pause after each action, s.
    pub settle_s: f64,
    /// Attempts per trial before giving up.
    pub max_attempts: usize,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            step_cm: 1.0,
            sample_dt_s: 0.01,
            margin_cm: 1.0,
            settle_s: 0.05,
            max_attempts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRun {
    pub trace: InputTrace,
    pub metrics: Vec<TrialMetrics>,
    pub snapshot: SceneSnapshot,
}

pub struct Agent {
    engine: Engine,
    params: AgentParams,
    events: Vec<TraceEvent>,
    metrics: Vec<TrialMetrics>,
    t: f64,
    next_contact: u32,
}

fn canonical(event: &TraceEvent) -> TraceEvent {
    parse_event_line(&serialize_event(event), None).expect("serialized events parse")
}

impl Agent {
    pub fn new(config: &SessionConfig, params: AgentParams) -> Result<Self, AgentError> {
        Ok(Self {
            engine: Engine::new(config)?,
            params,
            events: Vec::new(),
            metrics: Vec::new(),
            t: 0.0,
            next_contact: 1,
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// Runs the configured task to completion.
    pub fn run(config: &SessionConfig, params: AgentParams) -> Result<AgentRun, AgentError> {
        let mut agent = Self::new(config, params)?;
        match config.task {
            Some(crate::session::TaskConfig::Transfer { .. }) => agent.run_transfer()?,
            Some(crate::session::TaskConfig::Puzzle { .. }) => agent.run_puzzles()?,
            None => {}
        }
        Ok(agent.finish())
    }

    pub fn finish(self) -> AgentRun {
        AgentRun {
            trace: InputTrace {
                header: self.engine.config().header(),
                events: self.events,
            },
            metrics: self.metrics,
            snapshot: self.engine.snapshot(),
        }
    }

    fn emit(&mut self, event: TraceEvent) -> Result<(), AgentError> {
        let event = canonical(&event);
        self.t = event.t();
        self.metrics.extend(self.engine.apply(&event)?);
        self.events.push(event);
        Ok(())
    }

    fn tick(&mut self, dt: f64) -> f64 {
        self.t += dt;
        self.t
    }

    fn contact(&mut self, id: u32, phase: Phase, x: f64, y: f64, dt: f64) -> Result<(), AgentError> {
        let t = self.tick(dt);
        self.emit(TraceEvent::Contact(ContactEvent::new(t, id, phase, x, y)))
    }

    fn command(&mut self, command: Command) -> Result<(), AgentError> {
        let t = self.tick(self.params.settle_s);
        self.emit(TraceEvent::Command(CommandEvent { t, command }))
    }

    fn new_contact(&mut self) -> u32 {
        let id = self.next_contact;
        self.next_contact += 1;
        id
    }

    /// Drags one finger by `(dx, dy)` starting at `from`, in `step_cm` samples.
    fn stroke(&mut self, from: (f64, f64), dx: f64, dy: f64) -> Result<(), AgentError> {
        let id = self.new_contact();
        let dt = self.params.sample_dt_s;
        self.contact(id, Phase::Down, from.0, from.1, self.params.settle_s)?;
        let steps = (dx.hypot(dy) / self.params.step_cm).ceil().max(1.0) as usize;
        let mut last = from;
        for i in 1..=steps {
            let f = i as f64 / steps as f64;
            last = (from.0 + dx * f, from.1 + dy * f);
            self.contact(id, Phase::Move, last.0, last.1, dt)?;
        }
        self.contact(id, Phase::Up, last.0, last.1, dt)
    }

    /// Moves the cursor to `(u, v)` on the active screen with as many strokes as
    /// the tablet requires.
    pub fn move_cursor_to(&mut self, u: f64, v: f64) -> Result<(), AgentError> {
        let config = self.engine.config();
        let tablet = config.tablet;
        let gain = config.technique_params.fine_gain;
        let state = self.engine.router_state();
        let screen = self.engine.layout().screen(state.active_screen).expect("active screen exists");
        let dx = (u - state.cursor.u) * screen.width_cm / gain;
        let dy = (v - state.cursor.v) * screen.height_cm / gain;
        if dx == 0.0 && dy == 0.0 {
            return Ok(());
        }
        let m = self.params.margin_cm;
        let (span_x, span_y) = (tablet.active_width_cm - 2.0 * m, tablet.active_height_cm - 2.0 * m);
        let strokes = (dx.abs() / span_x).ceil().max((dy.abs() / span_y).ceil()).max(1.0);
        let (sx, sy) = (dx / strokes, dy / strokes);
        let start = (
            if sx >= 0.0 { m } else { tablet.active_width_cm - m },
            if sy >= 0.0 { m } else { tablet.active_height_cm - m },
        );
        for _ in 0..strokes as usize {
            self.stroke(start, sx, sy)?;
        }
        Ok(())
    }

    /// Holds a finger still at the tablet centre past the long-press time.
    pub fn long_press(&mut self) -> Result<(), AgentError> {
        let hold = self.engine.config().gesture.long_press_s + 0.1;
        let (x, y) = self.engine.config().tablet.center();
        let id = self.new_contact();
        self.contact(id, Phase::Down, x, y, self.params.settle_s)?;
        self.contact(id, Phase::Up, x, y, hold)
    }

    /// Makes `screen` the active screen.
    pub fn switch_to(&mut self, screen: u32) -> Result<(), AgentError> {
        if self.engine.router_state().active_screen == screen {
            return Ok(());
        }
        match self.engine.config().technique {
            TechniqueKind::GazeTouch => self.gaze_switch(screen),
            TechniqueKind::Bimanual => self.coarse_switch(screen),
        }
    }

    fn gaze_switch(&mut self, screen: u32) -> Result<(), AgentError> {
        let layout = self.engine.layout();
        let origin = layout.anchor.position;
        let target = layout.screen(screen).expect("screen exists").center();
        let direction = (target - origin).normalize();
        // Dwell long enough for any temporal threshold.
        let dwell = self.engine.config().technique_params.gaze_temporal_threshold_s + 0.1;
        let samples = (dwell / self.params.sample_dt_s).ceil() as usize;
        for _ in 0..samples.max(1) {
            let t = self.tick(self.params.sample_dt_s);
            self.emit(TraceEvent::Gaze(GazeSample { t, origin, direction }))?;
            if self.engine.router_state().active_screen == screen {
                return Ok(());
            }
        }
        Err(AgentError::Stuck {
            trial: self.engine.current_trial(),
            reason: format!("gaze did not switch to screen {screen}"),
        })
    }

    fn coarse_switch(&mut self, screen: u32) -> Result<(), AgentError> {
        let layout = self.engine.layout();
        let from = layout.screen(self.engine.router_state().active_screen).expect("active screen exists").grid_pos;
        let to = layout.screen(screen).expect("screen exists").grid_pos;
        let q = self.engine.config().technique_params.coarse_cm_per_screen;
        let tablet = self.engine.config().tablet;
        // Aim at the middle of each quantisation step.
        let dx = q * ((to.col - from.col) as f64 + 0.5);
        let dy = q * ((to.row - from.row) as f64 + 0.5);
        let bezel = self.new_contact();
        let bezel_at = (-tablet.bezel_width_cm / 2.0, tablet.active_height_cm / 2.0);
        self.contact(bezel, Phase::Down, bezel_at.0, bezel_at.1, self.params.settle_s)?;
        let (cx, cy) = tablet.center();
        self.stroke((cx - dx / 2.0, cy - dy / 2.0), dx, dy)?;
        self.contact(bezel, Phase::Up, bezel_at.0, bezel_at.1, self.params.sample_dt_s)?;
        if self.engine.router_state().active_screen == screen {
            Ok(())
        } else {
            Err(AgentError::Stuck {
                trial: self.engine.current_trial(),
                reason: format!("coarse drag did not reach screen {screen}"),
            })
        }
    }

    fn pick_up(&mut self, item: u32) -> Result<(), AgentError> {
        let it = *self.engine.scene().item(item).expect("item exists");
        self.switch_to(it.owner_screen)?;
        self.move_cursor_to(it.u, it.v)?;
        self.long_press()?;
        if self.engine.router_state().held_item == Some(item) {
            Ok(())
        } else {
            Err(AgentError::Stuck {
                trial: self.engine.current_trial(),
                reason: format!("could not grab item {item}"),
            })
        }
    }

    fn drop_at(&mut self, screen: u32, u: f64, v: f64) -> Result<(), AgentError> {
        self.switch_to(screen)?;
        self.move_cursor_to(u, v)?;
        self.long_press()
    }

    /// Carries the disk to each target until the block is done.
    pub fn run_transfer(&mut self) -> Result<(), AgentError> {
        while !self.engine.task_done() {
            let trial = self.engine.current_trial();
            let mut attempts = 0;
            while self.engine.current_trial() == trial {
                attempts += 1;
                if attempts > self.params.max_attempts {
                    return Err(AgentError::Stuck { trial, reason: "target never reached".into() });
                }
                let target = self.engine.snapshot().task.targets[0].clone();
                if self.engine.router_state().held_item != Some(DISK_ID) {
                    self.pick_up(DISK_ID)?;
                }
                self.drop_at(target.screen, target.u, target.v)?;
            }
        }
        Ok(())
    }

    /// Solves each puzzle layer by layer, then moves on.
    pub fn run_puzzles(&mut self) -> Result<(), AgentError> {
        while !self.engine.task_done() {
            let targets = self.engine.snapshot().task.targets;
            for target in targets {
                let layer = self.engine.scene().item(target.item).expect("piece exists").layer;
                self.command(Command::SelectLayer(layer))?;
                self.pick_up(target.item)?;
                self.drop_at(target.screen, target.u, target.v)?;
            }
            self.command(Command::Next)?;
        }
        Ok(())
    }

    /// Moves the head `lean_cm` towards the screens and `lateral_cm` to the right.
    pub fn move_head(&mut self, lean_cm: f64, lateral_cm: f64) -> Result<(), AgentError> {
        let pose = head_at(&self.engine.layout().anchor, lean_cm, lateral_cm);
        let t = self.tick(self.params.settle_s);
        self.emit(TraceEvent::Head(HeadPoseEvent::from_pose(t, &pose)))
    }
}
