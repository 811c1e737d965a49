//! Front door to the engine: trace replay and live sessions.

mod config;
mod engine;
mod protocol;
mod replay;
mod server;

pub use config::{SessionConfig, TaskConfig};
pub use engine::{
    from_grid, to_grid, ApplyError, CursorState, Engine, EngineError, ItemState, LayerState, SceneSnapshot, ScreenState, StackState, TargetState,
    TaskStatus, DISK_ID,
};
pub use protocol::{error_record, BatchOutcome, Session, PROTOCOL_VERSION};
pub use replay::{replay, replay_text, ReplayError, ReplayOutput};
pub use server::{serve, spawn_server, ServerHandle, SESSION_PATH, SNAPSHOT_INTERVAL};
