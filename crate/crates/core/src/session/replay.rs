use thiserror::Error;

use super::config::SessionConfig;
use super::engine::{Engine, EngineError, SceneSnapshot};
use crate::error::{ConfigError, TraceError};
use crate::input::{parse_trace, InputTrace};
use crate::tasks::TrialMetrics;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("trace: {0}")]
    Trace(#[from] TraceError),
    #[error("trace: {0}")]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    pub snapshot: SceneSnapshot,
    pub metrics: Vec<TrialMetrics>,
}

impl ReplayOutput {
    /// Metrics records followed by the final snapshot, one record per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.metrics {
            out.push_str(&m.to_record());
            out.push('\n');
        }
        out.push_str(&self.snapshot.to_record());
        out.push('\n');
        out
    }
}

/// Runs a whole trace through a fresh engine. The trace header's layout, tablet,
/// technique and seed take precedence over `config`.
pub fn replay(config: &SessionConfig, trace: &InputTrace) -> Result<ReplayOutput, ReplayError> {
    let config = config.with_header(&trace.header)?;
    let mut engine = Engine::new(&config)?;
    let mut metrics = Vec::new();
    for event in &trace.events {
        metrics.extend(engine.apply(event)?);
    }
    Ok(ReplayOutput {
        snapshot: engine.snapshot(),
        metrics,
    })
}

pub fn replay_text(config: &SessionConfig, trace: &[u8]) -> Result<ReplayOutput, ReplayError> {
    replay(config, &parse_trace(trace)?)
}
