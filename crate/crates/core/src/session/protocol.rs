//! Message handling for live sessions, independent of the transport.
//!
//! Each client message is a batch of record lines. Event records use the trace
//! grammar and may omit `t`, in which case the session stamps the arrival time. A
//! `{"type":"download"}` line asks for the session's trace so far. Replies are
//! `snapshot`, `metrics` and `error` records, or the trace text itself.

use super::config::SessionConfig;
use super::engine::{Engine, SceneSnapshot};
use crate::error::ConfigError;
use crate::input::{parse_event_line, serialize_event, serialize_trace, InputTrace, TraceEvent};
use crate::records::{record_type, Record};

pub const PROTOCOL_VERSION: u32 = 1;

pub fn error_record(line: Option<usize>, reason: &str) -> String {
    Record::new("error").opt_int("line", line).text("reason", reason).finish()
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct BatchOutcome {
    /// Messages to send back in order: errors, metrics and downloaded traces.
    pub replies: Vec<String>,
    pub applied: usize,
}

/// One client's engine plus the log of accepted events.
#[derive(Debug, Clone)]
pub struct Session {
    engine: Engine,
    log: Vec<TraceEvent>,
}

fn stamp(seconds: f64) -> f64 {
    (seconds * 1e6).round() / 1e6
}

impl Session {
    pub fn new(config: &SessionConfig) -> Result<Self, ConfigError> {
        Ok(Self {
            engine: Engine::new(config)?,
            log: Vec::new(),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn snapshot(&self) -> SceneSnapshot {
        self.engine.snapshot()
    }

    /// Accepted events rewritten as a standard trace.
    pub fn download(&self) -> String {
        serialize_trace(&InputTrace {
            header: self.engine.config().header(),
            events: self.log.clone(),
        })
    }

    /// Applies one message. `now_s` is the session clock used for events without
    /// a timestamp; it never runs behind the last applied event.
    pub fn handle_batch(&mut self, text: &str, now_s: f64) -> BatchOutcome {
        let mut out = BatchOutcome::default();
        let default_t = stamp(now_s).max(self.engine.last_t().unwrap_or(0.0));
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let line_no = Some(i + 1);
            if record_type(line).as_deref() == Some("download") {
                out.replies.push(self.download());
                continue;
            }
            // Round-trip through the canonical form so the downloaded trace
            // replays exactly what was applied here.
            let event = parse_event_line(line, Some(default_t))
                .and_then(|e| parse_event_line(&serialize_event(&e), None));
            let event = match event {
                Ok(e) => e,
                Err(reason) => {
                    out.replies.push(error_record(line_no, &reason));
                    continue;
                }
            };
            match self.engine.apply(&event) {
                Ok(metrics) => {
                    self.log.push(event);
                    out.applied += 1;
                    out.replies.extend(metrics.iter().map(|m| m.to_record()));
                }
                Err(e) => out.replies.push(error_record(line_no, &e.to_string())),
            }
        }
        out
    }
}
