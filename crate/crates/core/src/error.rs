use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("layout grid {columns}x{rows} does not hold {screen_count} screens")]
    GridMismatch { columns: u32, rows: u32, screen_count: u32 },
    #[error("`{key}` must be positive, got {value}")]
    NotPositive { key: &'static str, value: f64 },
    #[error("`{key}` must not be negative, got {value}")]
    Negative { key: &'static str, value: f64 },
    #[error("horizontal span {span_deg:.2} deg exceeds the {limit_deg} deg bound")]
    HorizontalSpan { span_deg: f64, limit_deg: f64 },
    #[error("upward span {span_deg:.2} deg exceeds the {limit_deg} deg bound")]
    UpwardSpan { span_deg: f64, limit_deg: f64 },
    #[error("downward span {span_deg:.2} deg exceeds the {limit_deg} deg bound")]
    DownwardSpan { span_deg: f64, limit_deg: f64 },
    #[error("screens {a} and {b} overlap")]
    Overlap { a: u32, b: u32 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: timestamp {t} precedes {prev}")]
    NonMonotonicLine { line: usize, t: f64, prev: f64 },
    #[error("event {index}: timestamp {t} precedes {prev}")]
    NonMonotonic { index: usize, t: f64, prev: f64 },
    #[error("event {index}: contact {contact_id}: {reason}")]
    Phase { index: usize, contact_id: u32, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("gaze ray has no direction")]
    DegenerateRay,
    #[error("layer {index} out of range for a stack of {count}")]
    LayerOutOfRange { index: usize, count: usize },
    #[error("balanced Latin squares need an even n >= 2, got {0}")]
    UnsupportedLatinSquare(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("unknown screen {0}")]
    UnknownScreen(u32),
    #[error("unknown item {0}")]
    UnknownItem(u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("explosion view holds at most {max} layers, {requested} requested")]
pub struct CapacityError {
    pub requested: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("trial {trial} incomplete: {reason}")]
    IncompleteTrial { trial: usize, reason: &'static str },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}
