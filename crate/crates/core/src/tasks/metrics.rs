use serde::Deserialize;

use crate::error::TaskError;
use crate::records::{record_type, Record};

pub const CSV_COLUMNS: [&str; 5] = ["trial_id", "condition", "tct_s", "distance_cm", "errors"];

/// Outcome of one scored trial. Transfer trials fill `distance_cm`, puzzle trials
/// fill `errors`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrialMetrics {
    pub trial_id: usize,
    pub condition: String,
    pub tct_s: f64,
    pub distance_cm: Option<f64>,
    pub errors: Option<u32>,
    pub success: bool,
}

fn six(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float parses")
}

impl TrialMetrics {
    /// Rounds reals to the six decimals used on disk, so written and re-read
    /// metrics compare equal.
    pub fn canonical(mut self) -> Self {
        self.tct_s = six(self.tct_s);
        self.distance_cm = self.distance_cm.map(six);
        self
    }

    pub fn to_record(&self) -> String {
        Record::new("metrics")
            .int("trial_id", self.trial_id)
            .text("condition", &self.condition)
            .num("tct_s", self.tct_s)
            .opt_num("distance_cm", self.distance_cm)
            .opt_int("errors", self.errors)
            .boolean("success", self.success)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsFormat {
    Csv,
    Records,
}

impl std::str::FromStr for MetricsFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(MetricsFormat::Csv),
            "records" => Ok(MetricsFormat::Records),
            other => Err(format!("unknown metrics format `{other}`")),
        }
    }
}

pub fn export_metrics(metrics: &[TrialMetrics], format: MetricsFormat) -> Vec<u8> {
    match format {
        MetricsFormat::Records => metrics.iter().flat_map(|m| (m.to_record() + "\n").into_bytes()).collect(),
        MetricsFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS).expect("writing to memory");
            for m in metrics {
                w.write_record([
                    m.trial_id.to_string(),
                    m.condition.clone(),
                    format!("{:.6}", m.tct_s),
                    m.distance_cm.map(|d| format!("{d:.6}")).unwrap_or_default(),
                    m.errors.map(|e| e.to_string()).unwrap_or_default(),
                ])
                .expect("writing to memory");
            }
            w.into_inner().expect("flushing to memory")
        }
    }
}

/// Reads every `metrics` record from a record stream, ignoring other record types.
pub fn parse_metrics(text: &str) -> Result<Vec<TrialMetrics>, TaskError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let kind = record_type(line).ok_or_else(|| TaskError::Malformed { line: i + 1, reason: "not a record".into() })?;
        if kind == "metrics" {
            let m: TrialMetrics = serde_json::from_str(line).map_err(|e| TaskError::Malformed { line: i + 1, reason: e.to_string() })?;
            out.push(m);
        }
    }
    Ok(out)
}
