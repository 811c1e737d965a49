//! Content transfer: carry a disk from a slot on one screen to a target slot on
//! another screen.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, TaskError};
use crate::geometry::{non_negative, positive, GridPos, LayoutConfig, ScaffoldLayout, VirtualScreen};
use crate::records::{record_type, Record};
use crate::routing::RouterEffect;
use crate::tasks::TrialMetrics;

pub const SLOT_COUNT: usize = 8;
pub const TRIALS_PER_BLOCK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferParams {
    /// Radius of the ring of start/target slots around a screen's centre.
    pub slot_radius_cm: f64,
    pub disk_diameter_cm: f64,
    pub target_diameter_cm: f64,
}

impl Default for TransferParams {
    fn default() -> Self {
        Self {
            slot_radius_cm: 6.0,
            disk_diameter_cm: 4.0,
            target_diameter_cm: 4.0,
        }
    }
}

impl TransferParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        non_negative("transfer.slot_radius_cm", self.slot_radius_cm)?;
        positive("transfer.disk_diameter_cm", self.disk_diameter_cm)?;
        positive("transfer.target_diameter_cm", self.target_diameter_cm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayoutKind {
    Four,
    Fifteen,
}

impl LayoutKind {
    pub fn from_screens(n: u32) -> Option<Self> {
        match n {
            4 => Some(LayoutKind::Four),
            15 => Some(LayoutKind::Fifteen),
            _ => None,
        }
    }

    pub fn screens(self) -> u32 {
        match self {
            LayoutKind::Four => 4,
            LayoutKind::Fifteen => 15,
        }
    }

    pub fn layout_config(self) -> LayoutConfig {
        match self {
            LayoutKind::Four => LayoutConfig::four_screens(),
            LayoutKind::Fifteen => LayoutConfig::fifteen_screens(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Endpoint {
    pub screen: u32,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferTrial {
    pub id: usize,
    pub start: Endpoint,
    pub target: Endpoint,
    pub disk_diameter_cm: f64,
    pub target_diameter_cm: f64,
}

impl TransferTrial {
    /// Signed grid displacement from start screen to target screen.
    pub fn displacement(&self, columns: u32) -> (i32, i32) {
        let pos = |id: u32| GridPos::new((id % columns) as i32, (id / columns) as i32);
        let (a, b) = (pos(self.start.screen), pos(self.target.screen));
        (b.col - a.col, b.row - a.row)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferBlock {
    pub kind: LayoutKind,
    pub seed: u64,
    pub params: TransferParams,
    pub trials: Vec<TransferTrial>,
}

/// Centre of `slot` on `screen`; slot 0 is to the right of the centre and slots
/// proceed counter-clockwise in 45 degree steps.
pub fn slot_uv(screen: &VirtualScreen, slot: usize, radius_cm: f64) -> (f64, f64) {
    let a = (slot as f64 * 360.0 / SLOT_COUNT as f64).to_radians();
    (
        0.5 + radius_cm * a.cos() / screen.width_cm,
        0.5 + radius_cm * a.sin() / screen.height_cm,
    )
}

fn trial(id: usize, start: u32, target: u32, rng: &mut ChaCha8Rng, params: &TransferParams) -> TransferTrial {
    TransferTrial {
        id,
        start: Endpoint { screen: start, slot: rng.gen_range(0..SLOT_COUNT) },
        target: Endpoint { screen: target, slot: rng.gen_range(0..SLOT_COUNT) },
        disk_diameter_cm: params.disk_diameter_cm,
        target_diameter_cm: params.target_diameter_cm,
    }
}

/// A 32-trial block. With fifteen screens every signed displacement of one to four
/// columns and one to two rows occurs once. With four screens every ordered pair
/// of distinct screens occurs twice, plus eight random pairs.
pub fn gen_transfer_block(kind: LayoutKind, seed: u64, params: &TransferParams) -> TransferBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = kind.layout_config();
    let (cols, rows) = (config.columns as i32, config.rows as i32);
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(TRIALS_PER_BLOCK);
    match kind {
        LayoutKind::Fifteen => {
            for dx in [-4, -3, -2, -1, 1, 2, 3, 4] {
                for dy in [-2, -1, 1, 2] {
                    let col = rng.gen_range(0.max(-dx)..cols.min(cols - dx));
                    let row = rng.gen_range(0.max(-dy)..rows.min(rows - dy));
                    let id = |c: i32, r: i32| (r * cols + c) as u32;
                    pairs.push((id(col, row), id(col + dx, row + dy)));
                }
            }
        }
        LayoutKind::Four => {
            let n = config.screen_count;
            for _ in 0..2 {
                for a in 0..n {
                    for b in (0..n).filter(|&b| b != a) {
                        pairs.push((a, b));
                    }
                }
            }
            while pairs.len() < TRIALS_PER_BLOCK {
                let a = rng.gen_range(0..n);
                let b = (a + rng.gen_range(1..n)) % n;
                pairs.push((a, b));
            }
        }
    }
    pairs.shuffle(&mut rng);
    let trials = pairs
        .into_iter()
        .enumerate()
        .map(|(id, (a, b))| trial(id, a, b, &mut rng, params))
        .collect();
    TransferBlock { kind, seed, params: *params, trials }
}

/// Scores one trial from the router's effect log. The first release that overlaps
/// the target ends the trial; its completion time runs from the latest grab of
/// the disk before it. Without a successful release the last attempt is reported
/// as unsuccessful.
pub fn score_transfer(
    trial: &TransferTrial,
    layout: &ScaffoldLayout,
    slot_radius_cm: f64,
    item: u32,
    condition: &str,
    log: &[RouterEffect],
) -> Result<TrialMetrics, TaskError> {
    let incomplete = |reason| TaskError::IncompleteTrial { trial: trial.id, reason };
    let target_screen = layout.screen(trial.target.screen).ok_or(incomplete("target screen not in layout"))?;
    let (tu, tv) = slot_uv(target_screen, trial.target.slot, slot_radius_cm);
    let target = target_screen.screen_to_world(tu, tv);
    let reach = (trial.disk_diameter_cm + trial.target_diameter_cm) / 2.0;

    let mut grab_t = None;
    let mut last = None;
    for effect in log {
        match *effect {
            RouterEffect::Grabbed { t, item: i, .. } if i == item => grab_t = Some(t),
            RouterEffect::Released { t, item: i, screen, u, v } if i == item => {
                let Some(g) = grab_t else { continue };
                let s = layout.screen(screen).ok_or(incomplete("release on unknown screen"))?;
                let distance = (s.screen_to_world(u, v) - target).norm();
                let metrics = TrialMetrics {
                    trial_id: trial.id,
                    condition: condition.to_string(),
                    tct_s: (t - g).max(0.0),
                    distance_cm: Some(distance),
                    errors: None,
                    success: distance < reach,
                };
                if metrics.success {
                    return Ok(metrics);
                }
                last = Some(metrics);
            }
            _ => {}
        }
    }
    match (grab_t, last) {
        (_, Some(m)) => Ok(m),
        (None, None) => Err(incomplete("disk never grabbed")),
        (Some(_), None) => Err(incomplete("disk never released")),
    }
}

pub fn serialize_transfer_block(block: &TransferBlock) -> String {
    let cols = block.kind.layout_config().columns;
    let mut out = Record::new("transfer_block")
        .int("screens", block.kind.screens())
        .int("seed", block.seed)
        .int("trials", block.trials.len())
        .exact("slot_radius_cm", block.params.slot_radius_cm)
        .exact("disk_diameter_cm", block.params.disk_diameter_cm)
        .exact("target_diameter_cm", block.params.target_diameter_cm)
        .finish();
    out.push('\n');
    for t in &block.trials {
        let (dx, dy) = t.displacement(cols);
        out.push_str(
            &Record::new("transfer_trial")
                .int("id", t.id)
                .int("start_screen", t.start.screen)
                .int("start_slot", t.start.slot)
                .int("target_screen", t.target.screen)
                .int("target_slot", t.target.slot)
                .int("dx", dx)
                .int("dy", dy)
                .finish(),
        );
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct RawBlock {
    screens: u32,
    seed: u64,
    trials: usize,
    slot_radius_cm: f64,
    disk_diameter_cm: f64,
    target_diameter_cm: f64,
}

#[derive(Deserialize)]
struct RawTrial {
    id: usize,
    start_screen: u32,
    start_slot: usize,
    target_screen: u32,
    target_slot: usize,
}

pub fn parse_transfer_block(text: &str) -> Result<TransferBlock, TaskError> {
    let malformed = |line: usize, reason: String| TaskError::Malformed { line, reason };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (i, first) = lines.next().ok_or_else(|| malformed(1, "empty task file".into()))?;
    if record_type(first).as_deref() != Some("transfer_block") {
        return Err(malformed(i + 1, "expected a transfer_block record".into()));
    }
    let raw: RawBlock = serde_json::from_str(first).map_err(|e| malformed(i + 1, e.to_string()))?;
    let kind = LayoutKind::from_screens(raw.screens).ok_or_else(|| malformed(i + 1, format!("unsupported screen count {}", raw.screens)))?;
    let params = TransferParams {
        slot_radius_cm: raw.slot_radius_cm,
        disk_diameter_cm: raw.disk_diameter_cm,
        target_diameter_cm: raw.target_diameter_cm,
    };
    let mut trials = Vec::with_capacity(raw.trials);
    for (i, line) in lines {
        let t: RawTrial = serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string()))?;
        trials.push(TransferTrial {
            id: t.id,
            start: Endpoint { screen: t.start_screen, slot: t.start_slot },
            target: Endpoint { screen: t.target_screen, slot: t.target_slot },
            disk_diameter_cm: params.disk_diameter_cm,
            target_diameter_cm: params.target_diameter_cm,
        });
    }
    if trials.len() != raw.trials {
        return Err(malformed(1, format!("header announces {} trials, found {}", raw.trials, trials.len())));
    }
    Ok(TransferBlock { kind, seed: raw.seed, params, trials })
}
