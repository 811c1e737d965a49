//! Session configuration file (TOML).
//!
//! Every table is optional and falls back to its defaults:
//!
//! ```toml
//! seed = 7
//! technique = "gaze_touch"          # or "bimanual"
//!
//! [technique_params]                # cm on screen per cm on tablet, cm, fraction, s
//! fine_gain = 1.0
//! coarse_cm_per_screen = 2.0
//! gaze_spatial_threshold_frac = 0.05
//! gaze_temporal_threshold_s = 0.0
//! clutch_mode = "study"             # or "window_manager"
//!
//! [layout]                          # inches, cm, degrees
//! screen_count = 15
//! columns = 5
//! rows = 3
//!
//! [task]
//! kind = "transfer"                 # or "puzzle" with `layers` and `puzzles`
//! screens = 15
//! ```
//!
//! Further tables: `tablet`, `gesture`, `stack`, `peek`, `transfer`, `puzzle_grid`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::geometry::LayoutConfig;
use crate::input::{GestureParams, TabletConfig, TraceHeader, TRACE_VERSION};
use crate::layers::{PeekParams, StackParams};
use crate::routing::{Technique, TechniqueKind, TechniqueParams};
use crate::tasks::{LayoutKind, PuzzleGrid, TransferParams};

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskConfig {
    /// A 32-trial content transfer block on the 4- or 15-screen layout.
    Transfer { screens: u32 },
    /// `puzzles` consecutive puzzles with one piece per layer.
    Puzzle {
        layers: usize,
        #[serde(default = "ten")]
        puzzles: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub seed: u64,
    pub technique: TechniqueKind,
    pub technique_params: TechniqueParams,
    pub layout: LayoutConfig,
    pub tablet: TabletConfig,
    pub gesture: GestureParams,
    pub stack: StackParams,
    pub peek: PeekParams,
    pub transfer: TransferParams,
    pub puzzle_grid: PuzzleGrid,
    pub task: Option<TaskConfig>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            technique: TechniqueKind::GazeTouch,
            technique_params: TechniqueParams::default(),
            layout: LayoutConfig::default(),
            tablet: TabletConfig::default(),
            gesture: GestureParams::default(),
            stack: StackParams::default(),
            peek: PeekParams::default(),
            transfer: TransferParams::default(),
            puzzle_grid: PuzzleGrid::default(),
            task: None,
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("session config serialises")
    }

    pub fn technique(&self) -> Technique {
        Technique {
            kind: self.technique,
            params: self.technique_params,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.layout.validate()?;
        self.tablet.validate()?;
        self.gesture.validate()?;
        self.technique_params.validate()?;
        self.stack.validate()?;
        self.peek.validate()?;
        self.transfer.validate()?;
        self.puzzle_grid.validate()?;
        match self.task {
            None => {}
            Some(TaskConfig::Transfer { screens }) => {
                let kind = LayoutKind::from_screens(screens)
                    .ok_or_else(|| ConfigError::Invalid(format!("transfer task needs 4 or 15 screens, got {screens}")))?;
                let canonical = kind.layout_config();
                if (self.layout.columns, self.layout.rows) != (canonical.columns, canonical.rows) {
                    return Err(ConfigError::Invalid(format!(
                        "transfer task with {screens} screens needs a {}x{} layout, got {}x{}",
                        canonical.columns, canonical.rows, self.layout.columns, self.layout.rows
                    )));
                }
            }
            Some(TaskConfig::Puzzle { layers, puzzles }) => {
                if self.layout.screen_count != 1 {
                    return Err(ConfigError::Invalid("puzzle task runs on a single screen layout".into()));
                }
                if layers == 0 || layers > self.puzzle_grid.cells() as usize {
                    return Err(ConfigError::Invalid(format!(
                        "puzzle with {layers} layers does not fit a {}-cell grid",
                        self.puzzle_grid.cells()
                    )));
                }
                if puzzles == 0 {
                    return Err(ConfigError::Invalid("puzzle task needs at least one puzzle".into()));
                }
                let (w, h) = self.layout.screen_size_cm();
                if self.puzzle_grid.width_cm() > w || self.puzzle_grid.height_cm() > h {
                    return Err(ConfigError::Invalid("puzzle grid does not fit on the screen".into()));
                }
            }
        }
        Ok(())
    }

    /// Applies the layout, tablet, technique and seed recorded in a trace header.
    pub fn with_header(&self, header: &TraceHeader) -> Result<Self, ConfigError> {
        let mut config = self.clone();
        config.layout = header.layout.clone();
        config.tablet = header.tablet;
        config.technique = header.technique;
        config.seed = header.seed;
        config.validate()?;
        Ok(config)
    }

    pub fn header(&self) -> TraceHeader {
        TraceHeader {
            version: TRACE_VERSION,
            technique: self.technique,
            seed: self.seed,
            tablet: self.tablet,
            layout: self.layout.clone(),
        }
    }

    /// Stock configuration for one study condition of the transfer task.
    pub fn transfer(kind: LayoutKind, technique: TechniqueKind, seed: u64) -> Self {
        Self {
            seed,
            technique,
            layout: kind.layout_config(),
            task: Some(TaskConfig::Transfer { screens: kind.screens() }),
            ..Self::default()
        }
    }

    /// Stock configuration for one study condition of the puzzle task.
    pub fn puzzle(layers: usize, puzzles: usize, depth: bool, seed: u64) -> Self {
        Self {
            seed,
            layout: LayoutConfig::single(),
            stack: StackParams {
                layer_count: layers,
                view_mode: if depth { crate::layers::ViewMode::Aligned } else { crate::layers::ViewMode::Flat },
                ..StackParams::default()
            },
            task: Some(TaskConfig::Puzzle { layers, puzzles }),
            ..Self::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::ClutchMode;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(SessionConfig::from_toml("").unwrap(), SessionConfig::default());
    }

    #[test]
    fn parses_nested_tables() {
        let cfg = SessionConfig::from_toml(
            r#"
seed = 9
technique = "bimanual"
[technique_params]
clutch_mode = "window_manager"
[layout]
screen_count = 4
columns = 2
rows = 2
[task]
kind = "transfer"
screens = 4
"#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.technique, TechniqueKind::Bimanual);
        assert_eq!(cfg.technique_params.clutch_mode, ClutchMode::WindowManager);
        assert_eq!(cfg.task, Some(TaskConfig::Transfer { screens: 4 }));
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(SessionConfig::from_toml("bogus = 1").is_err());
        assert!(SessionConfig::from_toml("[layout]\nradius_cm = -1").is_err());
        assert!(matches!(
            SessionConfig::from_toml("[layout]\nscreen_count = 7\ncolumns = 7\nrows = 1"),
            Err(ConfigError::HorizontalSpan { .. })
        ));
        assert!(SessionConfig::from_toml("[task]\nkind = \"transfer\"\nscreens = 4").is_err());
        assert!(SessionConfig::from_toml("[task]\nkind = \"puzzle\"\nlayers = 4").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SessionConfig::puzzle(10, 2, true, 3);
        assert_eq!(SessionConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let cfg = SessionConfig::transfer(LayoutKind::Fifteen, TechniqueKind::Bimanual, 5);
        assert_eq!(SessionConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn header_overrides() {
        let base = SessionConfig::default();
        let mut header = base.header();
        header.seed = 77;
        header.technique = TechniqueKind::Bimanual;
        let cfg = base.with_header(&header).unwrap();
        assert_eq!((cfg.seed, cfg.technique), (77, TechniqueKind::Bimanual));
        assert_eq!(cfg.header(), header);
    }

    #[test]
    fn load_reads_files_and_reports_missing_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.toml");
        let cfg = SessionConfig::puzzle(4, 3, false, 5);
        std::fs::write(&path, cfg.to_toml()).unwrap();
        assert_eq!(SessionConfig::load(&path).unwrap(), cfg);
        let missing = dir.path().join("nope.toml");
        assert!(matches!(SessionConfig::load(&missing), Err(ConfigError::Invalid(m)) if m.contains("nope.toml")));
    }
}
