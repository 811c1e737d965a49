//! Puzzle: one piece per layer, to be dragged onto the cell shown by a template.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, TaskError};
use crate::geometry::positive;
use crate::records::{record_type, Record};
use crate::tasks::TrialMetrics;

/// Grid the pieces snap into; `(0, 0)` is the bottom-left cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PuzzleGrid {
    pub columns: u32,
    pub rows: u32,
    pub cell_cm: f64,
}

impl Default for PuzzleGrid {
    fn default() -> Self {
        Self { columns: 5, rows: 3, cell_cm: 5.0 }
    }
}

impl PuzzleGrid {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.columns == 0 || self.rows == 0 {
            return Err(ConfigError::Invalid("puzzle grid needs at least one cell".into()));
        }
        positive("puzzle.cell_cm", self.cell_cm)
    }

    pub fn width_cm(&self) -> f64 {
        self.columns as f64 * self.cell_cm
    }

    pub fn height_cm(&self) -> f64 {
        self.rows as f64 * self.cell_cm
    }

    pub fn cells(&self) -> u32 {
        self.columns * self.rows
    }

    pub fn cell_center(&self, cell: (u32, u32)) -> (f64, f64) {
        ((cell.0 as f64 + 0.5) * self.cell_cm, (cell.1 as f64 + 0.5) * self.cell_cm)
    }

    fn cell_of(&self, index: u32) -> (u32, u32) {
        (index % self.columns, index / self.columns)
    }
}

fn snap_axis(x: f64, cell: f64, count: u32) -> u32 {
    // Cell k owns (k*cell, (k+1)*cell]; a point on a shared edge is equidistant to
    // both centres and goes to the lower cell.
    let k = (x / cell).ceil() - 1.0;
    k.clamp(0.0, (count - 1) as f64) as u32
}

/// Cell whose centre is nearest to `(x_cm, y_cm)`, measured from the grid's
/// bottom-left corner. Ties go to the lower column and row; points outside the
/// grid snap to the nearest edge cell.
pub fn snap_to_grid(x_cm: f64, y_cm: f64, grid: &PuzzleGrid) -> (u32, u32) {
    (snap_axis(x_cm, grid.cell_cm, grid.columns), snap_axis(y_cm, grid.cell_cm, grid.rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuzzleSpec {
    pub id: usize,
    pub grid: PuzzleGrid,
    /// Target cell per layer.
    pub template: Vec<(u32, u32)>,
    /// Starting cell per layer.
    pub start: Vec<(u32, u32)>,
}

impl PuzzleSpec {
    pub fn layer_count(&self) -> usize {
        self.template.len()
    }
}

/// Random puzzle: distinct template cells and a different start cell per piece.
pub fn gen_puzzle(id: usize, layer_count: usize, grid: &PuzzleGrid, rng: &mut impl Rng) -> Result<PuzzleSpec, ConfigError> {
    grid.validate()?;
    let cells = grid.cells() as usize;
    if layer_count == 0 || layer_count > cells || cells < 2 {
        return Err(ConfigError::Invalid(format!("a {cells}-cell grid cannot hold {layer_count} distinct pieces")));
    }
    let template: Vec<(u32, u32)> = sample(rng, cells, layer_count).into_iter().map(|i| grid.cell_of(i as u32)).collect();
    let start = template
        .iter()
        .map(|&t| {
            let other = rng.gen_range(0..cells as u32 - 1);
            let skip = t.1 * grid.columns + t.0;
            grid.cell_of(if other >= skip { other + 1 } else { other })
        })
        .collect();
    Ok(PuzzleSpec { id, grid: *grid, template, start })
}

pub fn gen_puzzle_set(layer_count: usize, count: usize, seed: u64, grid: &PuzzleGrid) -> Result<Vec<PuzzleSpec>, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|id| gen_puzzle(id, layer_count, grid, &mut rng)).collect()
}

/// Counts pieces not on their template cell when the participant moved on.
pub fn score_puzzle(spec: &PuzzleSpec, placed: &[(u32, u32)], t_start: f64, t_next: Option<f64>, condition: &str) -> Result<TrialMetrics, TaskError> {
    let t_next = t_next.ok_or(TaskError::IncompleteTrial { trial: spec.id, reason: "no `next` command" })?;
    if placed.len() != spec.layer_count() {
        return Err(TaskError::IncompleteTrial { trial: spec.id, reason: "piece count does not match the puzzle" });
    }
    let errors = spec.template.iter().zip(placed).filter(|(t, p)| t != p).count() as u32;
    Ok(TrialMetrics {
        trial_id: spec.id,
        condition: condition.to_string(),
        tct_s: (t_next - t_start).max(0.0),
        distance_cm: None,
        errors: Some(errors),
        success: true,
    })
}

pub fn serialize_puzzles(specs: &[PuzzleSpec]) -> String {
    let mut out = String::new();
    for spec in specs {
        out.push_str(
            &Record::new("puzzle")
                .int("id", spec.id)
                .int("layers", spec.layer_count())
                .int("columns", spec.grid.columns)
                .int("rows", spec.grid.rows)
                .exact("cell_cm", spec.grid.cell_cm)
                .finish(),
        );
        out.push('\n');
        for (layer, (t, s)) in spec.template.iter().zip(&spec.start).enumerate() {
            out.push_str(
                &Record::new("puzzle_piece")
                    .int("puzzle", spec.id)
                    .int("layer", layer)
                    .int("template_col", t.0)
                    .int("template_row", t.1)
                    .int("start_col", s.0)
                    .int("start_row", s.1)
                    .finish(),
            );
            out.push('\n');
        }
    }
    out
}

#[derive(Deserialize)]
struct RawPuzzle {
    id: usize,
    layers: usize,
    columns: u32,
    rows: u32,
    cell_cm: f64,
}

#[derive(Deserialize)]
struct RawPiece {
    puzzle: usize,
    layer: usize,
    template_col: u32,
    template_row: u32,
    start_col: u32,
    start_row: u32,
}

pub fn parse_puzzles(text: &str) -> Result<Vec<PuzzleSpec>, TaskError> {
    let malformed = |line: usize, reason: String| TaskError::Malformed { line, reason };
    let mut specs: Vec<(PuzzleSpec, usize)> = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        match record_type(line).as_deref() {
            Some("puzzle") => {
                let p: RawPuzzle = serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string()))?;
                let grid = PuzzleGrid { columns: p.columns, rows: p.rows, cell_cm: p.cell_cm };
                specs.push((PuzzleSpec { id: p.id, grid, template: Vec::new(), start: Vec::new() }, p.layers));
            }
            Some("puzzle_piece") => {
                let p: RawPiece = serde_json::from_str(line).map_err(|e| malformed(i + 1, e.to_string()))?;
                let (spec, _) = specs.last_mut().filter(|(s, _)| s.id == p.puzzle).ok_or_else(|| malformed(i + 1, "piece outside its puzzle".into()))?;
                if p.layer != spec.template.len() {
                    return Err(malformed(i + 1, format!("expected layer {}, got {}", spec.template.len(), p.layer)));
                }
                spec.template.push((p.template_col, p.template_row));
                spec.start.push((p.start_col, p.start_row));
            }
            _ => return Err(malformed(i + 1, "expected a puzzle or puzzle_piece record".into())),
        }
    }
    specs
        .into_iter()
        .map(|(spec, layers)| {
            if spec.template.len() == layers {
                Ok(spec)
            } else {
                Err(malformed(0, format!("puzzle {} announces {layers} pieces, found {}", spec.id, spec.template.len())))
            }
        })
        .collect()
}
