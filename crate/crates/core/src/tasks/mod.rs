//! The content transfer and puzzle tasks, plus condition ordering and metrics.

mod latin;
mod metrics;
mod puzzle;
mod transfer;

pub use latin::balanced_latin_square;
pub use metrics::{export_metrics, parse_metrics, MetricsFormat, TrialMetrics, CSV_COLUMNS};
pub use puzzle::{gen_puzzle, gen_puzzle_set, parse_puzzles, score_puzzle, serialize_puzzles, snap_to_grid, PuzzleGrid, PuzzleSpec};
pub use transfer::{
    gen_transfer_block, parse_transfer_block, score_transfer, serialize_transfer_block, slot_uv, Endpoint, LayoutKind, TransferBlock, TransferParams,
    TransferTrial, SLOT_COUNT, TRIALS_PER_BLOCK,
};
