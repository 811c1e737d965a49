//! Bulk operations over independent inputs. With the `parallel` feature they run
//! on the rayon pool; without it, or with [`Exec::Sequential`], they run in order
//! on the calling thread. Results are identical and in input order either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::agent::{Agent, AgentError, AgentParams, AgentRun};
use crate::error::InputError;
use crate::geometry::{GazeHit, ScaffoldLayout, Vec3};
use crate::input::InputTrace;
use crate::session::{replay, ReplayError, ReplayOutput, SessionConfig};
use crate::tasks::{gen_transfer_block, LayoutKind, TransferBlock, TransferParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Intersects many gaze rays `(origin, direction)` with one layout.
pub fn gaze_hits(exec: Exec, layout: &ScaffoldLayout, rays: &[(Vec3, Vec3)]) -> Vec<Result<Option<GazeHit>, InputError>> {
    map(exec, rays, |(o, d)| layout.gaze_hit(o, d))
}

pub fn replay_many(exec: Exec, config: &SessionConfig, traces: &[InputTrace]) -> Vec<Result<ReplayOutput, ReplayError>> {
    map(exec, traces, |trace| replay(config, trace))
}

pub fn transfer_blocks(exec: Exec, kind: LayoutKind, seeds: &[u64], params: &TransferParams) -> Vec<TransferBlock> {
    map(exec, seeds, |&seed| gen_transfer_block(kind, seed, params))
}

/// Runs the scripted agent once per config.
pub fn run_agents(exec: Exec, configs: &[SessionConfig], params: AgentParams) -> Vec<Result<AgentRun, AgentError>> {
    map(exec, configs, |config| Agent::run(config, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_layout, LayoutConfig, Pose};
    use crate::routing::TechniqueKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parallel_matches_sequential() {
        let layout = build_layout(&LayoutConfig::fifteen_screens(), Pose::identity()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rays: Vec<(Vec3, Vec3)> = (0..2000)
            .map(|_| {
                let yaw: f64 = rng.gen_range(-1.8..1.8);
                let pitch: f64 = rng.gen_range(-0.4..0.4);
                (Vec3::zeros(), Vec3::new(yaw.sin() * pitch.cos(), pitch.sin(), yaw.cos() * pitch.cos()))
            })
            .collect();
        assert_eq!(gaze_hits(Exec::Sequential, &layout, &rays), gaze_hits(Exec::Parallel, &layout, &rays));

        let seeds: Vec<u64> = (0..20).collect();
        let params = TransferParams::default();
        assert_eq!(
            transfer_blocks(Exec::Sequential, LayoutKind::Fifteen, &seeds, &params),
            transfer_blocks(Exec::Parallel, LayoutKind::Fifteen, &seeds, &params)
        );

        let configs: Vec<SessionConfig> = (0..3).map(|s| SessionConfig::transfer(LayoutKind::Four, TechniqueKind::GazeTouch, s)).collect();
        let runs = run_agents(Exec::Parallel, &configs, AgentParams::default());
        let traces: Vec<InputTrace> = runs.iter().map(|r| r.as_ref().unwrap().trace.clone()).collect();
        let seq = replay_many(Exec::Sequential, &configs[0], &traces);
        let par = replay_many(Exec::Parallel, &configs[0], &traces);
        assert_eq!(seq, par);
        for (run, out) in runs.iter().zip(&seq) {
            assert_eq!(run.as_ref().unwrap().metrics, out.as_ref().unwrap().metrics);
        }
    }
}
