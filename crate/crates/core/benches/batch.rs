use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vrtouch_core::agent::{Agent, AgentParams};
use vrtouch_core::batch::{gaze_hits, replay_many, transfer_blocks, Exec};
use vrtouch_core::geometry::{build_layout, LayoutConfig, Pose, Vec3};
use vrtouch_core::routing::TechniqueKind;
use vrtouch_core::session::SessionConfig;
use vrtouch_core::tasks::{LayoutKind, TransferParams};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_gaze(c: &mut Criterion) {
    let layout = build_layout(&LayoutConfig::fifteen_screens(), Pose::identity()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rays: Vec<(Vec3, Vec3)> = (0..100_000)
        .map(|_| {
            let yaw: f64 = rng.gen_range(-1.6..1.6);
            let pitch: f64 = rng.gen_range(-0.5..0.5);
            (Vec3::zeros(), Vec3::new(yaw.sin() * pitch.cos(), pitch.sin(), yaw.cos() * pitch.cos()))
        })
        .collect();
    let mut group = c.benchmark_group("gaze_hits");
    group.throughput(Throughput::Elements(rays.len() as u64));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| gaze_hits(exec, &layout, &rays)));
    }
    group.finish();
}

fn bench_replay(c: &mut Criterion) {
    let configs: Vec<SessionConfig> = (0..16).map(|s| SessionConfig::transfer(LayoutKind::Fifteen, TechniqueKind::GazeTouch, s)).collect();
    let traces: Vec<_> = configs.iter().map(|cfg| Agent::run(cfg, AgentParams::default()).unwrap().trace).collect();
    let mut group = c.benchmark_group("replay_many");
    group.sample_size(20);
    group.throughput(Throughput::Elements(traces.len() as u64));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| b.iter(|| replay_many(exec, &configs[0], &traces)));
    }
    group.finish();
}

fn bench_blocks(c: &mut Criterion) {
    let seeds: Vec<u64> = (0..2000).collect();
    let params = TransferParams::default();
    let mut group = c.benchmark_group("transfer_blocks");
    group.throughput(Throughput::Elements(seeds.len() as u64));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| transfer_blocks(exec, LayoutKind::Fifteen, &seeds, &params))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_gaze, bench_replay, bench_blocks);
criterion_main!(benches);
