#![allow(dead_code)]

use std::path::{Path, PathBuf};

use finejoule_core::sampler::CounterRanges;
use finejoule_core::sim::TraceBuilder;
use finejoule_core::PerComponent;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const IDLE_W: (f64, f64, f64) = (20.0, 4.0, 18.0);

pub fn shim_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/shim")
}

pub fn idle() -> PerComponent<f64> {
    PerComponent::new(IDLE_W.0, IDLE_W.1, IDLE_W.2)
}

/// Idle for `idle_ms`, then a constant extra load for `load_ms`.
pub fn write_trace(path: &Path, interval_ms: u64, idle_ms: i64, load_ms: i64, extra: PerComponent<f64>, noise_w: f64) {
    let mut b = TraceBuilder::new(interval_ms, idle()).noise(noise_w);
    b.idle(idle_ms).unwrap();
    b.load(load_ms, extra).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(7), 1_000_000, &CounterRanges::default());
    trace.write(std::fs::File::create(path).unwrap()).unwrap();
}
