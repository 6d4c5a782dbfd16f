use std::path::Path;

use finejoule_core::clock::ManualClock;
use finejoule_core::sampler::{read_log, CounterRanges, PowerSample};
use finejoule_core::sim::{replay_to_log, TraceBuilder};
use finejoule_core::stability::{
    calibrate, coefficient_of_variation, is_energy_stable, poll_once, wait_for_stable, ComponentBaseline, LogProbe,
    StabilityConfig, StabilityError, StableState, WaitOutcome,
};
use finejoule_core::{Component, PerComponent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const IDLE: PerComponent<f64> = PerComponent { cpu: 20.0, ram: 4.0, gpu: 18.0 };

fn baseline(cv: f64) -> StableState {
    StableState {
        components: PerComponent::from_fn(|c| ComponentBaseline { mean_power_w: *IDLE.get(c), cv }),
        calibration_s: 600.0,
        calibrated_at: 0,
    }
}

/// 10 s idle, a 3 s GPU spike, then 30 s idle.
fn spike_log(dir: &Path) -> Vec<PowerSample> {
    let mut b = TraceBuilder::new(500, IDLE);
    b.idle(10_000).unwrap();
    b.load(3_000, PerComponent::new(0.0, 0.0, 30.0)).unwrap();
    b.idle(30_000).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(0), 0, &CounterRanges::default());
    replay_to_log(&trace, 500, CounterRanges::default(), dir).unwrap()
}

#[test]
fn spike_inside_window_is_unstable_and_shifting_past_it_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let samples = spike_log(dir.path());
    let log = dir.path().join("energy_log.jsonl");
    let config = StabilityConfig::default();
    let base = baseline(0.05);

    // Oracle: the GPU window ending at 13000 still holds the spike sample at 12500.
    let gpu: Vec<&PowerSample> = samples.iter().filter(|s| s.component == Component::Gpu).collect();
    let window_at = |now: i64| -> Vec<f64> {
        let upto: Vec<f64> = gpu.iter().filter(|s| s.t <= now).map(|s| s.power_w).collect();
        upto[upto.len() - 20..].to_vec()
    };
    assert!(coefficient_of_variation(&window_at(22_000)).unwrap() > 0.05);
    assert_eq!(coefficient_of_variation(&window_at(22_500)).unwrap(), 0.0);

    let mut probe = LogProbe::new(&log);
    assert!(!poll_once(&config, &base, &mut probe, 22_000).unwrap().is_stable());
    assert!(poll_once(&config, &base, &mut probe, 22_500).unwrap().is_stable());

    let clock = ManualClock::starting_at(13_000);
    let report = wait_for_stable(&config, &base, &mut probe, &clock).unwrap();
    assert_eq!(report.outcome, WaitOutcome::Stable);
    assert_eq!(report.waited_s, 9.5);
    assert!(report.waited_s >= 3.0);
}

#[test]
fn gate_is_deterministic_across_replays() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        spike_log(dir.path());
        let mut probe = LogProbe::new(&dir.path().join("energy_log.jsonl"));
        let clock = ManualClock::starting_at(10_000);
        wait_for_stable(&StabilityConfig::default(), &baseline(0.05), &mut probe, &clock).unwrap()
    };
    let first = run();
    for _ in 0..3 {
        assert_eq!(run(), first);
    }
}

#[test]
fn already_stable_trace_waits_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = TraceBuilder::new(500, IDLE);
    b.idle(20_000).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(0), 0, &CounterRanges::default());
    replay_to_log(&trace, 500, CounterRanges::default(), dir.path()).unwrap();
    let mut probe = LogProbe::new(&dir.path().join("energy_log.jsonl"));
    let clock = ManualClock::starting_at(20_000);
    let report = wait_for_stable(&StabilityConfig::default(), &baseline(0.0), &mut probe, &clock).unwrap();
    assert_eq!((report.outcome, report.waited_s, report.polls), (WaitOutcome::Stable, 0.0, 1));
}

#[test]
fn permanently_noisy_trace_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = TraceBuilder::new(500, IDLE).noise(5.0);
    b.idle(120_000).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(9), 0, &CounterRanges::default());
    replay_to_log(&trace, 500, CounterRanges::default(), dir.path()).unwrap();
    let mut probe = LogProbe::new(&dir.path().join("energy_log.jsonl"));
    let config = StabilityConfig { wait_timeout_s: 30.0, ..StabilityConfig::default() };
    let clock = ManualClock::starting_at(20_000);
    let report = wait_for_stable(&config, &baseline(0.001), &mut probe, &clock).unwrap();
    assert_eq!(report.outcome, WaitOutcome::Timeout);
    assert_eq!(report.waited_s, 30.0);
}

#[test]
fn hot_gpu_blocks_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = TraceBuilder::new(500, IDLE).temperatures(50.0, 40.0);
    b.idle(20_000).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(0), 0, &CounterRanges::default());
    replay_to_log(&trace, 500, CounterRanges::default(), dir.path()).unwrap();
    let mut probe = LogProbe::new(&dir.path().join("energy_log.jsonl"));
    let verdict = poll_once(&StabilityConfig::default(), &baseline(0.05), &mut probe, 20_000).unwrap();
    assert!(!verdict.temperature_ok);
    assert!(!verdict.is_stable());
}

#[test]
fn calibration_of_idle_eighteen_watt_gpu() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = TraceBuilder::new(500, IDLE);
    b.idle(600_000).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(0), 0, &CounterRanges::default());
    let samples = replay_to_log(&trace, 500, CounterRanges::default(), dir.path()).unwrap();
    let state = calibrate(&samples, 600.0, 20, 500, 0).unwrap();
    assert_eq!(state.components.gpu.mean_power_w, 18.0);
    assert_eq!(state.components.gpu.cv, 0.0);
    assert!((state.components.cpu.mean_power_w - 20.0).abs() < 1e-9);

    let path = dir.path().join("stable_state.json");
    state.save(&path).unwrap();
    assert_eq!(StableState::load(&path).unwrap(), state);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["gpu"]["mean_power_w"], 18.0);
    assert_eq!(v["calibration_s"], 600.0);
}

#[test]
fn calibration_shorter_than_window_fails() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = TraceBuilder::new(500, IDLE);
    b.idle(5_000).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(0), 0, &CounterRanges::default());
    let samples = replay_to_log(&trace, 500, CounterRanges::default(), dir.path()).unwrap();
    assert!(matches!(
        calibrate(&samples, 10.0, 20, 500, 0),
        Err(StabilityError::CalibrationTooShort { .. })
    ));
    assert_eq!(read_log(&dir.path().join("energy_log.jsonl")).unwrap().len(), samples.len());
}

#[test]
fn calibration_slices_of_constant_data_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = TraceBuilder::new(500, IDLE);
    b.idle(30_000).unwrap();
    let trace = b.build(&mut ChaCha8Rng::seed_from_u64(0), 0, &CounterRanges::default());
    let samples = replay_to_log(&trace, 500, CounterRanges::default(), dir.path()).unwrap();
    let state = calibrate(&samples, 30.0, 20, 500, 0).unwrap();
    let per: PerComponent<Vec<f64>> =
        PerComponent::from_fn(|c| samples.iter().filter(|s| s.component == c).map(|s| s.power_w).collect());
    for start in 0..(per.cpu.len() - 20) {
        let window = per.map(|_, v| v[start..start + 20].to_vec());
        assert!(is_energy_stable(&window, &state, 20).unwrap());
    }
}
