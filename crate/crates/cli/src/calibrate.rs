//! Idle-baseline calibration written to the stable-state file.

use std::time::Duration;

use finejoule_core::clock::epoch_ms;
use finejoule_core::sampler::{read_log, start_sampling, Ingest, PowerSample, TraceFile};
use finejoule_core::stability::{calibrate, StableState};

use crate::config::{BackendMode, ExperimentConfig};
use crate::error::{CliError, CliResult};

/// Replay mode reads the head of the trace directly, so the result depends
/// only on the trace and the settings.
fn replay_samples(config: &ExperimentConfig, trace: &std::path::Path) -> CliResult<Vec<PowerSample>> {
    let trace = TraceFile::load(trace).map_err(CliError::usage)?;
    let mut ingest = Ingest::new(config.interval_ms, &config.sampler_config().max_counter_range_uj);
    Ok(trace.ticks().into_iter().flat_map(|(t, readings)| ingest.ingest(t, &readings)).collect())
}

fn hardware_samples(config: &ExperimentConfig, duration_s: f64) -> CliResult<Vec<PowerSample>> {
    let sampler = config.sampler_config();
    let started = epoch_ms();
    log::info!("sampling idle power for {duration_s} s; keep the machine otherwise unused");
    let handle = start_sampling(&sampler).map_err(CliError::env)?;
    // one extra interval so the last window is complete
    std::thread::sleep(Duration::from_secs_f64(duration_s) + Duration::from_millis(config.interval_ms));
    handle.stop_and_join().map_err(CliError::env)?;
    let samples = read_log(&sampler.log_path).map_err(CliError::env)?;
    Ok(samples.into_iter().filter(|s| s.t >= started).collect())
}

pub fn run(config: &ExperimentConfig, duration_s: Option<f64>) -> CliResult<StableState> {
    let duration_s = duration_s.unwrap_or(config.calibration_s);
    if duration_s.is_nan() || duration_s <= 0.0 {
        return Err(CliError::usage("calibration duration must be positive"));
    }
    let (samples, at) = match &config.backend {
        BackendMode::Replay(trace) => {
            let samples = replay_samples(config, trace)?;
            let at = samples.iter().map(|s| s.t).min().unwrap_or(0);
            (samples, at)
        }
        BackendMode::Hardware => (hardware_samples(config, duration_s)?, epoch_ms()),
    };
    let state = calibrate(&samples, duration_s, config.stability.window, config.interval_ms, at).map_err(CliError::usage)?;
    state.save(&config.paths.stable_state).map_err(CliError::env)?;
    Ok(state)
}
