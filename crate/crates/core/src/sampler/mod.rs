//! Periodic per-component power sampling.
//!
//! Backends produce raw channel readings (cumulative energy counters for the
//! CPU package and DRAM domains, instantaneous watts for the GPU, and
//! temperatures). The sampling loop turns them into [`PowerSample`]s, one per
//! component per tick, and appends them to a JSON-lines log. Counter channels
//! are normalised to average power over the sampling interval at ingest so
//! every log line has the same shape.

mod backend;
mod log;
mod runner;
mod trace;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::component::Component;

pub use backend::{
    open_backends, BackendDescriptor, CpuTemperatureBackend, HardwareTemperatures,
    NvidiaSmiBackend, Pacing, PowerBackend, RaplBackend, ReplayBackend, ReplayTemperatures,
    TemperatureSource, Temperatures, Tick,
};
pub use log::{read_log, LogTail, LogWriter};
pub use runner::{start_sampling, Ingest, SamplerHandle, SamplerOutcome, SamplerStatus};
pub use trace::{Channel, TraceFile, TraceRow};

/// Largest value a RAPL package counter reaches before wrapping on common
/// Intel parts (`max_energy_range_uj`).
pub const DEFAULT_MAX_COUNTER_RANGE_UJ: i64 = 262_143_328_850;

pub const DEFAULT_INTERVAL_MS: u64 = 500;

#[derive(Debug, thiserror::Error)]
pub enum SamplerError {
    #[error("invalid counter reading: {0}")]
    InvalidReading(String),
    #[error("malformed sample series: {0}")]
    MalformedSeries(String),
    #[error("sampling backends unavailable; missing channels: {}", .missing.join(", "))]
    BackendUnavailable { missing: Vec<String> },
    #[error("channel `{0}` is not available")]
    UnavailableChannel(String),
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("malformed trace: {0}")]
    Trace(String),
    #[error("end of trace")]
    EndOfTrace,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One timestamped per-component reading from the energy log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSample {
    /// Epoch milliseconds.
    pub t: i64,
    pub component: Component,
    /// Watts: average over the preceding interval for counter channels,
    /// instantaneous for the GPU.
    pub power_w: f64,
    pub temp_c: Option<f64>,
}

impl PowerSample {
    pub fn new(t: i64, component: Component, power_w: f64) -> Self {
        PowerSample { t, component, power_w, temp_c: None }
    }

    pub fn with_temp(mut self, temp_c: f64) -> Self {
        self.temp_c = Some(temp_c);
        self
    }
}

/// Per-channel wraparound limits for cumulative counters, in microjoules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterRanges {
    pub cpu_uj: i64,
    pub ram_uj: i64,
}

impl Default for CounterRanges {
    fn default() -> Self {
        CounterRanges {
            cpu_uj: DEFAULT_MAX_COUNTER_RANGE_UJ,
            ram_uj: DEFAULT_MAX_COUNTER_RANGE_UJ,
        }
    }
}

impl CounterRanges {
    pub fn for_channel(&self, channel: Channel) -> Option<i64> {
        match channel {
            Channel::CpuUj => Some(self.cpu_uj),
            Channel::RamUj => Some(self.ram_uj),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub interval_ms: u64,
    pub backends: Vec<BackendDescriptor>,
    pub log_path: PathBuf,
    pub max_counter_range_uj: CounterRanges,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            interval_ms: DEFAULT_INTERVAL_MS,
            backends: BackendDescriptor::hardware_defaults(),
            log_path: PathBuf::from("energy_log.jsonl"),
            max_counter_range_uj: CounterRanges::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.interval_ms < 1 {
            return Err(SamplerError::Config(
                "sampling interval must be at least 1 ms".into(),
            ));
        }
        if self.backends.is_empty() {
            return Err(SamplerError::Config("no sampling backends configured".into()));
        }
        for (name, range) in [
            ("cpu_uj", self.max_counter_range_uj.cpu_uj),
            ("ram_uj", self.max_counter_range_uj.ram_uj),
        ] {
            if range <= 0 {
                return Err(SamplerError::Config(format!(
                    "max counter range for {name} must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Energy in joules between two readings of a cumulative microjoule counter
/// that wraps to zero after `max_range`.
pub fn counter_delta_energy(prev: i64, curr: i64, max_range: i64) -> Result<f64, SamplerError> {
    if max_range <= 0 {
        return Err(SamplerError::InvalidReading(format!(
            "max range must be positive, got {max_range}"
        )));
    }
    for (label, v) in [("previous", prev), ("current", curr)] {
        if v < 0 || v > max_range {
            return Err(SamplerError::InvalidReading(format!(
                "{label} reading {v} outside [0, {max_range}]"
            )));
        }
    }
    let delta_uj = if curr >= prev {
        curr - prev
    } else {
        (max_range - prev) + curr
    };
    Ok(delta_uj as f64 / 1e6)
}

/// Rectangle-rule energy over the half-open window `[t_start, t_end)`: every
/// sample inside the window contributes `power * interval`.
pub fn integrate_power(
    samples: &[PowerSample],
    t_start: i64,
    t_end: i64,
    interval_ms: u64,
) -> Result<f64, SamplerError> {
    if t_start > t_end {
        return Err(SamplerError::MalformedSeries(format!(
            "window start {t_start} is after end {t_end}"
        )));
    }
    if let Some(w) = samples.windows(2).find(|w| w[1].t < w[0].t) {
        return Err(SamplerError::MalformedSeries(format!(
            "timestamps out of order: {} after {}",
            w[1].t, w[0].t
        )));
    }
    let dt = interval_ms as f64 / 1000.0;
    // Samples are sorted, so the window is a contiguous run.
    let lo = samples.partition_point(|s| s.t < t_start);
    let hi = samples.partition_point(|s| s.t < t_end);
    Ok(samples[lo..hi].iter().map(|s| s.power_w * dt).sum())
}
