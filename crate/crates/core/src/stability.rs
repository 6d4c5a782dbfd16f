//! No-load baseline calibration and the pre-measurement stability gate.
//!
//! A machine is stable when, for every component, the coefficient of
//! variation (population σ / μ) of the most recent `window` power readings is
//! at or below the coefficient of variation measured during calibration, and
//! both CPU and GPU temperatures are strictly below their ceilings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::component::{Component, PerComponent};
use crate::sampler::{LogTail, PowerSample, SamplerError, Temperatures};

pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_CPU_MAX_TEMP_C: f64 = 55.0;
pub const DEFAULT_GPU_MAX_TEMP_C: f64 = 40.0;
pub const DEFAULT_CALIBRATION_S: f64 = 600.0;
pub const DEFAULT_SETTLE_S: f64 = 10.0;
pub const DEFAULT_CHECK_INTERVAL_MS: u64 = 500;
pub const DEFAULT_WAIT_TIMEOUT_S: f64 = 600.0;

#[derive(Debug, thiserror::Error)]
pub enum StabilityError {
    #[error("coefficient of variation undefined: {0}")]
    UndefinedCv(&'static str),
    #[error("calibration too short: {component} has {have} samples, need at least {need}")]
    CalibrationTooShort { component: Component, have: usize, need: usize },
    #[error("insufficient data: {component} has {have} of {need} window samples")]
    InsufficientData { component: Component, have: usize, need: usize },
    #[error("invalid stable state: {0}")]
    InvalidBaseline(String),
    #[error("invalid stability configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Population standard deviation divided by the mean.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64, StabilityError> {
    if values.is_empty() {
        return Err(StabilityError::UndefinedCv("empty series"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(StabilityError::UndefinedCv("zero mean"));
    }
    // Exactly constant series are exactly stable; the rounded mean could
    // otherwise leave a residual of a few ulps.
    if values.iter().all(|v| *v == values[0]) {
        return Ok(0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(var.sqrt() / mean.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentBaseline {
    pub mean_power_w: f64,
    pub cv: f64,
}

/// No-load baseline. Serialized as the stable-state file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StableState {
    #[serde(flatten)]
    pub components: PerComponent<ComponentBaseline>,
    pub calibration_s: f64,
    /// Epoch milliseconds.
    pub calibrated_at: i64,
}

impl StableState {
    pub fn mean_power(&self) -> PerComponent<f64> {
        self.components.map(|_, b| b.mean_power_w)
    }

    pub fn validate(&self) -> Result<(), StabilityError> {
        for (c, b) in self.components.iter() {
            if b.mean_power_w.is_nan() || b.mean_power_w <= 0.0 {
                return Err(StabilityError::InvalidBaseline(format!("{c} mean power must be positive")));
            }
            if b.cv.is_nan() || b.cv < 0.0 {
                return Err(StabilityError::InvalidBaseline(format!("{c} cv must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, StabilityError> {
        let state: StableState = serde_json::from_slice(&std::fs::read(path)?)?;
        state.validate()?;
        Ok(state)
    }

    pub fn save(&self, path: &Path) -> Result<(), StabilityError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityConfig {
    /// Number of most recent readings per component.
    pub window: usize,
    pub cpu_max_temp_c: f64,
    pub gpu_max_temp_c: f64,
    pub check_interval_ms: u64,
    pub wait_timeout_s: f64,
    pub settle_after_execution_s: f64,
    /// When false, a missing temperature channel skips the temperature check.
    pub require_temperature: bool,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            window: DEFAULT_WINDOW,
            cpu_max_temp_c: DEFAULT_CPU_MAX_TEMP_C,
            gpu_max_temp_c: DEFAULT_GPU_MAX_TEMP_C,
            check_interval_ms: DEFAULT_CHECK_INTERVAL_MS,
            wait_timeout_s: DEFAULT_WAIT_TIMEOUT_S,
            settle_after_execution_s: DEFAULT_SETTLE_S,
            require_temperature: true,
        }
    }
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<(), StabilityError> {
        if self.window < 2 {
            return Err(StabilityError::Config("window must hold at least 2 samples".into()));
        }
        if !(self.cpu_max_temp_c > 0.0 && self.gpu_max_temp_c > 0.0) {
            return Err(StabilityError::Config("temperature thresholds must be positive".into()));
        }
        if self.wait_timeout_s.is_nan() || self.wait_timeout_s <= 0.0 {
            return Err(StabilityError::Config("wait timeout must be positive".into()));
        }
        if self.check_interval_ms == 0 {
            return Err(StabilityError::Config("check interval must be positive".into()));
        }
        if self.settle_after_execution_s < 0.0 {
            return Err(StabilityError::Config("settle time cannot be negative".into()));
        }
        Ok(())
    }
}

/// Builds the baseline from samples recorded under no load. Only samples in
/// the first `duration_s` seconds (from the earliest sample) are used.
pub fn calibrate(
    samples: &[PowerSample],
    duration_s: f64,
    window: usize,
    interval_ms: u64,
    calibrated_at: i64,
) -> Result<StableState, StabilityError> {
    if duration_s * 1000.0 < (window as f64) * interval_ms as f64 {
        return Err(StabilityError::Config(format!(
            "calibration of {duration_s} s cannot fill a window of {window} samples at {interval_ms} ms"
        )));
    }
    let Some(t0) = samples.iter().map(|s| s.t).min() else {
        return Err(StabilityError::CalibrationTooShort { component: Component::Cpu, have: 0, need: window });
    };
    let t_end = t0 + (duration_s * 1000.0).round() as i64;
    let components = PerComponent::try_from_fn(|c| {
        let values: Vec<f64> = samples
            .iter()
            .filter(|s| s.component == c && s.t >= t0 && s.t < t_end)
            .map(|s| s.power_w)
            .collect();
        if values.len() < window {
            return Err(StabilityError::CalibrationTooShort { component: c, have: values.len(), need: window });
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean.is_nan() || mean <= 0.0 {
            return Err(StabilityError::InvalidBaseline(format!("{c} idle power is not positive")));
        }
        Ok(ComponentBaseline { mean_power_w: mean, cv: coefficient_of_variation(&values)? })
    })?;
    Ok(StableState { components, calibration_s: duration_s, calibrated_at })
}

/// True iff every component's recent CV is at or below its baseline CV.
/// Only the last `window` values of each series are considered.
pub fn is_energy_stable(
    recent: &PerComponent<Vec<f64>>,
    baseline: &StableState,
    window: usize,
) -> Result<bool, StabilityError> {
    let mut stable = true;
    for (c, values) in recent.iter() {
        if values.len() < window {
            return Err(StabilityError::InsufficientData { component: c, have: values.len(), need: window });
        }
        let cv = coefficient_of_variation(&values[values.len() - window..])?;
        stable &= cv <= baseline.components.get(c).cv;
    }
    Ok(stable)
}

/// Strict comparison: a reading at the ceiling fails.
pub fn is_temperature_ok(cpu_c: f64, gpu_c: f64, config: &StabilityConfig) -> bool {
    cpu_c < config.cpu_max_temp_c && gpu_c < config.gpu_max_temp_c
}

/// Source of recent readings for the polling loop.
pub trait StabilityProbe {
    /// Up to the last `window` power readings per component with `t <= now_ms`.
    fn recent_power(&mut self, now_ms: i64, window: usize) -> Result<PerComponent<Vec<f64>>, StabilityError>;
    fn temperatures(&mut self, now_ms: i64) -> Result<Temperatures, StabilityError>;
}

/// Probe over an in-memory sample list.
pub struct SeriesProbe {
    tail: PerComponent<Vec<PowerSample>>,
}

impl SeriesProbe {
    pub fn new(samples: &[PowerSample]) -> Self {
        let mut tail: PerComponent<Vec<PowerSample>> = PerComponent::default();
        for s in samples {
            tail.get_mut(s.component).push(s.clone());
        }
        for c in Component::ALL {
            tail.get_mut(c).sort_by_key(|s| s.t);
        }
        SeriesProbe { tail }
    }
}

fn last_before(series: &[PowerSample], now: i64, n: usize) -> &[PowerSample] {
    let hi = series.partition_point(|s| s.t <= now);
    &series[hi.saturating_sub(n)..hi]
}

fn temps_from(cpu: &[PowerSample], gpu: &[PowerSample], now: i64) -> Result<Temperatures, StabilityError> {
    let latest = |s: &[PowerSample], ch: &str| {
        let hi = s.partition_point(|x| x.t <= now);
        s[..hi]
            .iter()
            .rev()
            .find_map(|x| x.temp_c)
            .ok_or_else(|| StabilityError::Sampler(SamplerError::UnavailableChannel(ch.into())))
    };
    Ok(Temperatures { cpu_c: latest(cpu, "cpu_temp_c")?, gpu_c: latest(gpu, "gpu_temp_c")? })
}

impl StabilityProbe for SeriesProbe {
    fn recent_power(&mut self, now_ms: i64, window: usize) -> Result<PerComponent<Vec<f64>>, StabilityError> {
        Ok(self
            .tail
            .map(|_, s| last_before(s, now_ms, window).iter().map(|x| x.power_w).collect()))
    }

    fn temperatures(&mut self, now_ms: i64) -> Result<Temperatures, StabilityError> {
        temps_from(&self.tail.cpu, &self.tail.gpu, now_ms)
    }
}

/// Probe over a live energy log.
pub struct LogProbe {
    tail: LogTail,
}

impl LogProbe {
    pub fn new(log_path: &Path) -> Self {
        LogProbe { tail: LogTail::new(log_path) }
    }

    pub fn from_tail(tail: LogTail) -> Self {
        LogProbe { tail }
    }
}

impl StabilityProbe for LogTail {
    fn recent_power(&mut self, now_ms: i64, window: usize) -> Result<PerComponent<Vec<f64>>, StabilityError> {
        self.refresh()?;
        Ok(PerComponent::from_fn(|c| self.last_before(c, now_ms, window).iter().map(|s| s.power_w).collect()))
    }

    fn temperatures(&mut self, now_ms: i64) -> Result<Temperatures, StabilityError> {
        self.refresh()?;
        temps_from(self.series(Component::Cpu), self.series(Component::Gpu), now_ms)
    }
}

impl StabilityProbe for LogProbe {
    fn recent_power(&mut self, now_ms: i64, window: usize) -> Result<PerComponent<Vec<f64>>, StabilityError> {
        self.tail.recent_power(now_ms, window)
    }

    fn temperatures(&mut self, now_ms: i64) -> Result<Temperatures, StabilityError> {
        self.tail.temperatures(now_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaitOutcome {
    Stable,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaitReport {
    pub waited_s: f64,
    pub outcome: WaitOutcome,
    pub polls: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PollVerdict {
    pub temperature_ok: bool,
    /// `None` when the energy check was not reached.
    pub energy_stable: Option<bool>,
}

impl PollVerdict {
    pub fn is_stable(&self) -> bool {
        self.temperature_ok && self.energy_stable == Some(true)
    }
}

/// One gate evaluation: temperature first, then energy stability.
/// Missing data counts as a failed check rather than an error.
pub fn poll_once(
    config: &StabilityConfig,
    baseline: &StableState,
    probe: &mut dyn StabilityProbe,
    now_ms: i64,
) -> Result<PollVerdict, StabilityError> {
    let temperature_ok = match probe.temperatures(now_ms) {
        Ok(t) => is_temperature_ok(t.cpu_c, t.gpu_c, config),
        Err(StabilityError::Sampler(SamplerError::UnavailableChannel(_))) => !config.require_temperature,
        Err(e) => return Err(e),
    };
    if !temperature_ok {
        return Ok(PollVerdict { temperature_ok, energy_stable: None });
    }
    let recent = probe.recent_power(now_ms, config.window)?;
    let energy_stable = match is_energy_stable(&recent, baseline, config.window) {
        Ok(v) => v,
        Err(StabilityError::InsufficientData { .. } | StabilityError::UndefinedCv(_)) => false,
        Err(e) => return Err(e),
    };
    Ok(PollVerdict { temperature_ok, energy_stable: Some(energy_stable) })
}

/// Polls every `check_interval_ms` until the gate passes or the timeout elapses.
pub fn wait_for_stable(
    config: &StabilityConfig,
    baseline: &StableState,
    probe: &mut dyn StabilityProbe,
    clock: &dyn Clock,
) -> Result<WaitReport, StabilityError> {
    config.validate()?;
    let start = clock.now_ms();
    let timeout_ms = (config.wait_timeout_s * 1000.0).round() as i64;
    let mut polls = 0;
    loop {
        let now = clock.now_ms();
        polls += 1;
        let verdict = poll_once(config, baseline, probe, now)?;
        let waited_s = (now - start) as f64 / 1000.0;
        if verdict.is_stable() {
            return Ok(WaitReport { waited_s, outcome: WaitOutcome::Stable, polls });
        }
        if now - start >= timeout_ms {
            return Ok(WaitReport { waited_s, outcome: WaitOutcome::Timeout, polls });
        }
        clock.sleep_ms(config.check_interval_ms);
    }
}
