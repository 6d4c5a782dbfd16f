//! Synthetic workloads run through the real sampler on replay traces.
//!
//! A workload is a script made of segments: in-scope method calls and
//! out-of-scope work. Its power profile is rendered to a trace, replayed
//! through the sampler into an energy log, and measured both as a whole
//! (project level) and call by call (method level).
//!
//! All segment boundaries fall on the sampling grid.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    aggregate_repetitions, compare_project_vs_methods, net_energy_all, AggregateResult, AnalysisError, Eq1Report,
    NetEnergyResult,
};
use crate::component::{Component, PerComponent};
use crate::sampler::{
    read_log, start_sampling, BackendDescriptor, Channel, CounterRanges, Pacing, PowerSample, SamplerConfig,
    SamplerError, SamplerStatus, TraceFile, TraceRow,
};
use crate::stability::{calibrate, StabilityError, StableState, DEFAULT_WINDOW};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation: {0}")]
    Config(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Renders a piecewise-constant power profile to a replay trace.
///
/// Counter channels accumulate the power of each interval and report it at
/// the interval's end; the GPU channel reports the power at the tick itself.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    interval_ms: i64,
    idle_w: PerComponent<f64>,
    noise_w: f64,
    temps_c: (f64, f64),
    /// (t_start, t_end, extra load) in trace milliseconds.
    pieces: Vec<(i64, i64, PerComponent<f64>)>,
    cursor: i64,
}

impl TraceBuilder {
    pub fn new(interval_ms: u64, idle_w: PerComponent<f64>) -> Self {
        TraceBuilder {
            interval_ms: interval_ms as i64,
            idle_w,
            noise_w: 0.0,
            temps_c: (45.0, 35.0),
            pieces: Vec::new(),
            cursor: 0,
        }
    }

    /// Uniform noise of ± `amplitude_w` on every reading.
    pub fn noise(mut self, amplitude_w: f64) -> Self {
        self.noise_w = amplitude_w;
        self
    }

    pub fn temperatures(mut self, cpu_c: f64, gpu_c: f64) -> Self {
        self.temps_c = (cpu_c, gpu_c);
        self
    }

    pub fn now(&self) -> i64 {
        self.cursor
    }

    fn check_grid(&self, ms: i64) -> Result<(), SimError> {
        if ms < 0 || ms % self.interval_ms != 0 {
            return Err(SimError::Config(format!("{ms} ms is not a multiple of the {} ms interval", self.interval_ms)));
        }
        Ok(())
    }

    pub fn idle(&mut self, ms: i64) -> Result<(i64, i64), SimError> {
        self.load(ms, PerComponent::default())
    }

    /// Appends a segment drawing `extra_w` above idle; returns its window.
    pub fn load(&mut self, ms: i64, extra_w: PerComponent<f64>) -> Result<(i64, i64), SimError> {
        self.check_grid(ms)?;
        let window = (self.cursor, self.cursor + ms);
        if extra_w.iter().any(|(_, w)| *w != 0.0) {
            self.pieces.push((window.0, window.1, extra_w));
        }
        self.cursor = window.1;
        Ok(window)
    }

    fn power_at(&self, component: Component, t: i64) -> f64 {
        let extra = self
            .pieces
            .iter()
            .find(|(a, b, _)| *a <= t && t < *b)
            .map_or(0.0, |(_, _, w)| *w.get(component));
        self.idle_w.get(component) + extra
    }

    /// Ticks cover `[0, now]`; counters start at `counter_start_uj` and wrap at `ranges`.
    pub fn build(&self, rng: &mut impl Rng, counter_start_uj: i64, ranges: &CounterRanges) -> TraceFile {
        let dt = self.interval_ms;
        let dt_s = dt as f64 / 1000.0;
        let noise = |rng: &mut dyn rand::RngCore| {
            if self.noise_w > 0.0 {
                rng.gen_range(-self.noise_w..=self.noise_w)
            } else {
                0.0
            }
        };
        let mut counters = [(Channel::CpuUj, Component::Cpu, counter_start_uj), (Channel::RamUj, Component::Ram, counter_start_uj)];
        let mut rows = Vec::new();
        let mut t = 0;
        while t <= self.cursor {
            for (channel, component, value) in counters.iter_mut() {
                if t > 0 {
                    let p = (self.power_at(*component, t - dt) + noise(rng)).max(0.0);
                    let range = ranges.for_channel(*channel).unwrap_or(i64::MAX);
                    let inc = (p * dt_s * 1e6).round() as i64;
                    *value += inc;
                    if *value > range {
                        *value -= range;
                    }
                }
                rows.push(TraceRow { t_ms: t, channel: *channel, value: *value as f64 });
            }
            let gpu = (self.power_at(Component::Gpu, t) + noise(rng)).max(0.0);
            rows.push(TraceRow { t_ms: t, channel: Channel::GpuW, value: gpu });
            rows.push(TraceRow { t_ms: t, channel: Channel::CpuTempC, value: self.temps_c.0 });
            rows.push(TraceRow { t_ms: t, channel: Channel::GpuTempC, value: self.temps_c.1 });
            t += dt;
        }
        TraceFile::from_rows(rows).expect("rows are generated in time order")
    }
}

/// Replays a trace through the sampler as fast as possible and returns the log.
pub fn replay_to_log(trace: &TraceFile, interval_ms: u64, ranges: CounterRanges, dir: &Path) -> Result<Vec<PowerSample>, SimError> {
    let trace_path = dir.join("trace.csv");
    let log_path = dir.join("energy_log.jsonl");
    trace.write(std::fs::File::create(&trace_path)?)?;
    if log_path.exists() {
        std::fs::remove_file(&log_path)?;
    }
    let config = SamplerConfig {
        interval_ms,
        backends: vec![BackendDescriptor::replay(&trace_path, Pacing::Unpaced)],
        log_path: log_path.clone(),
        max_counter_range_uj: ranges,
    };
    let outcome = start_sampling(&config)?.join()?;
    if outcome.status != SamplerStatus::EndOfTrace {
        return Err(SimError::Config("replay stopped before the end of the trace".into()));
    }
    Ok(read_log(&log_path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// In-scope API name, or `None` for out-of-scope work.
    pub method: Option<String>,
    pub duration_ms: i64,
    pub extra_w: PerComponent<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub segments: Vec<Segment>,
}

impl Workload {
    /// A random script with 1..=6 method calls and at least one
    /// out-of-scope segment with non-trivial load.
    pub fn random(rng: &mut impl Rng, interval_ms: u64) -> Self {
        let dt = interval_ms as i64;
        let load = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| {
            PerComponent::new(rng.gen_range(lo..hi), rng.gen_range(lo..hi) / 4.0, rng.gen_range(lo..hi) * 2.0)
        };
        let n_methods = rng.gen_range(1..=6);
        let mut segments = Vec::new();
        for i in 0..n_methods {
            if rng.gen_bool(0.5) {
                segments.push(Segment {
                    method: None,
                    duration_ms: dt * rng.gen_range(1..=6),
                    extra_w: load(rng, 0.0, 15.0),
                });
            }
            segments.push(Segment {
                method: Some(format!("tensorflow.api_{i}")),
                duration_ms: dt * rng.gen_range(1..=16),
                extra_w: load(rng, 0.0, 60.0),
            });
        }
        let tail = Segment { method: None, duration_ms: dt * rng.gen_range(4..=8), extra_w: load(rng, 8.0, 20.0) };
        if rng.gen_bool(0.5) {
            segments.insert(0, tail);
        } else {
            segments.push(tail);
        }
        Workload { segments }
    }

    pub fn methods(&self) -> impl Iterator<Item = (usize, &Segment)> {
        self.segments.iter().enumerate().filter(|(_, s)| s.method.is_some())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub interval_ms: u64,
    pub idle_w: PerComponent<f64>,
    pub noise_w: f64,
    pub calibration_s: f64,
    pub repetitions: usize,
    /// Idle before each measured window, standing in for the stability wait.
    pub wait_ms: i64,
    pub settle_ms: i64,
    pub counter_ranges: CounterRanges,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            interval_ms: 500,
            idle_w: PerComponent::new(20.0, 4.0, 18.0),
            noise_w: 0.0,
            calibration_s: 60.0,
            repetitions: 3,
            wait_ms: 10_500,
            settle_ms: 2_000,
            counter_ranges: CounterRanges::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodMeasurement {
    pub segment: usize,
    pub method: String,
    pub runs: Vec<NetEnergyResult>,
    pub aggregate: AggregateResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimOutcome {
    pub stable_state: StableState,
    pub project_runs: Vec<NetEnergyResult>,
    pub project: AggregateResult,
    pub methods: Vec<MethodMeasurement>,
    pub eq1: Eq1Report,
    pub samples: usize,
}

/// Calibrates, then measures `config.repetitions` project-level runs followed
/// by as many method-level runs, all in one replayed trace.
pub fn simulate(workload: &Workload, config: &SimConfig, seed: u64, dir: &Path) -> Result<SimOutcome, SimError> {
    if config.repetitions == 0 {
        return Err(SimError::Config("at least one repetition is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = TraceBuilder::new(config.interval_ms, config.idle_w).noise(config.noise_w);
    let calibration_ms = (config.calibration_s * 1000.0).round() as i64;
    b.idle(calibration_ms)?;

    let mut project_windows = Vec::new();
    for _ in 0..config.repetitions {
        b.idle(config.wait_ms)?;
        let start = b.now();
        for s in &workload.segments {
            b.load(s.duration_ms, s.extra_w)?;
        }
        project_windows.push((start, b.now()));
        b.idle(config.settle_ms)?;
    }
    let mut method_windows: Vec<Vec<(i64, i64)>> = vec![Vec::new(); workload.segments.len()];
    for _ in 0..config.repetitions {
        for (i, s) in workload.segments.iter().enumerate() {
            if s.method.is_some() {
                b.idle(config.wait_ms)?;
                method_windows[i].push(b.load(s.duration_ms, s.extra_w)?);
                b.idle(config.settle_ms)?;
            } else {
                b.load(s.duration_ms, s.extra_w)?;
            }
        }
    }
    b.idle(2 * config.interval_ms as i64)?;

    // Start counters close to the wrap point so every run crosses it.
    let start_uj = config.counter_ranges.cpu_uj.min(config.counter_ranges.ram_uj) - rng.gen_range(0..5_000_000);
    let trace = b.build(&mut rng, start_uj.max(0), &config.counter_ranges);
    let samples = replay_to_log(&trace, config.interval_ms, config.counter_ranges, dir)?;

    let stable_state = calibrate(&samples, config.calibration_s, DEFAULT_WINDOW, config.interval_ms, 0)?;
    let measure = |(t0, t1): (i64, i64), rep: usize| -> Result<NetEnergyResult, SimError> {
        let mut r = net_energy_all(&samples, &stable_state, t0, t1, config.interval_ms)?;
        r.repetition = Some(rep);
        Ok(r)
    };
    let project_runs =
        project_windows.iter().enumerate().map(|(i, w)| measure(*w, i)).collect::<Result<Vec<_>, _>>()?;
    let project = aggregate_repetitions(&project_runs)?;
    let mut methods = Vec::new();
    for (i, s) in workload.methods() {
        let runs = method_windows[i].iter().enumerate().map(|(r, w)| measure(*w, r)).collect::<Result<Vec<_>, _>>()?;
        let aggregate = aggregate_repetitions(&runs)?;
        methods.push(MethodMeasurement {
            segment: i,
            method: s.method.clone().unwrap_or_default(),
            runs,
            aggregate,
        });
    }
    let aggregates: Vec<AggregateResult> = methods.iter().map(|m| m.aggregate.clone()).collect();
    let eq1 = compare_project_vs_methods(&project, &aggregates);
    Ok(SimOutcome { stable_state, project_runs, project, methods, eq1, samples: samples.len() })
}
