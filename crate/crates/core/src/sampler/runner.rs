//! The background sampling loop.

use std::collections::HashMap;
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::thread::JoinHandle;
use std::time::Duration;

use super::backend::{open_backends, Pacing, PowerBackend};
use super::log::LogWriter;
use super::trace::Channel;
use super::{counter_delta_energy, CounterRanges, PowerSample, SamplerConfig, SamplerError};
use crate::clock::epoch_ms;
use crate::component::Component;

/// Converts raw channel readings into per-component samples.
///
/// Counter channels need one priming reading before they produce power, so a
/// trace of `n` counter rows yields `n - 1` samples for that component.
#[derive(Debug, Clone)]
pub struct Ingest {
    interval_ms: u64,
    ranges: HashMap<Channel, i64>,
    last_counter: HashMap<Channel, i64>,
    last_temp: HashMap<Component, f64>,
    last_t: HashMap<Component, i64>,
}

impl Ingest {
    pub fn new(interval_ms: u64, ranges: &CounterRanges) -> Self {
        let ranges = [Channel::CpuUj, Channel::RamUj]
            .into_iter()
            .filter_map(|c| ranges.for_channel(c).map(|r| (c, r)))
            .collect();
        Ingest {
            interval_ms,
            ranges,
            last_counter: HashMap::new(),
            last_temp: HashMap::new(),
            last_t: HashMap::new(),
        }
    }

    pub fn set_counter_range(&mut self, channel: Channel, max_range: i64) {
        self.ranges.insert(channel, max_range);
    }

    /// Samples for one tick, ordered cpu, ram, gpu.
    pub fn ingest(&mut self, t_ms: i64, readings: &[(Channel, f64)]) -> Vec<PowerSample> {
        for &(ch, v) in readings {
            match ch {
                Channel::CpuTempC => {
                    self.last_temp.insert(Component::Cpu, v);
                }
                Channel::GpuTempC => {
                    self.last_temp.insert(Component::Gpu, v);
                }
                _ => {}
            }
        }
        let interval_s = self.interval_ms as f64 / 1000.0;
        let mut out = Vec::with_capacity(3);
        for (component, channel) in [
            (Component::Cpu, Channel::CpuUj),
            (Component::Ram, Channel::RamUj),
            (Component::Gpu, Channel::GpuW),
        ] {
            let Some(&(_, value)) = readings.iter().find(|(c, _)| *c == channel) else {
                continue;
            };
            let power = if channel.is_counter() {
                let curr = value.round() as i64;
                let prev = self.last_counter.insert(channel, curr);
                let Some(prev) = prev else { continue };
                let range = self.ranges.get(&channel).copied().unwrap_or(i64::MAX);
                match counter_delta_energy(prev, curr, range) {
                    Ok(joules) => joules / interval_s,
                    Err(e) => {
                        log::warn!("dropping {channel} reading at {t_ms}: {e}");
                        continue;
                    }
                }
            } else {
                value
            };
            if !power.is_finite() || power < 0.0 {
                log::warn!("dropping negative or non-finite {component} power {power} at {t_ms}");
                continue;
            }
            if let Some(&prev_t) = self.last_t.get(&component) {
                if t_ms <= prev_t {
                    log::warn!("dropping {component} sample at {t_ms}: not after {prev_t}");
                    continue;
                }
            }
            self.last_t.insert(component, t_ms);
            out.push(PowerSample {
                t: t_ms,
                component,
                power_w: power,
                temp_c: self.last_temp.get(&component).copied(),
            });
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerStatus {
    EndOfTrace,
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerOutcome {
    pub status: SamplerStatus,
    pub ticks: u64,
    pub samples_written: u64,
}

pub struct SamplerHandle {
    stop: Sender<()>,
    thread: Option<JoinHandle<Result<SamplerOutcome, SamplerError>>>,
}

impl SamplerHandle {
    /// Requests a stop; honoured within one interval.
    pub fn stop(&self) {
        let _ = self.stop.send(());
    }

    pub fn is_finished(&self) -> bool {
        self.thread.as_ref().is_none_or(|t| t.is_finished())
    }

    pub fn join(mut self) -> Result<SamplerOutcome, SamplerError> {
        let thread = self.thread.take().expect("sampler joined twice");
        thread
            .join()
            .unwrap_or_else(|_| Err(SamplerError::Config("sampling thread panicked".into())))
    }

    pub fn stop_and_join(self) -> Result<SamplerOutcome, SamplerError> {
        self.stop();
        self.join()
    }
}

impl Drop for SamplerHandle {
    fn drop(&mut self) {
        if let Some(t) = self.thread.take() {
            let _ = self.stop.send(());
            let _ = t.join();
        }
    }
}

/// Opens all backends and spawns the sampling loop. Backend availability is
/// checked before the thread starts so a missing channel fails fast.
pub fn start_sampling(config: &SamplerConfig) -> Result<SamplerHandle, SamplerError> {
    config.validate()?;
    let backends = open_backends(&config.backends)?;
    let mut writer = LogWriter::append(&config.log_path)?;
    let mut ingest = Ingest::new(config.interval_ms, &config.max_counter_range_uj);
    for b in &backends {
        for ch in [Channel::CpuUj, Channel::RamUj] {
            if let Some(r) = b.counter_range(ch) {
                ingest.set_counter_range(ch, r);
            }
        }
    }
    let unpaced = backends.iter().any(|b| b.pacing() == Pacing::Unpaced);
    let interval = Duration::from_millis(config.interval_ms);
    let (stop_tx, stop_rx) = mpsc::channel::<()>();

    let thread = std::thread::Builder::new()
        .name("power-sampler".into())
        .spawn(move || {
            let mut backends: Vec<Box<dyn PowerBackend>> = backends;
            let mut outcome = SamplerOutcome { status: SamplerStatus::Stopped, ticks: 0, samples_written: 0 };
            loop {
                let mut t_ms = None;
                let mut readings = Vec::new();
                let mut exhausted = false;
                for b in backends.iter_mut() {
                    match b.poll()? {
                        Some(tick) => {
                            t_ms = t_ms.or(tick.t_ms);
                            readings.extend(tick.readings);
                        }
                        None => exhausted = true,
                    }
                }
                if exhausted {
                    outcome.status = SamplerStatus::EndOfTrace;
                    return Ok(outcome);
                }
                let t = t_ms.unwrap_or_else(epoch_ms);
                let samples = ingest.ingest(t, &readings);
                writer.write_tick(&samples)?;
                outcome.ticks += 1;
                outcome.samples_written += samples.len() as u64;

                let stop = if unpaced {
                    !matches!(stop_rx.try_recv(), Err(mpsc::TryRecvError::Empty))
                } else {
                    !matches!(stop_rx.recv_timeout(interval), Err(RecvTimeoutError::Timeout))
                };
                if stop {
                    return Ok(outcome);
                }
            }
        })?;
    Ok(SamplerHandle { stop: stop_tx, thread: Some(thread) })
}
