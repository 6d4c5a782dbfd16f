//! Reading sources: kernel power-capping counters, the GPU management utility,
//! a thermal-zone file, and trace replay.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::trace::{Channel, TraceFile};
use super::SamplerError;
use crate::clock::epoch_ms;

/// Readings taken in one sampling tick. Replay backends carry their own
/// timestamp; hardware backends leave it to the sampling loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tick {
    pub t_ms: Option<i64>,
    pub readings: Vec<(Channel, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pacing {
    /// Sleep one interval between ticks.
    #[default]
    Realtime,
    /// Emit ticks back to back (trace time only).
    Unpaced,
}

pub trait PowerBackend: Send {
    fn name(&self) -> &str;
    fn channels(&self) -> Vec<Channel>;
    /// `Ok(None)` means the source is exhausted.
    fn poll(&mut self) -> Result<Option<Tick>, SamplerError>;
    fn counter_range(&self, _channel: Channel) -> Option<i64> {
        None
    }
    fn pacing(&self) -> Pacing {
        Pacing::Realtime
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendDescriptor {
    /// CPU package domain of the powercap tree.
    RaplPackage { root: PathBuf },
    /// DRAM subdomain of the powercap tree.
    RaplDram { root: PathBuf },
    /// GPU power and temperature via a query-mode command.
    NvidiaSmi { command: Vec<String> },
    /// CPU temperature from a sysfs file in millidegrees.
    CpuTemperature { path: PathBuf },
    Replay {
        trace: PathBuf,
        #[serde(default)]
        pacing: Pacing,
        #[serde(default)]
        rebase: bool,
    },
}

pub const DEFAULT_POWERCAP_ROOT: &str = "/sys/class/powercap";
pub const DEFAULT_CPU_TEMP_PATH: &str = "/sys/class/thermal/thermal_zone0/temp";

pub fn default_nvidia_smi_command() -> Vec<String> {
    [
        "nvidia-smi",
        "--query-gpu=power.draw,temperature.gpu",
        "--format=csv,noheader,nounits",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

impl BackendDescriptor {
    pub fn hardware_defaults() -> Vec<BackendDescriptor> {
        vec![
            BackendDescriptor::RaplPackage { root: DEFAULT_POWERCAP_ROOT.into() },
            BackendDescriptor::RaplDram { root: DEFAULT_POWERCAP_ROOT.into() },
            BackendDescriptor::NvidiaSmi { command: default_nvidia_smi_command() },
            BackendDescriptor::CpuTemperature { path: DEFAULT_CPU_TEMP_PATH.into() },
        ]
    }

    pub fn replay(trace: impl Into<PathBuf>, pacing: Pacing) -> BackendDescriptor {
        BackendDescriptor::Replay { trace: trace.into(), pacing, rebase: false }
    }

    /// Channels this descriptor is expected to provide.
    pub fn channels(&self) -> Vec<Channel> {
        match self {
            BackendDescriptor::RaplPackage { .. } => vec![Channel::CpuUj],
            BackendDescriptor::RaplDram { .. } => vec![Channel::RamUj],
            BackendDescriptor::NvidiaSmi { .. } => vec![Channel::GpuW, Channel::GpuTempC],
            BackendDescriptor::CpuTemperature { .. } => vec![Channel::CpuTempC],
            BackendDescriptor::Replay { .. } => Channel::ALL.to_vec(),
        }
    }

    pub fn open(&self) -> Result<Box<dyn PowerBackend>, SamplerError> {
        let missing = || SamplerError::BackendUnavailable {
            missing: self.channels().iter().map(|c| c.to_string()).collect(),
        };
        Ok(match self {
            BackendDescriptor::RaplPackage { root } => {
                Box::new(RaplBackend::discover(root, Channel::CpuUj).ok_or_else(missing)?)
            }
            BackendDescriptor::RaplDram { root } => {
                Box::new(RaplBackend::discover(root, Channel::RamUj).ok_or_else(missing)?)
            }
            BackendDescriptor::NvidiaSmi { command } => {
                let mut b = NvidiaSmiBackend::new(command.clone());
                b.query().map_err(|_| missing())?;
                Box::new(b)
            }
            BackendDescriptor::CpuTemperature { path } => {
                let b = CpuTemperatureBackend::new(path.clone());
                b.read().map_err(|_| missing())?;
                Box::new(b)
            }
            BackendDescriptor::Replay { trace, pacing, rebase } => {
                let trace = TraceFile::load(trace)?;
                Box::new(ReplayBackend::new(&trace, *pacing, *rebase))
            }
        })
    }
}

/// Opens every descriptor; fails listing all channels that could not be opened.
pub fn open_backends(
    descriptors: &[BackendDescriptor],
) -> Result<Vec<Box<dyn PowerBackend>>, SamplerError> {
    let mut opened = Vec::new();
    let mut missing = Vec::new();
    for d in descriptors {
        match d.open() {
            Ok(b) => opened.push(b),
            Err(SamplerError::BackendUnavailable { missing: m }) => missing.extend(m),
            Err(e) => return Err(e),
        }
    }
    if missing.is_empty() {
        Ok(opened)
    } else {
        Err(SamplerError::BackendUnavailable { missing })
    }
}

pub struct ReplayBackend {
    ticks: std::vec::IntoIter<(i64, Vec<(Channel, f64)>)>,
    channels: Vec<Channel>,
    pacing: Pacing,
    rebase: bool,
    offset: Option<i64>,
}

impl ReplayBackend {
    pub fn new(trace: &TraceFile, pacing: Pacing, rebase: bool) -> Self {
        ReplayBackend {
            ticks: trace.ticks().into_iter(),
            channels: trace.channels(),
            pacing,
            rebase,
            offset: None,
        }
    }
}

impl PowerBackend for ReplayBackend {
    fn name(&self) -> &str {
        "replay"
    }

    fn channels(&self) -> Vec<Channel> {
        self.channels.clone()
    }

    fn poll(&mut self) -> Result<Option<Tick>, SamplerError> {
        let Some((t, readings)) = self.ticks.next() else {
            return Ok(None);
        };
        let t = if self.rebase {
            let offset = *self.offset.get_or_insert_with(|| epoch_ms() - t);
            t + offset
        } else {
            t
        };
        Ok(Some(Tick { t_ms: Some(t), readings }))
    }

    fn pacing(&self) -> Pacing {
        self.pacing
    }
}

/// One powercap domain (`energy_uj` + `max_energy_range_uj`).
pub struct RaplBackend {
    channel: Channel,
    energy_path: PathBuf,
    max_range: Option<i64>,
}

impl RaplBackend {
    pub fn new(channel: Channel, domain_dir: &Path) -> Self {
        let max_range = read_trimmed(&domain_dir.join("max_energy_range_uj"))
            .ok()
            .and_then(|s| s.parse().ok());
        RaplBackend { channel, energy_path: domain_dir.join("energy_uj"), max_range }
    }

    /// Finds the package (`package-*`) or `dram` domain under a powercap root.
    /// Only the first package is used.
    pub fn discover(root: &Path, channel: Channel) -> Option<Self> {
        let wanted = |name: &str| match channel {
            Channel::CpuUj => name.starts_with("package-"),
            Channel::RamUj => name == "dram",
            _ => false,
        };
        let mut candidates = Vec::new();
        for entry in fs::read_dir(root).ok()?.flatten() {
            let path = entry.path();
            let fname = entry.file_name().to_string_lossy().into_owned();
            if !fname.starts_with("intel-rapl") {
                continue;
            }
            candidates.push(path.clone());
            if let Ok(sub) = fs::read_dir(&path) {
                candidates.extend(
                    sub.flatten()
                        .filter(|e| e.file_name().to_string_lossy().starts_with("intel-rapl"))
                        .map(|e| e.path()),
                );
            }
        }
        candidates.sort();
        candidates.into_iter().find_map(|dir| {
            let name = read_trimmed(&dir.join("name")).ok()?;
            let readable = read_trimmed(&dir.join("energy_uj")).is_ok();
            (wanted(&name) && readable).then(|| RaplBackend::new(channel, &dir))
        })
    }
}

impl PowerBackend for RaplBackend {
    fn name(&self) -> &str {
        "rapl"
    }

    fn channels(&self) -> Vec<Channel> {
        vec![self.channel]
    }

    fn poll(&mut self) -> Result<Option<Tick>, SamplerError> {
        let raw = read_trimmed(&self.energy_path)?;
        let value: i64 = raw
            .parse()
            .map_err(|_| SamplerError::InvalidReading(format!("`{raw}` in {}", self.energy_path.display())))?;
        Ok(Some(Tick { t_ms: None, readings: vec![(self.channel, value as f64)] }))
    }

    fn counter_range(&self, channel: Channel) -> Option<i64> {
        (channel == self.channel).then_some(self.max_range).flatten()
    }
}

pub struct NvidiaSmiBackend {
    command: Vec<String>,
}

impl NvidiaSmiBackend {
    pub fn new(command: Vec<String>) -> Self {
        NvidiaSmiBackend { command }
    }

    /// Total board power over all GPUs and the hottest GPU temperature.
    pub fn query(&mut self) -> Result<(f64, f64), SamplerError> {
        let (prog, args) = self
            .command
            .split_first()
            .ok_or_else(|| SamplerError::Config("empty GPU query command".into()))?;
        let out = Command::new(prog).args(args).output()?;
        if !out.status.success() {
            return Err(SamplerError::UnavailableChannel("gpu_w".into()));
        }
        parse_gpu_query(&String::from_utf8_lossy(&out.stdout))
    }
}

pub(crate) fn parse_gpu_query(text: &str) -> Result<(f64, f64), SamplerError> {
    let mut power = 0.0;
    let mut temp = f64::NEG_INFINITY;
    let mut n = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut fields = line.split(',').map(str::trim);
        let parse = |f: Option<&str>| -> Result<f64, SamplerError> {
            f.and_then(|s| s.parse().ok())
                .ok_or_else(|| SamplerError::InvalidReading(format!("GPU query line `{line}`")))
        };
        power += parse(fields.next())?;
        temp = temp.max(parse(fields.next())?);
        n += 1;
    }
    if n == 0 {
        return Err(SamplerError::UnavailableChannel("gpu_w".into()));
    }
    Ok((power, temp))
}

impl PowerBackend for NvidiaSmiBackend {
    fn name(&self) -> &str {
        "nvidia-smi"
    }

    fn channels(&self) -> Vec<Channel> {
        vec![Channel::GpuW, Channel::GpuTempC]
    }

    fn poll(&mut self) -> Result<Option<Tick>, SamplerError> {
        let (power, temp) = self.query()?;
        Ok(Some(Tick {
            t_ms: None,
            readings: vec![(Channel::GpuW, power), (Channel::GpuTempC, temp)],
        }))
    }
}

pub struct CpuTemperatureBackend {
    path: PathBuf,
}

impl CpuTemperatureBackend {
    pub fn new(path: PathBuf) -> Self {
        CpuTemperatureBackend { path }
    }

    pub fn read(&self) -> Result<f64, SamplerError> {
        let raw = read_trimmed(&self.path)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| SamplerError::InvalidReading(format!("`{raw}` in {}", self.path.display())))?;
        // sysfs reports millidegrees
        Ok(if v.abs() >= 1000.0 { v / 1000.0 } else { v })
    }
}

impl PowerBackend for CpuTemperatureBackend {
    fn name(&self) -> &str {
        "cpu-temperature"
    }

    fn channels(&self) -> Vec<Channel> {
        vec![Channel::CpuTempC]
    }

    fn poll(&mut self) -> Result<Option<Tick>, SamplerError> {
        Ok(Some(Tick { t_ms: None, readings: vec![(Channel::CpuTempC, self.read()?)] }))
    }
}

fn read_trimmed(path: &Path) -> std::io::Result<String> {
    Ok(fs::read_to_string(path)?.trim().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperatures {
    pub cpu_c: f64,
    pub gpu_c: f64,
}

pub trait TemperatureSource {
    /// Most recent CPU and GPU temperature.
    fn read_temperatures(&mut self) -> Result<Temperatures, SamplerError>;
}

/// Steps through the temperature rows of a trace, one tick per read.
pub struct ReplayTemperatures {
    readings: std::vec::IntoIter<Temperatures>,
    missing: Option<Channel>,
}

impl ReplayTemperatures {
    pub fn new(trace: &TraceFile) -> Self {
        let missing = [Channel::CpuTempC, Channel::GpuTempC]
            .into_iter()
            .find(|c| !trace.has_channel(*c));
        let mut cpu = None;
        let mut gpu = None;
        let mut readings = Vec::new();
        for (_, tick) in trace.ticks() {
            let mut touched = false;
            for (ch, v) in tick {
                match ch {
                    Channel::CpuTempC => {
                        cpu = Some(v);
                        touched = true;
                    }
                    Channel::GpuTempC => {
                        gpu = Some(v);
                        touched = true;
                    }
                    _ => {}
                }
            }
            if let (true, Some(cpu_c), Some(gpu_c)) = (touched, cpu, gpu) {
                readings.push(Temperatures { cpu_c, gpu_c });
            }
        }
        ReplayTemperatures { readings: readings.into_iter(), missing }
    }
}

impl TemperatureSource for ReplayTemperatures {
    fn read_temperatures(&mut self) -> Result<Temperatures, SamplerError> {
        if let Some(ch) = self.missing {
            return Err(SamplerError::UnavailableChannel(ch.to_string()));
        }
        self.readings.next().ok_or(SamplerError::EndOfTrace)
    }
}

pub struct HardwareTemperatures {
    pub cpu: CpuTemperatureBackend,
    pub gpu: NvidiaSmiBackend,
}

impl TemperatureSource for HardwareTemperatures {
    fn read_temperatures(&mut self) -> Result<Temperatures, SamplerError> {
        let cpu_c = self
            .cpu
            .read()
            .map_err(|_| SamplerError::UnavailableChannel(Channel::CpuTempC.to_string()))?;
        let (_, gpu_c) = self
            .gpu
            .query()
            .map_err(|_| SamplerError::UnavailableChannel(Channel::GpuTempC.to_string()))?;
        Ok(Temperatures { cpu_c, gpu_c })
    }
}
