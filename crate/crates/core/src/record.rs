//! Measurement records, one JSON object per line in an experiment file.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{net_energy, AnalysisError, ComponentEnergy, NetEnergyResult};
use crate::component::PerComponent;
use crate::sampler::PowerSample;
use crate::stability::{StabilityConfig, StableState};

pub const BELOW_RESOLUTION: &str = "below-resolution";
/// Set by the runner on records from a run whose script exited non-zero.
pub const RUN_FAILED: &str = "run-failed";

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("{path}:{line}: {source}")]
    Parse { path: String, line: usize, source: serde_json::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub gross_j: Option<f64>,
    pub net_j: Option<f64>,
    #[serde(default)]
    pub samples: Vec<PowerSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordSettings {
    pub interval_ms: u64,
    pub wait_unstable_s: f64,
    pub settle_s: f64,
    pub cpu_max_temp: f64,
    pub gpu_max_temp: f64,
    pub stable_state: StableState,
}

impl RecordSettings {
    pub fn new(interval_ms: u64, wait_unstable_s: f64, stability: &StabilityConfig, stable_state: StableState) -> Self {
        RecordSettings {
            interval_ms,
            wait_unstable_s,
            settle_s: stability.settle_after_execution_s,
            cpu_max_temp: stability.cpu_max_temp_c,
            gpu_max_temp: stability.gpu_max_temp_c,
            stable_state,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArgsSizes {
    /// Positional arguments first, then keyword arguments in call order.
    /// `None` marks an argument whose size could not be estimated.
    pub per_arg: Vec<Option<u64>>,
    pub total_bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub function_to_run: String,
    pub start_ms: i64,
    pub end_ms: i64,
    pub execution_time_s: f64,
    #[serde(flatten)]
    pub components: PerComponent<ComponentRecord>,
    pub settings: RecordSettings,
    #[serde(default)]
    pub args_sizes: ArgsSizes,
    #[serde(default)]
    pub flags: Vec<String>,
}

impl MeasurementRecord {
    /// Builds a record from per-component slices of `[start_ms, end_ms)`.
    /// A component with no samples in the window leaves every energy field
    /// null and flags the record below resolution.
    pub fn from_slices(
        function_to_run: impl Into<String>,
        start_ms: i64,
        end_ms: i64,
        slices: PerComponent<Vec<PowerSample>>,
        settings: RecordSettings,
        args_sizes: ArgsSizes,
    ) -> Result<Self, RecordError> {
        let below = slices.iter().any(|(_, s)| s.is_empty());
        let mut components = PerComponent::from_fn(|_| ComponentRecord { gross_j: None, net_j: None, samples: vec![] });
        for (c, samples) in slices.iter() {
            let energy = if below {
                None
            } else {
                let baseline = settings.stable_state.components.get(c).mean_power_w;
                Some(net_energy(samples, baseline, start_ms, end_ms, settings.interval_ms)?)
            };
            *components.get_mut(c) = ComponentRecord {
                gross_j: energy.map(|e| e.gross_j),
                net_j: energy.map(|e| e.net_j),
                samples: samples.clone(),
            };
        }
        Ok(MeasurementRecord {
            function_to_run: function_to_run.into(),
            start_ms,
            end_ms,
            execution_time_s: (end_ms - start_ms) as f64 / 1000.0,
            components,
            settings,
            args_sizes,
            flags: if below { vec![BELOW_RESOLUTION.to_string()] } else { vec![] },
        })
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.iter().any(|f| f == flag)
    }

    /// Whether the record may enter aggregation.
    pub fn is_usable(&self) -> bool {
        self.flags.is_empty() && self.components.iter().all(|(_, c)| c.net_j.is_some() && c.gross_j.is_some())
    }

    pub fn net_result(&self) -> Option<NetEnergyResult> {
        if !self.is_usable() {
            return None;
        }
        let components = self.components.map(|_, c| ComponentEnergy {
            gross_j: c.gross_j.unwrap_or_default(),
            net_j: c.net_j.unwrap_or_default(),
        });
        Some(NetEnergyResult { components, duration_s: self.execution_time_s, repetition: None })
    }
}

pub fn append_record(path: &Path, record: &MeasurementRecord) -> Result<(), RecordError> {
    let mut line = serde_json::to_string(record)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<MeasurementRecord>, RecordError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| RecordError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}
