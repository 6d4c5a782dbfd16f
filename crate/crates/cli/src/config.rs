//! Experiment configuration: one JSON file, overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use finejoule_core::sampler::{BackendDescriptor, Pacing, SamplerConfig, DEFAULT_INTERVAL_MS};
use finejoule_core::stability::{StabilityConfig, DEFAULT_CALIBRATION_S};
use finejoule_patcher::Framework;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DEFAULT_REPETITIONS: u32 = 10;
pub const DEFAULT_FRAMEWORK: &str = "tensorflow";

/// Where power readings come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendMode {
    Hardware,
    /// A recorded trace replayed in real time on the wall clock.
    Replay(PathBuf),
}

impl FromStr for BackendMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hardware" => Ok(BackendMode::Hardware),
            _ => match s.strip_prefix("replay:") {
                Some(p) if !p.is_empty() => Ok(BackendMode::Replay(PathBuf::from(p))),
                _ => Err(format!("backend must be `hardware` or `replay:<trace>`, got `{s}`")),
            },
        }
    }
}

impl fmt::Display for BackendMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendMode::Hardware => f.write_str("hardware"),
            BackendMode::Replay(p) => write!(f, "replay:{}", p.display()),
        }
    }
}

impl TryFrom<String> for BackendMode {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<BackendMode> for String {
    fn from(m: BackendMode) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub log: PathBuf,
    pub stable_state: PathBuf,
    pub socket: PathBuf,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            log: "energy_log.jsonl".into(),
            stable_state: "stable_state.json".into(),
            socket: "finejoule.sock".into(),
            output: "experiments".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub framework: String,
    pub repetitions: u32,
    pub interval_ms: u64,
    pub calibration_s: f64,
    pub backend: BackendMode,
    pub stability: StabilityConfig,
    pub paths: Paths,
    pub python: String,
    /// Directory holding the breakpoint module imported by patched scripts.
    pub shim_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            framework: DEFAULT_FRAMEWORK.into(),
            repetitions: DEFAULT_REPETITIONS,
            interval_ms: DEFAULT_INTERVAL_MS,
            calibration_s: DEFAULT_CALIBRATION_S,
            backend: BackendMode::Hardware,
            stability: StabilityConfig::default(),
            paths: Paths::default(),
            python: "python3".into(),
            shim_path: None,
        }
    }
}

/// Flags shared by every subcommand. Set flags win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Experiment configuration JSON.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Top-level module whose calls are instrumented.
    #[arg(long, global = true)]
    pub framework: Option<String>,
    /// Runs per script and mode.
    #[arg(long, global = true)]
    pub repetitions: Option<u32>,
    /// Sampling interval in milliseconds.
    #[arg(long, global = true)]
    pub interval_ms: Option<u64>,
    /// `hardware` or `replay:<trace.csv>`.
    #[arg(long, global = true)]
    pub backend: Option<BackendMode>,
    /// Power sample log written by the daemon.
    #[arg(long, global = true)]
    pub log: Option<PathBuf>,
    /// Idle baseline written by `calibrate`.
    #[arg(long, global = true)]
    pub stable_state: Option<PathBuf>,
    /// Daemon control socket.
    #[arg(long, global = true)]
    pub socket: Option<PathBuf>,
    /// Experiment output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Interpreter for patched scripts.
    #[arg(long, global = true)]
    pub python: Option<String>,
    /// Directory holding the `finejoule_shim` module, prepended to PYTHONPATH.
    #[arg(long, global = true)]
    pub shim_path: Option<PathBuf>,
    /// Pause after each measured call and between repetitions.
    #[arg(long, global = true)]
    pub settle_s: Option<f64>,
    /// Longest wait for a stable machine before a run is skipped.
    #[arg(long, global = true)]
    pub wait_timeout_s: Option<f64>,
    /// Pause between stability checks.
    #[arg(long, global = true)]
    pub check_interval_ms: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Config file (or defaults) with flag overrides applied, validated.
    pub fn resolve(args: &ConfigArgs) -> CliResult<Self> {
        let mut c = match &args.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        let set = |dst: &mut PathBuf, src: &Option<PathBuf>| {
            if let Some(v) = src {
                *dst = v.clone();
            }
        };
        if let Some(v) = &args.framework {
            c.framework = v.clone();
        }
        if let Some(v) = args.repetitions {
            c.repetitions = v;
        }
        if let Some(v) = args.interval_ms {
            c.interval_ms = v;
        }
        if let Some(v) = &args.backend {
            c.backend = v.clone();
        }
        set(&mut c.paths.log, &args.log);
        set(&mut c.paths.stable_state, &args.stable_state);
        set(&mut c.paths.socket, &args.socket);
        set(&mut c.paths.output, &args.out);
        if let Some(v) = &args.python {
            c.python = v.clone();
        }
        if let Some(v) = &args.shim_path {
            c.shim_path = Some(v.clone());
        }
        if let Some(v) = args.settle_s {
            c.stability.settle_after_execution_s = v;
        }
        if let Some(v) = args.wait_timeout_s {
            c.stability.wait_timeout_s = v;
        }
        if let Some(v) = args.check_interval_ms {
            c.stability.check_interval_ms = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.repetitions < 1 {
            return Err(CliError::usage("repetitions must be at least 1"));
        }
        if self.interval_ms < 1 {
            return Err(CliError::usage("sampling interval must be at least 1 ms"));
        }
        if self.calibration_s.is_nan() || self.calibration_s <= 0.0 {
            return Err(CliError::usage("calibration duration must be positive"));
        }
        Framework::new(&self.framework).map_err(CliError::usage)?;
        self.stability.validate().map_err(CliError::usage)?;
        if let BackendMode::Replay(trace) = &self.backend {
            if !trace.is_file() {
                return Err(CliError::Usage(format!("replay trace {} does not exist", trace.display())));
            }
        }
        for (name, p) in [
            ("log", &self.paths.log),
            ("stable_state", &self.paths.stable_state),
            ("socket", &self.paths.socket),
            ("output", &self.paths.output),
        ] {
            if p.as_os_str().is_empty() {
                return Err(CliError::Usage(format!("path `{name}` is empty")));
            }
        }
        Ok(())
    }

    pub fn framework(&self) -> Framework {
        Framework::new(&self.framework).unwrap_or_default()
    }

    /// Sampler settings for the daemon. Replay traces are rebased onto the
    /// wall clock and paced in real time so scripts can be measured against them.
    pub fn sampler_config(&self) -> SamplerConfig {
        let backends = match &self.backend {
            BackendMode::Hardware => BackendDescriptor::hardware_defaults(),
            BackendMode::Replay(trace) => {
                vec![BackendDescriptor::Replay { trace: trace.clone(), pacing: Pacing::Realtime, rebase: true }]
            }
        };
        SamplerConfig { interval_ms: self.interval_ms, backends, log_path: self.paths.log.clone(), ..SamplerConfig::default() }
    }

    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn trace_sha256(&self) -> CliResult<Option<String>> {
        match &self.backend {
            BackendMode::Hardware => Ok(None),
            BackendMode::Replay(p) => file_sha256(p).map(Some),
        }
    }
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Environment(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}
