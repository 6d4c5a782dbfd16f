//! `run`: executes a patched script repeatedly under the daemon.
//!
//! Layout: `<out>/<script id>/<mode>/[fraction_<f>/]run_<NNN>/` holding
//! `records.jsonl` (written by the shim), `stdout.txt`, `stderr.txt` and
//! `manifest.json`. Existing runs are never touched; numbering continues.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use finejoule_core::analysis::{fraction_of, FRACTION_STEPS};
use finejoule_core::clock::epoch_ms;
use finejoule_core::daemon::ControlClient;
use finejoule_patcher::verify_patch;
use serde::{Deserialize, Serialize};

use crate::config::{file_sha256, ExperimentConfig};
use crate::daemon::connect;
use crate::error::{CliError, CliResult};
use crate::patch::PatchLevel;

pub const MANIFEST: &str = "manifest.json";
pub const RECORDS: &str = "records.jsonl";

/// Environment passed to the measured script and read by the shim.
pub const ENV_SOCKET: &str = "FINEJOULE_SOCKET";
pub const ENV_RECORDS: &str = "FINEJOULE_RECORDS";
pub const ENV_RUN_INDEX: &str = "FINEJOULE_RUN_INDEX";
pub const ENV_DATA_FRACTION: &str = "FINEJOULE_DATA_FRACTION";
pub const ENV_SETTINGS: &str = "FINEJOULE_SETTINGS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    /// Non-zero exit; its records are excluded from aggregation.
    Failed,
    /// The machine never became stable; the script was not started.
    StabilityTimeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub trace_sha256: Option<String>,
    pub script: PathBuf,
    pub script_sha256: String,
    pub script_id: String,
    pub mode: PatchLevel,
    pub fraction: Option<f64>,
    pub run_index: u32,
    pub status: RunStatus,
    pub exit_code: Option<i32>,
    pub waited_s: f64,
    pub started_ms: i64,
    pub ended_ms: i64,
}

/// Settings the shim copies into every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShimSettings {
    pub interval_ms: u64,
    pub settle_s: f64,
    pub check_interval_ms: u64,
    pub wait_timeout_s: f64,
    pub cpu_max_temp: f64,
    pub gpu_max_temp: f64,
}

impl ShimSettings {
    pub fn from_config(c: &ExperimentConfig) -> Self {
        ShimSettings {
            interval_ms: c.interval_ms,
            settle_s: c.stability.settle_after_execution_s,
            check_interval_ms: c.stability.check_interval_ms,
            wait_timeout_s: c.stability.wait_timeout_s,
            cpu_max_temp: c.stability.cpu_max_temp_c,
            gpu_max_temp: c.stability.gpu_max_temp_c,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub experiment_dir: PathBuf,
    pub runs: Vec<RunManifest>,
    pub ok: usize,
    pub failed: usize,
    pub stability_timeouts: usize,
}

/// Mode from a `<script>.<mode>.patched` name, and the script id.
pub fn infer_mode(patched: &Path) -> Option<(PatchLevel, String)> {
    let name = patched.file_name()?.to_str()?;
    for level in [PatchLevel::Method, PatchLevel::Project] {
        if let Some(original) = name.strip_suffix(&format!(".{}.patched", level.as_str())) {
            return Some((level, crate::patch::script_id(Path::new(original))));
        }
    }
    None
}

pub fn fraction_dir(fraction: f64) -> String {
    format!("fraction_{fraction:.1}")
}

fn next_run_index(dir: &Path) -> u32 {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .flatten()
                .filter_map(|e| e.file_name().to_str()?.strip_prefix("run_")?.parse::<u32>().ok())
                .max()
                .map_or(1, |m| m + 1)
        })
        .unwrap_or(1)
}

fn absolute(p: &Path) -> CliResult<PathBuf> {
    std::path::absolute(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

/// Polls `STABLE?` until the daemon says yes or the timeout passes.
/// Returns the seconds waited, or `None` on timeout.
fn wait_stable(client: &mut ControlClient, config: &ExperimentConfig) -> CliResult<Option<f64>> {
    let start = Instant::now();
    let timeout = Duration::from_secs_f64(config.stability.wait_timeout_s);
    let check = Duration::from_millis(config.stability.check_interval_ms);
    loop {
        if client.is_stable().map_err(CliError::env)? {
            return Ok(Some(start.elapsed().as_secs_f64()));
        }
        if start.elapsed() + check > timeout {
            return Ok(None);
        }
        std::thread::sleep(check);
    }
}

pub struct RunRequest<'a> {
    pub script: &'a Path,
    pub mode: Option<PatchLevel>,
    pub script_id: Option<String>,
    pub sweep: bool,
}

pub fn run(config: &ExperimentConfig, req: &RunRequest) -> CliResult<RunSummary> {
    let script = absolute(req.script)?;
    let source = std::fs::read_to_string(&script).map_err(|e| CliError::Usage(format!("{}: {e}", script.display())))?;
    if !verify_patch(&source).is_valid() {
        return Err(CliError::Usage(format!("{} does not parse; patch it again", script.display())));
    }
    let inferred = infer_mode(&script);
    let mode = req.mode.or(inferred.as_ref().map(|(m, _)| *m)).ok_or_else(|| {
        CliError::usage("cannot tell the mode from the file name; pass --mode method|project")
    })?;
    let script_id = req
        .script_id
        .clone()
        .or(inferred.map(|(_, id)| id))
        .unwrap_or_else(|| crate::patch::script_id(&script));

    if !config.paths.stable_state.is_file() {
        return Err(CliError::Environment(format!(
            "stable state {} missing; run `calibrate` first",
            config.paths.stable_state.display()
        )));
    }
    let socket = absolute(&config.paths.socket)?;
    let mut client = connect(&socket)?;
    let status = client.status().map_err(CliError::env)?;
    if !status.calibrated {
        return Err(CliError::Environment("the daemon has no stable state; restart it after `calibrate`".into()));
    }

    let base = absolute(&config.paths.output)?.join(&script_id).join(mode.as_str());
    let manifest_base = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config.sha256(),
        trace_sha256: config.trace_sha256()?,
        script: script.clone(),
        script_sha256: file_sha256(&script)?,
        script_id: script_id.clone(),
        mode,
        fraction: None,
        run_index: 0,
        status: RunStatus::Ok,
        exit_code: None,
        waited_s: 0.0,
        started_ms: 0,
        ended_ms: 0,
    };
    let settings = serde_json::to_string(&ShimSettings::from_config(config)).expect("settings serialize");
    let fractions: Vec<Option<f64>> =
        if req.sweep { (1..=FRACTION_STEPS).map(|k| Some(fraction_of(k))).collect() } else { vec![None] };
    let settle = Duration::from_secs_f64(config.stability.settle_after_execution_s);
    let total = fractions.len() * config.repetitions as usize;
    let mut runs = Vec::with_capacity(total);

    for fraction in fractions {
        let group = match fraction {
            Some(f) => base.join(fraction_dir(f)),
            None => base.clone(),
        };
        std::fs::create_dir_all(&group).map_err(|e| CliError::Environment(format!("{}: {e}", group.display())))?;
        for _ in 0..config.repetitions {
            if !runs.is_empty() {
                std::thread::sleep(settle);
            }
            let index = next_run_index(&group);
            let run_dir = group.join(format!("run_{index:03}"));
            std::fs::create_dir(&run_dir).map_err(|e| CliError::Environment(format!("{}: {e}", run_dir.display())))?;
            let mut m = RunManifest { fraction, run_index: index, started_ms: epoch_ms(), ..manifest_base.clone() };
            match wait_stable(&mut client, config)? {
                None => {
                    log::warn!("{}: machine not stable within {} s; run skipped", run_dir.display(), config.stability.wait_timeout_s);
                    m.status = RunStatus::StabilityTimeout;
                    m.waited_s = config.stability.wait_timeout_s;
                }
                Some(waited) => {
                    m.waited_s = waited;
                    let code = execute(config, &script, &run_dir, &socket, index, fraction, &settings)?;
                    m.exit_code = code;
                    if code != Some(0) {
                        log::warn!("{}: script exited with {code:?}; its records are excluded", run_dir.display());
                        m.status = RunStatus::Failed;
                    }
                }
            }
            m.ended_ms = epoch_ms();
            let path = run_dir.join(MANIFEST);
            let json = serde_json::to_string_pretty(&m).expect("manifest serializes");
            std::fs::write(&path, json + "\n").map_err(|e| CliError::Environment(format!("{}: {e}", path.display())))?;
            log::info!("{} finished: {:?}", run_dir.display(), m.status);
            runs.push(m);
        }
    }
    let count = |s: RunStatus| runs.iter().filter(|m| m.status == s).count();
    let summary = RunSummary {
        experiment_dir: base,
        ok: count(RunStatus::Ok),
        failed: count(RunStatus::Failed),
        stability_timeouts: count(RunStatus::StabilityTimeout),
        runs,
    };
    Ok(summary)
}

fn execute(
    config: &ExperimentConfig,
    script: &Path,
    run_dir: &Path,
    socket: &Path,
    index: u32,
    fraction: Option<f64>,
    settings: &str,
) -> CliResult<Option<i32>> {
    let file = |name: &str| {
        let p = run_dir.join(name);
        std::fs::File::create(&p).map_err(|e| CliError::Environment(format!("{}: {e}", p.display())))
    };
    let mut cmd = Command::new(&config.python);
    cmd.arg(script)
        .current_dir(script.parent().unwrap_or(Path::new(".")))
        .env(ENV_SOCKET, socket)
        .env(ENV_RECORDS, run_dir.join(RECORDS))
        .env(ENV_RUN_INDEX, index.to_string())
        .env(ENV_DATA_FRACTION, fraction.unwrap_or(1.0).to_string())
        .env(ENV_SETTINGS, settings)
        .stdin(Stdio::null())
        .stdout(file("stdout.txt")?)
        .stderr(file("stderr.txt")?);
    if let Some(shim) = &config.shim_path {
        let shim = absolute(shim)?;
        let existing = std::env::var_os("PYTHONPATH").unwrap_or_default();
        let paths = std::iter::once(shim).chain(std::env::split_paths(&existing));
        cmd.env("PYTHONPATH", std::env::join_paths(paths).map_err(CliError::usage)?);
    }
    let status = cmd
        .status()
        .map_err(|e| CliError::Environment(format!("cannot start `{}`: {e}", config.python)))?;
    Ok(status.code())
}
