//! Daemon lifecycle: a detached `daemon serve` child owns the sampler and the
//! control socket; the other subcommands talk to it over that socket.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use finejoule_core::daemon::{start_daemon, ControlClient, DaemonConfig, DaemonStatus};
use finejoule_core::stability::StableState;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};

const START_TIMEOUT: Duration = Duration::from_secs(15);

pub fn daemon_config(config: &ExperimentConfig) -> CliResult<DaemonConfig> {
    let stable_state = if config.paths.stable_state.is_file() {
        Some(StableState::load(&config.paths.stable_state).map_err(CliError::usage)?)
    } else {
        log::warn!("no stable state at {}; run `calibrate` first", config.paths.stable_state.display());
        None
    };
    Ok(DaemonConfig {
        socket_path: config.paths.socket.clone(),
        sampler: config.sampler_config(),
        stability: config.stability.clone(),
        stable_state,
    })
}

/// Runs the daemon in the foreground until a `SHUTDOWN` request.
pub fn serve(config: &ExperimentConfig) -> CliResult<()> {
    let handle = start_daemon(daemon_config(config)?).map_err(CliError::env)?;
    log::info!("daemon listening on {}", handle.socket_path().display());
    handle.wait().map_err(CliError::env)
}

fn sidecar(socket: &Path, suffix: &str) -> PathBuf {
    let mut s = socket.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Spawns a detached daemon and waits until it answers `STATUS`.
pub fn start(config: &ExperimentConfig) -> CliResult<DaemonStatus> {
    let socket = &config.paths.socket;
    if let Ok(mut c) = ControlClient::connect(socket) {
        if c.status().is_ok() {
            return Err(CliError::Environment(format!("a daemon is already listening on {}", socket.display())));
        }
    }
    let config_path = sidecar(socket, ".config.json");
    let log_path = sidecar(socket, ".log");
    let json = serde_json::to_vec_pretty(config).expect("config serializes");
    std::fs::write(&config_path, json).map_err(|e| CliError::Environment(format!("{}: {e}", config_path.display())))?;
    let log = std::fs::File::create(&log_path).map_err(|e| CliError::Environment(format!("{}: {e}", log_path.display())))?;
    let exe = std::env::current_exe().map_err(CliError::env)?;
    let mut child = Command::new(exe)
        .arg("--config")
        .arg(&config_path)
        .args(["daemon", "serve"])
        .stdin(Stdio::null())
        .stdout(log.try_clone().map_err(CliError::env)?)
        .stderr(log)
        .spawn()
        .map_err(|e| CliError::Environment(format!("cannot spawn daemon: {e}")))?;

    let deadline = Instant::now() + START_TIMEOUT;
    loop {
        if let Some(status) = child.try_wait().map_err(CliError::env)? {
            let out = std::fs::read_to_string(&log_path).unwrap_or_default();
            return Err(CliError::Environment(format!("daemon exited with {status}: {}", out.trim())));
        }
        if let Ok(mut c) = ControlClient::connect(socket) {
            if let Ok(s) = c.status() {
                return Ok(s);
            }
        }
        if Instant::now() >= deadline {
            let _ = child.kill();
            return Err(CliError::Environment(format!("daemon did not come up on {}", socket.display())));
        }
        std::thread::sleep(Duration::from_millis(20));
    }
}

pub fn connect(socket: &Path) -> CliResult<ControlClient> {
    ControlClient::connect(socket)
        .map_err(|e| CliError::Environment(format!("no daemon on {}: {e}", socket.display())))
}

pub fn status(socket: &Path) -> CliResult<DaemonStatus> {
    connect(socket)?.status().map_err(CliError::env)
}

/// Asks the daemon to exit and waits for the socket to disappear.
pub fn stop(socket: &Path) -> CliResult<()> {
    connect(socket)?.shutdown().map_err(CliError::env)?;
    let deadline = Instant::now() + START_TIMEOUT;
    while socket.exists() && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(20));
    }
    Ok(())
}
