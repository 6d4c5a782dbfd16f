//! Measurement daemon: runs the sampler and answers a line-oriented control
//! protocol on a Unix socket.
//!
//! Requests and replies are single lines unless noted.
//!
//! | request              | reply                                              |
//! |----------------------|----------------------------------------------------|
//! | `STABLE?`            | `STABLE` or `UNSTABLE`                             |
//! | `SLICE <c> <t0> <t1>`| one JSON sample per line, then `END`               |
//! | `STABLE_STATE`       | stable-state JSON                                  |
//! | `NET <t0> <t1>`      | per-component net energy JSON                      |
//! | `NOW`                | daemon clock in epoch milliseconds                 |
//! | `STATUS`             | status JSON                                        |
//! | `SHUTDOWN`           | `BYE`, then the daemon exits                       |
//!
//! Failures reply `ERR <message>`.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::analysis::{net_energy_all, NetEnergyResult};
use crate::clock::{Clock, SystemClock};
use crate::component::{Component, PerComponent};
use crate::sampler::{start_sampling, LogTail, PowerSample, SamplerConfig, SamplerError, SamplerHandle};
use crate::stability::{poll_once, StabilityConfig, StabilityError, StableState};

pub const END: &str = "END";

#[derive(Debug, thiserror::Error)]
pub enum DaemonError {
    #[error("daemon replied with an error: {0}")]
    Remote(String),
    #[error("unexpected reply: {0}")]
    Protocol(String),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Stable,
    Slice { component: Component, t0: i64, t1: i64 },
    StableState,
    Net { t0: i64, t1: i64 },
    Now,
    Status,
    Shutdown,
}

impl FromStr for Request {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let int = |s: &str| s.parse::<i64>().map_err(|_| format!("bad timestamp `{s}`"));
        match parts.as_slice() {
            ["STABLE?"] => Ok(Request::Stable),
            ["SLICE", c, t0, t1] => Ok(Request::Slice {
                component: c.parse().map_err(|e| format!("{e}"))?,
                t0: int(t0)?,
                t1: int(t1)?,
            }),
            ["STABLE_STATE"] => Ok(Request::StableState),
            ["NET", t0, t1] => Ok(Request::Net { t0: int(t0)?, t1: int(t1)? }),
            ["NOW"] => Ok(Request::Now),
            ["STATUS"] => Ok(Request::Status),
            ["SHUTDOWN"] => Ok(Request::Shutdown),
            [] => Err("empty request".into()),
            _ => Err(format!("unknown request `{}`", line.trim())),
        }
    }
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Request::Stable => write!(f, "STABLE?"),
            Request::Slice { component, t0, t1 } => write!(f, "SLICE {component} {t0} {t1}"),
            Request::StableState => write!(f, "STABLE_STATE"),
            Request::Net { t0, t1 } => write!(f, "NET {t0} {t1}"),
            Request::Now => write!(f, "NOW"),
            Request::Status => write!(f, "STATUS"),
            Request::Shutdown => write!(f, "SHUTDOWN"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaemonStatus {
    pub pid: u32,
    pub samples: usize,
    pub latest_t: Option<i64>,
    pub interval_ms: u64,
    pub sampler_running: bool,
    pub calibrated: bool,
    pub log_path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DaemonConfig {
    pub socket_path: PathBuf,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    /// Absent before calibration; `STABLE?`, `STABLE_STATE` and `NET` then fail.
    #[serde(default)]
    pub stable_state: Option<StableState>,
}

struct Shared {
    tail: Mutex<LogTail>,
    config: DaemonConfig,
    clock: Arc<dyn Clock + Send + Sync>,
    shutdown: AtomicBool,
    sampler: Mutex<Option<SamplerHandle>>,
}

impl Shared {
    fn handle(&self, request: &Request) -> Result<Vec<String>, String> {
        let err = |e: &dyn fmt::Display| e.to_string();
        let baseline = || self.config.stable_state.as_ref().ok_or_else(|| "no stable state; calibrate first".to_string());
        match request {
            Request::Stable => {
                let baseline = baseline()?;
                let mut tail = self.tail.lock().map_err(|_| "log lock poisoned")?;
                let verdict = poll_once(&self.config.stability, baseline, &mut *tail, self.clock.now_ms())
                    .map_err(|e: StabilityError| err(&e))?;
                Ok(vec![if verdict.is_stable() { "STABLE" } else { "UNSTABLE" }.into()])
            }
            Request::Slice { component, t0, t1 } => {
                let mut tail = self.tail.lock().map_err(|_| "log lock poisoned")?;
                tail.refresh().map_err(|e| err(&e))?;
                let mut lines = tail
                    .slice(*component, *t0, *t1)
                    .iter()
                    .map(|s| serde_json::to_string(s).map_err(|e| err(&e)))
                    .collect::<Result<Vec<_>, _>>()?;
                lines.push(END.into());
                Ok(lines)
            }
            Request::StableState => Ok(vec![serde_json::to_string(baseline()?).map_err(|e| err(&e))?]),
            Request::Net { t0, t1 } => {
                let baseline = baseline()?;
                let mut tail = self.tail.lock().map_err(|_| "log lock poisoned")?;
                tail.refresh().map_err(|e| err(&e))?;
                let samples: Vec<PowerSample> =
                    Component::ALL.iter().flat_map(|&c| tail.slice(c, *t0, *t1).iter().cloned()).collect();
                let result = net_energy_all(&samples, baseline, *t0, *t1, self.config.sampler.interval_ms)
                    .map_err(|e| err(&e))?;
                Ok(vec![serde_json::to_string(&result).map_err(|e| err(&e))?])
            }
            Request::Now => Ok(vec![self.clock.now_ms().to_string()]),
            Request::Status => {
                let mut tail = self.tail.lock().map_err(|_| "log lock poisoned")?;
                tail.refresh().map_err(|e| err(&e))?;
                let status = DaemonStatus {
                    pid: std::process::id(),
                    samples: tail.len(),
                    latest_t: tail.latest_t(),
                    interval_ms: self.config.sampler.interval_ms,
                    sampler_running: self
                        .sampler
                        .lock()
                        .map(|s| s.as_ref().is_some_and(|h| !h.is_finished()))
                        .unwrap_or(false),
                    calibrated: self.config.stable_state.is_some(),
                    log_path: self.config.sampler.log_path.clone(),
                };
                Ok(vec![serde_json::to_string(&status).map_err(|e| err(&e))?])
            }
            Request::Shutdown => {
                self.shutdown.store(true, Ordering::SeqCst);
                Ok(vec!["BYE".into()])
            }
        }
    }
}

fn serve_connection(shared: Arc<Shared>, stream: UnixStream) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match line.parse::<Request>() {
            Ok(req) => shared.handle(&req).unwrap_or_else(|e| vec![format!("ERR {e}")]),
            Err(e) => vec![format!("ERR {e}")],
        };
        let mut out = reply.join("\n");
        out.push('\n');
        writer.write_all(out.as_bytes())?;
        writer.flush()?;
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
    }
    Ok(())
}

/// A running daemon. Dropping it shuts the daemon down.
pub struct DaemonHandle {
    shared: Arc<Shared>,
    server: Option<JoinHandle<()>>,
}

impl DaemonHandle {
    pub fn socket_path(&self) -> &Path {
        &self.shared.config.socket_path
    }

    pub fn is_shutdown_requested(&self) -> bool {
        self.shared.shutdown.load(Ordering::SeqCst)
    }

    /// Blocks until a `SHUTDOWN` request arrives.
    pub fn wait(mut self) -> Result<(), DaemonError> {
        if let Some(server) = self.server.take() {
            let _ = server.join();
        }
        self.finish()
    }

    pub fn shutdown(mut self) -> Result<(), DaemonError> {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        if let Some(server) = self.server.take() {
            let _ = server.join();
        }
        self.finish()
    }

    fn finish(&mut self) -> Result<(), DaemonError> {
        let sampler = self.shared.sampler.lock().ok().and_then(|mut s| s.take());
        let result = match sampler {
            Some(s) => s.stop_and_join().map(|_| ()).map_err(DaemonError::from),
            None => Ok(()),
        };
        let _ = std::fs::remove_file(&self.shared.config.socket_path);
        result
    }
}

impl Drop for DaemonHandle {
    fn drop(&mut self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        if let Some(server) = self.server.take() {
            let _ = server.join();
        }
        let _ = self.finish();
    }
}

/// Starts the sampler and the control server on the system clock.
pub fn start_daemon(config: DaemonConfig) -> Result<DaemonHandle, DaemonError> {
    start_daemon_with_clock(config, Arc::new(SystemClock))
}

pub fn start_daemon_with_clock(
    config: DaemonConfig,
    clock: Arc<dyn Clock + Send + Sync>,
) -> Result<DaemonHandle, DaemonError> {
    if config.socket_path.exists() {
        // A live daemon answers; a stale socket file does not.
        if UnixStream::connect(&config.socket_path).is_ok() {
            return Err(DaemonError::Protocol(format!(
                "a daemon is already listening on {}",
                config.socket_path.display()
            )));
        }
        std::fs::remove_file(&config.socket_path)?;
    }
    let sampler = start_sampling(&config.sampler)?;
    let listener = UnixListener::bind(&config.socket_path)?;
    listener.set_nonblocking(true)?;
    let shared = Arc::new(Shared {
        tail: Mutex::new(LogTail::new(&config.sampler.log_path)),
        config,
        clock,
        shutdown: AtomicBool::new(false),
        sampler: Mutex::new(Some(sampler)),
    });
    let server_shared = Arc::clone(&shared);
    let server = std::thread::Builder::new().name("control-server".into()).spawn(move || {
        let mut workers: Vec<JoinHandle<()>> = Vec::new();
        while !server_shared.shutdown.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, _)) => {
                    let s = Arc::clone(&server_shared);
                    let spawned = std::thread::Builder::new().name("control-conn".into()).spawn(move || {
                        if let Err(e) = serve_connection(s, stream) {
                            log::debug!("control connection ended: {e}");
                        }
                    });
                    match spawned {
                        Ok(w) => workers.push(w),
                        Err(e) => log::error!("cannot spawn connection handler: {e}"),
                    }
                }
                Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                    std::thread::sleep(Duration::from_millis(20));
                }
                Err(e) => {
                    log::error!("accept failed: {e}");
                    std::thread::sleep(Duration::from_millis(20));
                }
            }
            workers.retain(|w| !w.is_finished());
        }
    })?;
    Ok(DaemonHandle { shared, server: Some(server) })
}

/// Client side of the control protocol.
pub struct ControlClient {
    reader: BufReader<UnixStream>,
    writer: UnixStream,
}

impl ControlClient {
    pub fn connect(socket_path: &Path) -> Result<Self, DaemonError> {
        let stream = UnixStream::connect(socket_path)?;
        stream.set_read_timeout(Some(Duration::from_secs(30)))?;
        let writer = stream.try_clone()?;
        Ok(ControlClient { reader: BufReader::new(stream), writer })
    }

    fn read_line(&mut self) -> Result<String, DaemonError> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(DaemonError::Protocol("connection closed".into()));
        }
        let line = line.trim_end_matches(['\n', '\r']).to_string();
        match line.strip_prefix("ERR ") {
            Some(msg) => Err(DaemonError::Remote(msg.to_string())),
            None => Ok(line),
        }
    }

    /// Sends one request and returns the reply lines (without `END`).
    pub fn request(&mut self, request: &Request) -> Result<Vec<String>, DaemonError> {
        self.send_raw(&request.to_string())?;
        let first = self.read_line()?;
        if !matches!(request, Request::Slice { .. }) {
            return Ok(vec![first]);
        }
        let mut lines = Vec::new();
        let mut line = first;
        while line != END {
            lines.push(line);
            line = self.read_line()?;
        }
        Ok(lines)
    }

    pub fn send_raw(&mut self, line: &str) -> Result<(), DaemonError> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn is_stable(&mut self) -> Result<bool, DaemonError> {
        let reply = self.request(&Request::Stable)?.remove(0);
        match reply.as_str() {
            "STABLE" => Ok(true),
            "UNSTABLE" => Ok(false),
            _ => Err(DaemonError::Protocol(reply)),
        }
    }

    pub fn slice(&mut self, component: Component, t0: i64, t1: i64) -> Result<Vec<PowerSample>, DaemonError> {
        self.request(&Request::Slice { component, t0, t1 })?
            .iter()
            .map(|l| serde_json::from_str(l).map_err(DaemonError::from))
            .collect()
    }

    pub fn slices(&mut self, t0: i64, t1: i64) -> Result<PerComponent<Vec<PowerSample>>, DaemonError> {
        PerComponent::try_from_fn(|c| self.slice(c, t0, t1))
    }

    pub fn stable_state(&mut self) -> Result<StableState, DaemonError> {
        Ok(serde_json::from_str(&self.request(&Request::StableState)?[0])?)
    }

    pub fn net(&mut self, t0: i64, t1: i64) -> Result<NetEnergyResult, DaemonError> {
        Ok(serde_json::from_str(&self.request(&Request::Net { t0, t1 })?[0])?)
    }

    pub fn now(&mut self) -> Result<i64, DaemonError> {
        let reply = self.request(&Request::Now)?.remove(0);
        reply.parse().map_err(|_| DaemonError::Protocol(reply))
    }

    pub fn status(&mut self) -> Result<DaemonStatus, DaemonError> {
        Ok(serde_json::from_str(&self.request(&Request::Status)?[0])?)
    }

    pub fn shutdown(&mut self) -> Result<(), DaemonError> {
        let reply = self.request(&Request::Shutdown)?.remove(0);
        if reply == "BYE" {
            Ok(())
        } else {
            Err(DaemonError::Protocol(reply))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn requests_round_trip_through_text() {
        let all = [
            Request::Stable,
            Request::Slice { component: Component::Gpu, t0: 1000, t1: 3000 },
            Request::StableState,
            Request::Net { t0: -5, t1: 7 },
            Request::Now,
            Request::Status,
            Request::Shutdown,
        ];
        for r in all {
            assert_eq!(r.to_string().parse::<Request>().unwrap(), r);
        }
        assert_eq!("SLICE gpu 1000 3000".parse::<Request>().unwrap(), all_slice());
    }

    fn all_slice() -> Request {
        Request::Slice { component: Component::Gpu, t0: 1000, t1: 3000 }
    }

    #[test]
    fn malformed_requests_are_rejected() {
        assert!("SLICE tpu 0 1".parse::<Request>().is_err());
        assert!("NET 0".parse::<Request>().is_err());
        assert!("NET a b".parse::<Request>().is_err());
        assert!("stable?".parse::<Request>().is_err());
        assert!("".parse::<Request>().is_err());
    }
}
