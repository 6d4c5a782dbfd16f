//! Advisory machine checks. Nothing is changed; each item passes or warns.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;

use finejoule_core::sampler::{Channel, CpuTemperatureBackend, NvidiaSmiBackend, RaplBackend, TraceFile};
use serde::Serialize;

use crate::config::BackendMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Warn,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl CheckItem {
    fn new(name: &str, status: Status, detail: impl Into<String>) -> Self {
        CheckItem { name: name.to_string(), status, detail: detail.into() }
    }
}

impl fmt::Display for CheckItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "pass",
            Status::Warn => "warn",
            Status::Skipped => "skip",
        };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Where the checks look. Tests point these at fake trees.
#[derive(Debug, Clone)]
pub struct EnvProbe {
    pub sys_root: PathBuf,
    pub proc_root: PathBuf,
    /// Program used for GPU queries.
    pub gpu_tool: String,
    /// More user processes than this draws a warning.
    pub max_user_processes: usize,
}

impl Default for EnvProbe {
    fn default() -> Self {
        EnvProbe { sys_root: "/sys".into(), proc_root: "/proc".into(), gpu_tool: "nvidia-smi".into(), max_user_processes: 30 }
    }
}

const REPLAY_SKIP: &str = "skipped (replay)";

impl EnvProbe {
    pub fn run(&self, backend: &BackendMode) -> Vec<CheckItem> {
        match backend {
            BackendMode::Hardware => {
                let mut items = vec![self.persistence_mode(), self.governor(), self.user_processes()];
                items.extend(self.hardware_channels());
                items
            }
            BackendMode::Replay(trace) => {
                let mut items: Vec<CheckItem> = ["gpu-persistence-mode", "cpu-governor", "background-processes"]
                    .iter()
                    .map(|n| CheckItem::new(n, Status::Skipped, REPLAY_SKIP))
                    .collect();
                items.extend(replay_channels(trace));
                items
            }
        }
    }

    fn persistence_mode(&self) -> CheckItem {
        const NAME: &str = "gpu-persistence-mode";
        let out = Command::new(&self.gpu_tool).args(["--query-gpu=persistence_mode", "--format=csv,noheader"]).output();
        let text = match out {
            Ok(o) if o.status.success() => String::from_utf8_lossy(&o.stdout).into_owned(),
            _ => return CheckItem::new(NAME, Status::Warn, format!("`{}` unavailable; cannot read persistence mode", self.gpu_tool)),
        };
        let modes: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if !modes.is_empty() && modes.iter().all(|m| m.eq_ignore_ascii_case("enabled")) {
            CheckItem::new(NAME, Status::Pass, format!("enabled on {} GPU(s)", modes.len()))
        } else {
            CheckItem::new(
                NAME,
                Status::Warn,
                format!("persistence mode is `{}`; enable it with `sudo {} -pm 1`", modes.join(","), self.gpu_tool),
            )
        }
    }

    fn governor(&self) -> CheckItem {
        const NAME: &str = "cpu-governor";
        let cpu_dir = self.sys_root.join("devices/system/cpu");
        let mut governors = Vec::new();
        if let Ok(entries) = std::fs::read_dir(&cpu_dir) {
            for e in entries.flatten() {
                let name = e.file_name().to_string_lossy().into_owned();
                let is_cpu = name.strip_prefix("cpu").is_some_and(|n| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()));
                if !is_cpu {
                    continue;
                }
                if let Ok(g) = std::fs::read_to_string(e.path().join("cpufreq/scaling_governor")) {
                    governors.push((name, g.trim().to_string()));
                }
            }
        }
        governors.sort();
        if governors.is_empty() {
            return CheckItem::new(NAME, Status::Warn, "no cpufreq governor exposed; cannot confirm performance mode");
        }
        let slow: Vec<String> =
            governors.iter().filter(|(_, g)| g != "performance").map(|(c, g)| format!("{c}={g}")).collect();
        if slow.is_empty() {
            CheckItem::new(NAME, Status::Pass, format!("performance on {} CPU(s)", governors.len()))
        } else {
            CheckItem::new(
                NAME,
                Status::Warn,
                format!("{}; set it with `sudo cpupower frequency-set -g performance`", slow.join(", ")),
            )
        }
    }

    fn user_processes(&self) -> CheckItem {
        const NAME: &str = "background-processes";
        let Some(uid) = status_uid(&self.proc_root.join("self/status")) else {
            return CheckItem::new(NAME, Status::Warn, "cannot read the process table");
        };
        let own = std::process::id().to_string();
        let count = std::fs::read_dir(&self.proc_root)
            .map(|entries| {
                entries
                    .flatten()
                    .filter(|e| {
                        let name = e.file_name().to_string_lossy().into_owned();
                        name.chars().all(|c| c.is_ascii_digit()) && name != own
                    })
                    .filter(|e| status_uid(&e.path().join("status")) == Some(uid))
                    .count()
            })
            .unwrap_or(0);
        let detail = format!("{count} other process(es) owned by uid {uid}");
        if count > self.max_user_processes {
            CheckItem::new(NAME, Status::Warn, format!("{detail}; close non-essential programs before measuring"))
        } else {
            CheckItem::new(NAME, Status::Pass, detail)
        }
    }

    fn hardware_channels(&self) -> Vec<CheckItem> {
        let powercap = self.sys_root.join("class/powercap");
        let temp = self.sys_root.join("class/thermal/thermal_zone0/temp");
        let gpu_cmd = vec![
            self.gpu_tool.clone(),
            "--query-gpu=power.draw,temperature.gpu".into(),
            "--format=csv,noheader,nounits".into(),
        ];
        let gpu_ok = NvidiaSmiBackend::new(gpu_cmd).query().is_ok();
        let available = |c: Channel| match c {
            Channel::CpuUj | Channel::RamUj => RaplBackend::discover(&powercap, c).is_some(),
            Channel::GpuW | Channel::GpuTempC => gpu_ok,
            Channel::CpuTempC => CpuTemperatureBackend::new(temp.clone()).read().is_ok(),
        };
        Channel::ALL.iter().map(|&c| channel_item(c, available(c))).collect()
    }
}

fn channel_item(c: Channel, available: bool) -> CheckItem {
    let name = format!("channel {c}");
    if available {
        CheckItem::new(&name, Status::Pass, "available")
    } else {
        CheckItem::new(&name, Status::Warn, format!("channel `{c}` is missing"))
    }
}

fn replay_channels(trace: &Path) -> Vec<CheckItem> {
    match TraceFile::load(trace) {
        Ok(t) => Channel::ALL.iter().map(|&c| channel_item(c, t.has_channel(c))).collect(),
        Err(e) => vec![CheckItem::new("replay-trace", Status::Warn, format!("{}: {e}", trace.display()))],
    }
}

fn status_uid(path: &Path) -> Option<u32> {
    let text = std::fs::read_to_string(path).ok()?;
    let line = text.lines().find(|l| l.starts_with("Uid:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, text: &str) {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, text).unwrap();
    }

    fn fake_probe(root: &Path) -> EnvProbe {
        EnvProbe {
            sys_root: root.join("sys"),
            proc_root: root.join("proc"),
            gpu_tool: "/nonexistent/gpu-tool".into(),
            max_user_processes: 1,
        }
    }

    #[test]
    fn governor_other_than_performance_warns_with_hint() {
        let dir = tempfile::tempdir().unwrap();
        let cpu = dir.path().join("sys/devices/system/cpu");
        write(&cpu.join("cpu0/cpufreq/scaling_governor"), "performance\n");
        write(&cpu.join("cpu1/cpufreq/scaling_governor"), "powersave\n");
        write(&cpu.join("cpufreq/ignored"), "");
        let item = fake_probe(dir.path()).governor();
        assert_eq!(item.status, Status::Warn);
        assert!(item.detail.contains("cpu1=powersave"));
        assert!(item.detail.contains("frequency-set -g performance"));

        write(&cpu.join("cpu1/cpufreq/scaling_governor"), "performance\n");
        assert_eq!(fake_probe(dir.path()).governor().status, Status::Pass);
    }

    #[test]
    fn missing_channels_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let rapl = dir.path().join("sys/class/powercap/intel-rapl:0");
        write(&rapl.join("name"), "package-0\n");
        write(&rapl.join("energy_uj"), "100\n");
        write(&dir.path().join("sys/class/thermal/thermal_zone0/temp"), "41000\n");
        let items = fake_probe(dir.path()).hardware_channels();
        let warned: Vec<&str> = items.iter().filter(|i| i.status == Status::Warn).map(|i| i.name.as_str()).collect();
        assert_eq!(warned, vec!["channel ram_uj", "channel gpu_w", "channel gpu_temp_c"]);
        assert!(items[2].detail.contains("gpu_w"));
    }

    #[test]
    fn missing_gpu_tool_warns_on_persistence() {
        let dir = tempfile::tempdir().unwrap();
        let item = fake_probe(dir.path()).persistence_mode();
        assert_eq!(item.status, Status::Warn);
    }

    #[test]
    fn user_processes_are_counted_by_uid() {
        let dir = tempfile::tempdir().unwrap();
        let proc_root = dir.path().join("proc");
        write(&proc_root.join("self/status"), "Name:\tx\nUid:\t1000\t1000\t1000\t1000\n");
        write(&proc_root.join("11/status"), "Uid:\t1000\t1000\t1000\t1000\n");
        write(&proc_root.join("12/status"), "Uid:\t1000\t1000\t1000\t1000\n");
        write(&proc_root.join("13/status"), "Uid:\t0\t0\t0\t0\n");
        let item = fake_probe(dir.path()).user_processes();
        assert_eq!(item.status, Status::Warn);
        assert!(item.detail.starts_with("2 other"));
    }

    #[test]
    fn replay_mode_skips_hardware_checks() {
        let dir = tempfile::tempdir().unwrap();
        let trace = dir.path().join("t.csv");
        std::fs::write(&trace, "t_ms,channel,value\n0,cpu_uj,0\n0,ram_uj,0\n0,gpu_w,20\n0,cpu_temp_c,40\n").unwrap();
        let items = fake_probe(dir.path()).run(&BackendMode::Replay(trace));
        assert!(items[..3].iter().all(|i| i.status == Status::Skipped && i.detail == "skipped (replay)"));
        let warned: Vec<&str> = items.iter().filter(|i| i.status == Status::Warn).map(|i| i.name.as_str()).collect();
        assert_eq!(warned, vec!["channel gpu_temp_c"]);
    }
}
