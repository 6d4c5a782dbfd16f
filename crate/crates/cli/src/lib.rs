//! The `finejoule` command line: environment checks, calibration, daemon
//! lifecycle, patching, repeated runs and analysis.

pub mod analyze;
pub mod calibrate;
pub mod config;
pub mod daemon;
pub mod env_check;
pub mod error;
pub mod patch;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{ConfigArgs, ExperimentConfig};
use crate::error::{CliError, CliResult, EXIT_OK, EXIT_USAGE};
use crate::patch::PatchLevel;

#[derive(Debug, Parser)]
#[command(name = "finejoule", version, about = "Fine-grained energy measurement of deep-learning API calls")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Report machine conditions that affect measurements. Never fails.
    EnvCheck {
        #[arg(long)]
        json: bool,
    },
    /// Record the idle baseline into the stable-state file.
    Calibrate {
        /// Seconds of idle sampling; defaults to the configured duration.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Start, stop or query the sampling daemon.
    #[command(subcommand)]
    Daemon(DaemonCmd),
    /// Insert measurement breakpoints into scripts or notebooks.
    Patch {
        #[arg(long, value_enum)]
        level: PatchLevel,
        /// Records path baked into the script; `run` overrides it per run.
        #[arg(long)]
        experiment_file: Option<String>,
        #[arg(required = true)]
        scripts: Vec<PathBuf>,
    },
    /// Execute a patched script once per repetition under the daemon.
    Run {
        script: PathBuf,
        /// Defaults to the `.method.patched` / `.project.patched` suffix.
        #[arg(long, value_enum)]
        mode: Option<PatchLevel>,
        /// Directory name for this experiment; defaults to the script stem.
        #[arg(long)]
        script_id: Option<String>,
        /// Repeat for each data fraction 0.1, 0.2, ..., 1.0.
        #[arg(long)]
        sweep: bool,
    },
    /// Reports over an experiment output directory.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
}

#[derive(Debug, Subcommand)]
pub enum DaemonCmd {
    /// Start a detached daemon.
    Start,
    Stop,
    Status,
    /// Run the daemon in the foreground (used by `start`).
    Serve,
}

#[derive(Debug, Clone, clap::Args)]
pub struct DirArg {
    /// Experiment output directory; defaults to the configured one.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCmd {
    /// Project against the sum of its methods, with paired tests.
    Rq1(DirArg),
    /// Energy against input size over fraction sweeps.
    Rq2(DirArg),
    /// Record counts and per-function aggregates.
    Summary(DirArg),
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(CliError::env)?;
    writeln!(out).map_err(CliError::env)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, json + "\n").map_err(|e| CliError::Environment(format!("{}: {e}", path.display())))
}

fn analyze(config: &ExperimentConfig, cmd: &AnalyzeCmd) -> CliResult<()> {
    let dir_of = |d: &DirArg| d.dir.clone().unwrap_or_else(|| config.paths.output.clone());
    match cmd {
        AnalyzeCmd::Rq1(d) => {
            let dir = dir_of(d);
            let report = analyze::rq1(&dir)?;
            write_json(&dir.join("rq1_report.json"), &report)?;
            print_json(&report)?;
            for line in analyze::eq1_lines(&report) {
                log::info!("{line}");
            }
            if !report.passed() {
                let failed: Vec<&str> = report.projects.iter().filter(|p| !p.passed).map(|p| p.project.as_str()).collect();
                return Err(CliError::AnalysisViolation(format!(
                    "methods exceed their project's energy in {}",
                    failed.join(", ")
                )));
            }
        }
        AnalyzeCmd::Rq2(d) => {
            let dir = dir_of(d);
            let report = analyze::rq2(&dir)?;
            write_json(&dir.join("rq2_report.json"), &report)?;
            print_json(&report)?;
        }
        AnalyzeCmd::Summary(d) => {
            let dir = dir_of(d);
            let report = analyze::summary(&dir)?;
            write_json(&dir.join("summary.json"), &report)?;
            print_json(&report)?;
        }
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    let config = ExperimentConfig::resolve(&cli.config)?;
    match &cli.command {
        Cmd::EnvCheck { json } => {
            let items = env_check::EnvProbe::default().run(&config.backend);
            if *json {
                print_json(&items)?;
            } else {
                for item in &items {
                    println!("{item}");
                }
            }
        }
        Cmd::Calibrate { duration } => {
            let state = calibrate::run(&config, *duration)?;
            print_json(&state)?;
        }
        Cmd::Daemon(DaemonCmd::Start) => print_json(&daemon::start(&config)?)?,
        Cmd::Daemon(DaemonCmd::Stop) => daemon::stop(&config.paths.socket)?,
        Cmd::Daemon(DaemonCmd::Status) => print_json(&daemon::status(&config.paths.socket)?)?,
        Cmd::Daemon(DaemonCmd::Serve) => daemon::serve(&config)?,
        Cmd::Patch { level, experiment_file, scripts } => {
            let framework = config.framework();
            let outcomes = scripts
                .iter()
                .map(|s| patch::patch_file(s, *level, &framework, experiment_file.as_deref()))
                .collect::<CliResult<Vec<_>>>()?;
            print_json(&outcomes)?;
        }
        Cmd::Run { script, mode, script_id, sweep } => {
            let req = run::RunRequest { script, mode: *mode, script_id: script_id.clone(), sweep: *sweep };
            let summary = run::run(&config, &req)?;
            print_json(&summary)?;
            if summary.stability_timeouts > 0 {
                return Err(CliError::StabilityTimeout(format!(
                    "{} of {} runs skipped; the machine did not stabilise",
                    summary.stability_timeouts,
                    summary.runs.len()
                )));
            }
        }
        Cmd::Analyze(cmd) => analyze(&config, cmd)?,
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("finejoule: {e}");
            e.exit_code()
        }
    }
}
