//! `analyze`: reads experiment directories written by `run` and reports.
//!
//! Reports hold no wall-clock values, so re-analysing the same directory
//! gives byte-identical output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use finejoule_core::analysis::{
    aggregate_repetitions, compare_project_vs_methods, data_size_sweep, pearson, sweep_correlation, wilcoxon_signed_rank,
    AggregateResult, Alternative, ComponentEnergy, Eq1Report, NetEnergyResult, SweepObservation, SweepTable, TestResult,
};
use finejoule_core::record::{read_records, MeasurementRecord, RUN_FAILED};
use finejoule_core::{Component, PerComponent};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::patch::PatchLevel;
use crate::run::{RunManifest, RunStatus, MANIFEST, RECORDS};

#[derive(Debug, Clone)]
pub struct RunData {
    pub manifest: RunManifest,
    pub records: Vec<MeasurementRecord>,
}

impl RunData {
    fn usable(&self) -> impl Iterator<Item = &MeasurementRecord> {
        self.records.iter().filter(|r| r.is_usable())
    }
}

fn read_run(dir: &Path) -> CliResult<RunData> {
    let path = dir.join(MANIFEST);
    let bytes = std::fs::read(&path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let manifest: RunManifest =
        serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let records_path = dir.join(RECORDS);
    let mut records = if records_path.is_file() {
        read_records(&records_path).map_err(|e| CliError::Usage(format!("{}: {e}", records_path.display())))?
    } else {
        Vec::new()
    };
    if manifest.status == RunStatus::Failed {
        // flagged in memory only; files stay as written
        for r in &mut records {
            if !r.has_flag(RUN_FAILED) {
                r.flags.push(RUN_FAILED.to_string());
            }
        }
    }
    Ok(RunData { manifest, records })
}

fn sorted_subdirs(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    out.sort();
    Ok(out)
}

/// Every run below a mode directory, including fraction subdirectories.
pub fn load_runs(mode_dir: &Path) -> CliResult<Vec<RunData>> {
    let mut runs = Vec::new();
    if !mode_dir.is_dir() {
        return Ok(runs);
    }
    for sub in sorted_subdirs(mode_dir)? {
        if sub.join(MANIFEST).is_file() {
            runs.push(read_run(&sub)?);
        } else {
            for run in sorted_subdirs(&sub)? {
                if run.join(MANIFEST).is_file() {
                    runs.push(read_run(&run)?);
                }
            }
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone)]
pub struct ProjectDir {
    pub id: String,
    pub path: PathBuf,
}

/// Projects under `dir`: `dir` itself when it holds mode directories,
/// otherwise each subdirectory that does.
pub fn find_projects(dir: &Path) -> CliResult<Vec<ProjectDir>> {
    let is_project = |p: &Path| [PatchLevel::Method, PatchLevel::Project].iter().any(|m| p.join(m.as_str()).is_dir());
    let name = |p: &Path| p.file_name().and_then(|n| n.to_str()).unwrap_or("project").to_string();
    if is_project(dir) {
        return Ok(vec![ProjectDir { id: name(dir), path: dir.to_path_buf() }]);
    }
    let projects: Vec<ProjectDir> = sorted_subdirs(dir)?
        .into_iter()
        .filter(|p| is_project(p))
        .map(|p| ProjectDir { id: name(&p), path: p })
        .collect();
    if projects.is_empty() {
        return Err(CliError::Usage(format!("no experiment directories under {}", dir.display())));
    }
    Ok(projects)
}

fn sum_results<'a>(records: impl Iterator<Item = &'a MeasurementRecord>) -> Option<NetEnergyResult> {
    let mut acc: Option<NetEnergyResult> = None;
    for r in records.filter_map(MeasurementRecord::net_result) {
        acc = Some(match acc {
            None => r,
            Some(a) => NetEnergyResult {
                components: PerComponent::from_fn(|c| ComponentEnergy {
                    gross_j: a.components.get(c).gross_j + r.components.get(c).gross_j,
                    net_j: a.components.get(c).net_j + r.components.get(c).net_j,
                }),
                duration_s: a.duration_s + r.duration_s,
                repetition: None,
            },
        });
    }
    acc
}

/// Per-run totals of each function, from usable records only. Runs without
/// a usable record of a function do not count for it.
fn per_function_runs(runs: &[&RunData]) -> BTreeMap<String, Vec<NetEnergyResult>> {
    let mut out: BTreeMap<String, Vec<NetEnergyResult>> = BTreeMap::new();
    for run in runs {
        let mut names: Vec<&str> = run.usable().map(|r| r.function_to_run.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        for name in names {
            if let Some(mut total) = sum_results(run.usable().filter(|r| r.function_to_run == name)) {
                total.repetition = Some(run.manifest.run_index as usize);
                out.entry(name.to_string()).or_default().push(total);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RecordCounts {
    pub runs: usize,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub runs_stability_timeout: usize,
    pub records: usize,
    pub usable: usize,
    pub flags: BTreeMap<String, usize>,
}

fn counts(runs: &[&RunData]) -> RecordCounts {
    let mut c = RecordCounts { runs: runs.len(), ..RecordCounts::default() };
    for run in runs {
        match run.manifest.status {
            RunStatus::Ok => c.runs_ok += 1,
            RunStatus::Failed => c.runs_failed += 1,
            RunStatus::StabilityTimeout => c.runs_stability_timeout += 1,
        }
        for r in &run.records {
            c.records += 1;
            if r.is_usable() {
                c.usable += 1;
            }
            for f in &r.flags {
                *c.flags.entry(f.clone()).or_default() += 1;
            }
        }
    }
    c
}

/// A statistical test that may not apply to the data at hand.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum TestOutcome {
    Done(TestResult),
    NotApplicable { error: String },
}

impl<E: std::fmt::Display> From<Result<TestResult, E>> for TestOutcome {
    fn from(r: Result<TestResult, E>) -> Self {
        match r {
            Ok(t) => TestOutcome::Done(t),
            Err(e) => TestOutcome::NotApplicable { error: e.to_string() },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectRq1 {
    pub project: String,
    pub eq1: Eq1Report,
    pub passed: bool,
    pub project_aggregate: AggregateResult,
    pub method_aggregates: BTreeMap<String, AggregateResult>,
    /// Paired by run index: project net energy against the sum of its methods.
    pub wilcoxon_project_greater: PerComponent<TestOutcome>,
    /// Net energy against execution time over all usable method records.
    pub pearson_energy_time: PerComponent<TestOutcome>,
    pub project_counts: RecordCounts,
    pub method_counts: RecordCounts,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rq1Report {
    pub projects: Vec<ProjectRq1>,
    pub skipped: Vec<String>,
}

impl Rq1Report {
    pub fn passed(&self) -> bool {
        self.projects.iter().all(|p| p.passed)
    }
}

fn unswept(runs: &[RunData]) -> Vec<&RunData> {
    runs.iter().filter(|r| r.manifest.fraction.is_none()).collect()
}

fn rq1_project(p: &ProjectDir) -> CliResult<Result<ProjectRq1, String>> {
    let project_runs = load_runs(&p.path.join(PatchLevel::Project.as_str()))?;
    let method_runs = load_runs(&p.path.join(PatchLevel::Method.as_str()))?;
    let project_runs = unswept(&project_runs);
    let method_runs = unswept(&method_runs);

    let mut per_run_project: Vec<NetEnergyResult> = Vec::new();
    for run in &project_runs {
        if let Some(mut r) = sum_results(run.usable()) {
            r.repetition = Some(run.manifest.run_index as usize);
            per_run_project.push(r);
        }
    }
    let functions = per_function_runs(&method_runs);
    if per_run_project.is_empty() {
        return Ok(Err(format!("{}: no usable project-level runs", p.id)));
    }
    if functions.is_empty() {
        return Ok(Err(format!("{}: no usable method-level records", p.id)));
    }
    let project_aggregate = aggregate_repetitions(&per_run_project).map_err(CliError::usage)?;
    let method_aggregates: BTreeMap<String, AggregateResult> = functions
        .iter()
        .map(|(name, runs)| aggregate_repetitions(runs).map(|a| (name.clone(), a)))
        .collect::<Result<_, _>>()
        .map_err(CliError::usage)?;
    let eq1 = compare_project_vs_methods(&project_aggregate, &method_aggregates.values().cloned().collect::<Vec<_>>());

    // method totals per run index, for pairing
    let mut method_totals: BTreeMap<usize, PerComponent<f64>> = BTreeMap::new();
    for run in &method_runs {
        if let Some(r) = sum_results(run.usable()) {
            method_totals.insert(run.manifest.run_index as usize, r.net());
        }
    }
    let wilcoxon_project_greater = PerComponent::from_fn(|c| {
        let (a, b): (Vec<f64>, Vec<f64>) = per_run_project
            .iter()
            .filter_map(|r| {
                let m = method_totals.get(&r.repetition?)?;
                Some((r.components.get(c).net_j, *m.get(c)))
            })
            .unzip();
        wilcoxon_signed_rank(&a, &b, Alternative::Greater).into()
    });
    let method_records: Vec<&MeasurementRecord> = method_runs.iter().flat_map(|r| r.usable()).collect();
    let times: Vec<f64> = method_records.iter().map(|r| r.execution_time_s).collect();
    let pearson_energy_time = PerComponent::from_fn(|c| {
        let energy: Vec<f64> = method_records.iter().map(|r| r.components.get(c).net_j.unwrap_or_default()).collect();
        pearson(&energy, &times).into()
    });
    Ok(Ok(ProjectRq1 {
        project: p.id.clone(),
        passed: eq1.passed(),
        eq1,
        project_aggregate,
        method_aggregates,
        wilcoxon_project_greater,
        pearson_energy_time,
        project_counts: counts(&project_runs),
        method_counts: counts(&method_runs),
    }))
}

pub fn rq1(dir: &Path) -> CliResult<Rq1Report> {
    let mut report = Rq1Report { projects: Vec::new(), skipped: Vec::new() };
    for p in find_projects(dir)? {
        match rq1_project(&p)? {
            Ok(r) => report.projects.push(r),
            Err(why) => {
                log::warn!("{why}");
                report.skipped.push(why);
            }
        }
    }
    if report.projects.is_empty() {
        return Err(CliError::Usage(format!("nothing to compare under {}: {}", dir.display(), report.skipped.join("; "))));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionSweep {
    pub method: String,
    pub table: SweepTable,
    pub correlation: PerComponent<TestOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectRq2 {
    pub project: String,
    pub functions: Vec<FunctionSweep>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Rq2Report {
    pub projects: Vec<ProjectRq2>,
}

/// One observation per run and function: that run's totals for the function.
pub fn sweep_observations(runs: &[RunData]) -> BTreeMap<String, Vec<SweepObservation>> {
    let mut out: BTreeMap<String, Vec<SweepObservation>> = BTreeMap::new();
    for run in runs {
        let Some(fraction) = run.manifest.fraction else { continue };
        let mut names: Vec<&str> = run.usable().map(|r| r.function_to_run.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        for name in names {
            let records: Vec<&MeasurementRecord> = run.usable().filter(|r| r.function_to_run == name).collect();
            let Some(total) = sum_results(records.iter().copied()) else { continue };
            let args_bytes = records.iter().map(|r| r.args_sizes.total_bytes).sum::<Option<u64>>();
            out.entry(name.to_string()).or_default().push(SweepObservation {
                fraction,
                net_j: total.net(),
                duration_s: total.duration_s,
                args_bytes,
            });
        }
    }
    out
}

pub const SWEEP_CSV_HEADER: [&str; 7] = ["method", "fraction", "cpu_net_j", "ram_net_j", "gpu_net_j", "duration_s", "args_bytes"];

pub fn write_sweep_csv(path: &Path, functions: &[FunctionSweep]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Environment(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Environment(format!("{}: {e}", path.display()));
    w.write_record(SWEEP_CSV_HEADER).map_err(io)?;
    for f in functions {
        for row in &f.table.rows {
            let e = row.mean_net_j;
            w.write_record([
                f.method.clone(),
                row.fraction.to_string(),
                e.cpu.to_string(),
                e.ram.to_string(),
                e.gpu.to_string(),
                row.mean_duration_s.to_string(),
                row.args_total_bytes.map(|b| b.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| CliError::Environment(format!("{}: {e}", path.display())))
}

/// Sweeps every project; each gets `rq2_sweep.csv` in its directory.
pub fn rq2(dir: &Path) -> CliResult<Rq2Report> {
    let mut projects = Vec::new();
    for p in find_projects(dir)? {
        let runs = load_runs(&p.path.join(PatchLevel::Method.as_str()))?;
        let functions: Vec<FunctionSweep> = sweep_observations(&runs)
            .into_iter()
            .map(|(method, obs)| {
                let table = data_size_sweep(&obs);
                let correlation = PerComponent::from_fn(|c| sweep_correlation(&table, c).into());
                FunctionSweep { method, table, correlation }
            })
            .collect();
        if functions.is_empty() {
            log::warn!("{}: no sweep runs", p.id);
            continue;
        }
        write_sweep_csv(&p.path.join("rq2_sweep.csv"), &functions)?;
        projects.push(ProjectRq2 { project: p.id, functions });
    }
    if projects.is_empty() {
        return Err(CliError::Usage(format!("no fraction sweeps under {}; use `run --sweep`", dir.display())));
    }
    Ok(Rq2Report { projects })
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSummary {
    pub counts: RecordCounts,
    pub functions: BTreeMap<String, AggregateResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectSummary {
    pub project: String,
    pub modes: BTreeMap<String, ModeSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub projects: Vec<ProjectSummary>,
}

pub fn summary(dir: &Path) -> CliResult<Summary> {
    let mut projects = Vec::new();
    for p in find_projects(dir)? {
        let mut modes = BTreeMap::new();
        for mode in [PatchLevel::Method, PatchLevel::Project] {
            let path = p.path.join(mode.as_str());
            if !path.is_dir() {
                continue;
            }
            let runs = load_runs(&path)?;
            let all: Vec<&RunData> = runs.iter().collect();
            let functions = per_function_runs(&unswept(&runs))
                .into_iter()
                .filter_map(|(name, results)| aggregate_repetitions(&results).ok().map(|a| (name, a)))
                .collect();
            modes.insert(mode.as_str().to_string(), ModeSummary { counts: counts(&all), functions });
        }
        projects.push(ProjectSummary { project: p.id, modes });
    }
    Ok(Summary { projects })
}

/// Verdict line per component for terminal output.
pub fn eq1_lines(report: &Rq1Report) -> Vec<String> {
    let mut out = Vec::new();
    for p in &report.projects {
        for c in Component::ALL {
            out.push(format!(
                "{} {c}: project {:.6} J, methods {:.6} J, {}",
                p.project,
                p.eq1.project_j.get(c),
                p.eq1.methods_j.get(c),
                if p.eq1.verdict.get(c) == &finejoule_core::analysis::Verdict::Pass { "pass" } else { "FAIL" }
            ));
        }
    }
    out
}
