//! Accuracy checks of the instrumenter against an annotated corpus.
//!
//! Fixtures mark every eligible call on its line with
//! `# expect: <qualified name>` (several separated by `|`) and known misses
//! with `# miss: <why>`. Each fixture is patched at both levels; the output
//! is compared with golden files, re-parsed, and run next to the original
//! under the stub shim.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::notebook::notebook_to_script;
use crate::patch::{breakpoint_pairs, patch_method_level, patch_project_level, Level};
use crate::python::parse_module;
use crate::scan::{scan_module, Framework};
use crate::verify::{behavior_diff, verify_patch, BehaviorOptions};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations {
    /// (line, qualified name), one entry per expected call.
    pub expected: Vec<(usize, String)>,
    /// (line, reason)
    pub misses: Vec<(usize, String)>,
}

pub fn parse_annotations(source: &str) -> Annotations {
    let mut a = Annotations::default();
    for (i, line) in source.lines().enumerate() {
        if let Some(rest) = line.split_once("# expect:").map(|(_, r)| r) {
            a.expected.extend(rest.split('|').map(|n| (i + 1, n.trim().to_string())));
        } else if let Some(rest) = line.split_once("# miss:").map(|(_, r)| r) {
            a.misses.push((i + 1, rest.trim().to_string()));
        }
    }
    a
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCheck {
    /// `None` when no golden file exists yet.
    pub golden_match: Option<bool>,
    pub parses: bool,
    pub paired: bool,
    /// `None` when behavior checks were not run.
    pub behavior_equivalent: Option<bool>,
    pub pairs_completed: usize,
}

impl LevelCheck {
    pub fn ok(&self) -> bool {
        self.golden_match == Some(true) && self.parses && self.paired && self.behavior_equivalent != Some(false)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub name: String,
    pub eligible: usize,
    pub found: usize,
    /// Patched sites not annotated as expected, as `line: name`.
    pub unexpected: Vec<String>,
    /// Expected calls that were not patched.
    pub missed: Vec<String>,
    /// Annotated misses that the instrumenter did patch after all.
    pub recovered: Vec<String>,
    pub method: LevelCheck,
    pub project: LevelCheck,
}

impl FixtureReport {
    /// Sites agree with annotations and both levels pass every check.
    pub fn ok(&self) -> bool {
        self.unexpected.is_empty() && self.missed.is_empty() && self.recovered.is_empty() && self.method.ok() && self.project.ok()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub fixtures: Vec<FixtureReport>,
}

impl CorpusReport {
    pub fn eligible(&self) -> usize {
        self.fixtures.iter().map(|f| f.eligible).sum()
    }

    pub fn found(&self) -> usize {
        self.fixtures.iter().map(|f| f.found).sum()
    }

    pub fn completeness(&self) -> f64 {
        self.found() as f64 / self.eligible() as f64
    }

    /// Share of fixtures whose patches match the golden files at both levels.
    pub fn golden_correctness(&self) -> f64 {
        let good = self
            .fixtures
            .iter()
            .filter(|f| f.method.golden_match == Some(true) && f.project.golden_match == Some(true))
            .count();
        good as f64 / self.fixtures.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub framework: Framework,
    pub golden_dir: PathBuf,
    /// Write golden files instead of comparing.
    pub bless: bool,
    /// Skip behavior checks when `None`.
    pub behavior: Option<BehaviorOptions>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Fixture { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.to_path_buf(), source }
}

/// Script text of a fixture; notebooks are converted first.
pub fn fixture_source(path: &Path) -> Result<String, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    if path.extension().is_some_and(|e| e == "ipynb") {
        let nb = notebook_to_script(&text).map_err(|e| CorpusError::Fixture { path: path.into(), message: e.to_string() })?;
        return Ok(nb.script);
    }
    Ok(text)
}

fn golden_check(path: &Path, actual: &str, bless: bool) -> Result<Option<bool>, CorpusError> {
    if bless {
        std::fs::write(path, actual).map_err(io_err(path))?;
        return Ok(Some(true));
    }
    match std::fs::read(path) {
        Ok(bytes) => Ok(Some(bytes == actual.as_bytes())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn check_level(
    original: &str,
    patched: &str,
    golden: &Path,
    opts: &CorpusOptions,
) -> Result<LevelCheck, CorpusError> {
    let mut c = LevelCheck {
        golden_match: golden_check(golden, patched, opts.bless)?,
        parses: verify_patch(patched).is_valid(),
        ..LevelCheck::default()
    };
    c.paired = matches!(breakpoint_pairs(patched), Ok(Some(_)));
    if let Some(b) = &opts.behavior {
        let report = behavior_diff(original, patched, b).map_err(io_err(golden))?;
        c.behavior_equivalent = Some(report.equivalent() && !report.patched.stderr.contains("unmatched breakpoint"));
        c.pairs_completed = report.pairs_completed();
    }
    Ok(c)
}

pub fn evaluate_fixture(path: &Path, opts: &CorpusOptions) -> Result<FixtureReport, CorpusError> {
    let source = fixture_source(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("fixture").to_string();
    let module = parse_module(&source).map_err(|e| CorpusError::Fixture { path: path.into(), message: e.to_string() })?;
    let scan = scan_module(&source, &module, &opts.framework);
    let ann = parse_annotations(&source);

    let mut patched_sites: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for s in scan.sites.iter().filter(|s| s.skip_reason().is_none()) {
        patched_sites.entry(s.line).or_default().push(s.qualified_name.clone());
    }
    let mut report = FixtureReport { name: stem.clone(), eligible: ann.expected.len() + ann.misses.len(), ..Default::default() };
    let mut expected: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (line, name) in &ann.expected {
        expected.entry(*line).or_default().push(name.clone());
    }
    for (line, names) in &expected {
        let mut got = patched_sites.remove(line).unwrap_or_default();
        for n in names {
            match got.iter().position(|g| g == n) {
                Some(i) => {
                    got.remove(i);
                    report.found += 1;
                }
                None => report.missed.push(format!("{line}: {n}")),
            }
        }
        report.unexpected.extend(got.into_iter().map(|g| format!("{line}: {g}")));
    }
    for (line, why) in &ann.misses {
        if let Some(got) = patched_sites.remove(line) {
            report.recovered.extend(got.into_iter().map(|g| format!("{line}: {g} ({why})")));
        }
    }
    for (line, got) in patched_sites {
        report.unexpected.extend(got.into_iter().map(|g| format!("{line}: {g}")));
    }

    let experiment = format!("experiments/{stem}");
    let fail = |e: crate::python::SyntaxError| CorpusError::Fixture { path: path.into(), message: e.to_string() };
    let method = patch_method_level(&source, &scan.sites, &experiment).map_err(fail)?;
    let project = patch_project_level(&source, &experiment, &stem).map_err(fail)?;
    for (level, patched, slot) in [(Level::Method, &method.source, &mut report.method), (Level::Project, &project.source, &mut report.project)] {
        let suffix = match level {
            Level::Method => "method",
            Level::Project => "project",
        };
        let golden = opts.golden_dir.join(format!("{stem}.{suffix}.py"));
        *slot = check_level(&source, patched, &golden, opts)?;
    }
    Ok(report)
}

/// Evaluates every `.py` and `.ipynb` fixture directly inside `dir`, sorted
/// by file name.
pub fn evaluate_corpus(dir: &Path, opts: &CorpusOptions) -> Result<CorpusReport, CorpusError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "py" || e == "ipynb"))
        .collect();
    paths.sort();
    let fixtures = paths.iter().map(|p| evaluate_fixture(p, opts)).collect::<Result<_, _>>()?;
    Ok(CorpusReport { fixtures })
}
