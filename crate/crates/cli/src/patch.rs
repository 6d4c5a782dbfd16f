//! `patch`: writes `<script>.<level>.patched` and a JSON report beside it.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use finejoule_patcher::patch::PatchReport;
use finejoule_patcher::validation::fixture_source;
use finejoule_patcher::{patch_project_level, patch_source, verify_patch, Framework, Verdict};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchLevel {
    Method,
    Project,
}

impl PatchLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            PatchLevel::Method => "method",
            PatchLevel::Project => "project",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchOutcome {
    pub script: PathBuf,
    pub output: PathBuf,
    pub level: PatchLevel,
    pub framework: String,
    pub script_id: String,
    pub experiment_file: String,
    #[serde(flatten)]
    pub report: PatchReport,
    pub completeness: Option<f64>,
    pub valid: bool,
    pub syntax_errors: Vec<String>,
}

/// Name used for project-level records: the script's file stem.
pub fn script_id(script: &Path) -> String {
    script.file_stem().and_then(|s| s.to_str()).unwrap_or("script").to_string()
}

pub fn output_path(script: &Path, level: PatchLevel) -> PathBuf {
    let mut s = script.as_os_str().to_owned();
    s.push(format!(".{}.patched", level.as_str()));
    PathBuf::from(s)
}

fn report_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".report.json");
    PathBuf::from(s)
}

pub fn patch_file(
    script: &Path,
    level: PatchLevel,
    framework: &Framework,
    experiment_file: Option<&str>,
) -> CliResult<PatchOutcome> {
    let source = fixture_source(script).map_err(CliError::usage)?;
    let id = script_id(script);
    let experiment_file = experiment_file.map_or_else(|| format!("experiments/{id}/records.jsonl"), str::to_string);
    let patched = match level {
        PatchLevel::Method => patch_source(&source, framework, &experiment_file),
        PatchLevel::Project => patch_project_level(&source, &experiment_file, &id),
    }
    .map_err(|e| CliError::Usage(format!("{}: {e}", script.display())))?;
    let syntax_errors = match verify_patch(&patched.source) {
        Verdict::Valid => Vec::new(),
        Verdict::Invalid(errors) => errors
            .iter()
            .map(|e| format!("line {}:{}: {}{}", e.line, e.column, e.message, if e.in_insert { " (inserted code)" } else { "" }))
            .collect(),
    };
    let output = output_path(script, level);
    std::fs::write(&output, &patched.source).map_err(|e| CliError::Environment(format!("{}: {e}", output.display())))?;
    let outcome = PatchOutcome {
        script: script.to_path_buf(),
        output: output.clone(),
        level,
        framework: framework.name().to_string(),
        script_id: id,
        experiment_file,
        completeness: patched.report.completeness(),
        report: patched.report,
        valid: syntax_errors.is_empty(),
        syntax_errors,
    };
    let report = report_path(&output);
    let json = serde_json::to_string_pretty(&outcome).expect("report serializes");
    std::fs::write(&report, json + "\n").map_err(|e| CliError::Environment(format!("{}: {e}", report.display())))?;
    for w in &outcome.report.warnings {
        log::warn!("{}: {w}", script.display());
    }
    if !outcome.valid {
        return Err(CliError::Usage(format!(
            "{}: patched script does not parse: {}",
            output.display(),
            outcome.syntax_errors.join("; ")
        )));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outputs_sit_beside_the_script() {
        let p = Path::new("dir/train.py");
        assert_eq!(output_path(p, PatchLevel::Project), Path::new("dir/train.py.project.patched"));
        assert_eq!(report_path(&output_path(p, PatchLevel::Method)), Path::new("dir/train.py.method.patched.report.json"));
        assert_eq!(script_id(p), "train");
    }

    #[test]
    fn method_patch_writes_report() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("fit.py");
        std::fs::write(&script, "import tensorflow as tf\nm = tf.keras.Sequential()\nm.fit(1)\n").unwrap();
        let out = patch_file(&script, PatchLevel::Method, &Framework::default(), None).unwrap();
        assert_eq!((out.report.eligible, out.report.patched), (2, 2));
        assert_eq!(out.experiment_file, "experiments/fit/records.jsonl");
        let report: serde_json::Value =
            serde_json::from_slice(&std::fs::read(report_path(&out.output)).unwrap()).unwrap();
        assert_eq!(report["level"], "method");
        assert_eq!(report["completeness"], 1.0);
        let text = std::fs::read_to_string(&out.output).unwrap();
        assert_eq!(text.matches("before_execution_INSERTED_INTO_SCRIPT(").count(), 2);
    }

    #[test]
    fn unparsable_script_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("bad.py");
        std::fs::write(&script, "def (:\n").unwrap();
        let err = patch_file(&script, PatchLevel::Project, &Framework::default(), None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
