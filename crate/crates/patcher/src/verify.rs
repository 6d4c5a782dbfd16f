//! Checks on generated patches: they must parse, and with a no-op shim they
//! must behave like the original script.

use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::python::parse_module;

/// Breakpoint module used for behavior checks. It writes nothing to stdout
/// and exits with status 97 if a pair is mismatched.
pub const STUB_SHIM: &str = r#""""Inert breakpoints for behavior checks."""
import sys

_pairs = 0


def before_execution(experiment_file_path, function_to_run):
    return (function_to_run,)


def after_execution(start_times, experiment_file_path, function_to_run,
                    method_object=None, function_args=None, function_kwargs=None):
    global _pairs
    if start_times != (function_to_run,):
        sys.stderr.write("unmatched breakpoint: %r vs %r\n" % (start_times, function_to_run))
        sys.exit(97)
    _pairs += 1
    sys.stderr.write("pair %d %s\n" % (_pairs, function_to_run))
"#;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    /// The error sits on, or right after, an inserted line.
    pub in_insert: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Vec<VerifyError>),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        *self == Verdict::Valid
    }
}

pub fn verify_patch(patched: &str) -> Verdict {
    match parse_module(patched) {
        Ok(_) => Verdict::Valid,
        Err(e) => {
            let lines: Vec<&str> = patched.lines().collect();
            let inserted = |n: usize| n >= 1 && lines.get(n - 1).is_some_and(|l| l.contains("_INSERTED_INTO_SCRIPT"));
            let in_insert = inserted(e.line) || inserted(e.line.saturating_sub(1));
            Verdict::Invalid(vec![VerifyError { line: e.line, column: e.column, message: e.message, in_insert }])
        }
    }
}

#[derive(Debug, Clone)]
pub struct BehaviorOptions {
    pub python: PathBuf,
    /// Extra import roots, e.g. a stub framework package.
    pub pythonpath: Vec<PathBuf>,
    pub timeout: Duration,
}

impl Default for BehaviorOptions {
    fn default() -> Self {
        BehaviorOptions { python: PathBuf::from("python3"), pythonpath: Vec::new(), timeout: Duration::from_secs(60) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    /// `None` when killed by a signal or the timeout.
    pub status: Option<i32>,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorReport {
    pub original: RunOutput,
    pub patched: RunOutput,
}

impl BehaviorReport {
    /// Same exit status and byte-identical stdout.
    pub fn equivalent(&self) -> bool {
        self.original.status == self.patched.status && self.original.stdout == self.patched.stdout
    }

    /// Breakpoint pairs the stub shim saw complete.
    pub fn pairs_completed(&self) -> usize {
        self.patched.stderr.lines().filter(|l| l.starts_with("pair ")).count()
    }
}

fn run(script_dir: &Path, opts: &BehaviorOptions, pythonpath: &str) -> io::Result<RunOutput> {
    let out_path = script_dir.join("stdout");
    let err_path = script_dir.join("stderr");
    let mut child = Command::new(&opts.python)
        .arg("script.py")
        .current_dir(script_dir)
        .env("PYTHONPATH", pythonpath)
        .env("PYTHONHASHSEED", "0")
        .env("PYTHONDONTWRITEBYTECODE", "1")
        .stdin(Stdio::null())
        .stdout(std::fs::File::create(&out_path)?)
        .stderr(std::fs::File::create(&err_path)?)
        .spawn()?;
    let deadline = Instant::now() + opts.timeout;
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break s.code();
        }
        if Instant::now() >= deadline {
            child.kill()?;
            child.wait()?;
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    Ok(RunOutput {
        status,
        stdout: std::fs::read(&out_path)?,
        stderr: String::from_utf8_lossy(&std::fs::read(&err_path)?).into_owned(),
    })
}

/// Runs both versions under the stub shim and returns their outputs.
pub fn behavior_diff(original: &str, patched: &str, opts: &BehaviorOptions) -> io::Result<BehaviorReport> {
    let dir = tempfile::tempdir()?;
    let shim_dir = dir.path().join("shim");
    std::fs::create_dir(&shim_dir)?;
    std::fs::write(shim_dir.join(format!("{}.py", crate::patch::SHIM_MODULE)), STUB_SHIM)?;
    let paths = std::iter::once(shim_dir.clone()).chain(opts.pythonpath.iter().cloned());
    let pythonpath = std::env::join_paths(paths).map_err(io::Error::other)?;
    let pythonpath = pythonpath.to_string_lossy().into_owned();
    let mut outputs = Vec::new();
    for (name, src) in [("original", original), ("patched", patched)] {
        let d = dir.path().join(name);
        std::fs::create_dir(&d)?;
        std::fs::write(d.join("script.py"), src)?;
        outputs.push(run(&d, opts, &pythonpath)?);
    }
    let patched = outputs.pop().expect("two runs");
    let original = outputs.pop().expect("two runs");
    Ok(BehaviorReport { original, patched })
}
