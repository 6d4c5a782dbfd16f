//! Source rewriting: breakpoint pairs around call sites or the whole script.
//!
//! Inserts are spliced into the original text; nothing is re-printed from the
//! tree, so untouched code (comments, formatting, line endings) stays
//! byte-identical.

use serde::{Deserialize, Serialize};

use crate::python::{parse_module, SyntaxError};
use crate::scan::{scan_module, CallSite, Framework, Placement, SkipReason};
use crate::tree::{ArgKind, Expr, ExprKind, LineIndex, Stmt, StmtKind};

pub const SHIM_MODULE: &str = "finejoule_shim";
pub const BEFORE_FN: &str = "before_execution_INSERTED_INTO_SCRIPT";
pub const AFTER_FN: &str = "after_execution_INSERTED_INTO_SCRIPT";
pub const START_VAR: &str = "start_times_INSERTED_INTO_SCRIPT";
pub const PATH_VAR: &str = "EXPERIMENT_FILE_PATH";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSite {
    pub line: usize,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchReport {
    pub eligible: usize,
    pub patched: usize,
    pub skipped: Vec<SkippedSite>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl PatchReport {
    /// Patched over eligible; `None` when nothing was eligible.
    pub fn completeness(&self) -> Option<f64> {
        (self.eligible > 0).then(|| self.patched as f64 / self.eligible as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchedScript {
    pub source: String,
    pub report: PatchReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Method,
    Project,
}

/// Single-quoted Python string literal.
pub fn py_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => out.push_str(&format!("\\U{:08x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Inverse of [`py_str`] for literals this module produced.
pub fn py_str_value(literal: &str) -> Option<String> {
    let inner = literal.strip_prefix('\'')?.strip_suffix('\'')?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            't' => out.push('\t'),
            'U' => {
                let hex: String = chars.by_ref().take(8).collect();
                out.push(char::from_u32(u32::from_str_radix(&hex, 16).ok()?)?);
            }
            other => out.push(other),
        }
    }
    Some(out)
}

fn newline(source: &str) -> &'static str {
    if source.contains("\r\n") {
        "\r\n"
    } else {
        "\n"
    }
}

fn header(experiment_path: &str, nl: &str) -> String {
    format!(
        "from {SHIM_MODULE} import before_execution as {BEFORE_FN}, after_execution as {AFTER_FN}{nl}{PATH_VAR} = {}{nl}",
        py_str(experiment_path)
    )
}

fn before_stmt(function_to_run: &str) -> String {
    format!("{START_VAR} = {BEFORE_FN}(experiment_file_path={PATH_VAR}, function_to_run={})", py_str(function_to_run))
}

fn after_stmt(function_to_run: &str, method_object: &str, args: &str, kwargs: &str) -> String {
    format!(
        "{AFTER_FN}(start_times={START_VAR}, experiment_file_path={PATH_VAR}, function_to_run={}, method_object={method_object}, function_args={args}, function_kwargs={kwargs})",
        py_str(function_to_run)
    )
}

fn site_after(site: &CallSite) -> String {
    let mut args = Vec::new();
    let mut kwargs = Vec::new();
    for a in &site.args {
        let src = &a.source;
        match (&a.kind, a.reevaluable) {
            (ArgKind::Positional, true) => args.push(src.clone()),
            (ArgKind::Star, true) => args.push(format!("*{src}")),
            (ArgKind::Positional | ArgKind::Star, false) => args.push("None".into()),
            (ArgKind::Keyword(k), true) => kwargs.push(format!("{}: {src}", py_str(k))),
            (ArgKind::Keyword(k), false) => kwargs.push(format!("{}: None", py_str(k))),
            (ArgKind::DoubleStar, true) => kwargs.push(format!("**{src}")),
            (ArgKind::DoubleStar, false) => {}
        }
    }
    after_stmt(
        &site.qualified_name,
        site.receiver.as_deref().unwrap_or("None"),
        &format!("[{}]", args.join(", ")),
        &format!("{{{}}}", kwargs.join(", ")),
    )
}

/// Ordering of inserts sharing an offset: an after-insert closes the previous
/// line, then the header, then the next before-insert; the project-level
/// closing insert comes last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    After,
    Header,
    Before,
    End,
}

fn splice(source: &str, mut edits: Vec<(usize, Slot, String)>) -> String {
    edits.sort_by_key(|(at, slot, _)| (*at, *slot));
    let mut out = String::with_capacity(source.len() + edits.iter().map(|e| e.2.len()).sum::<usize>());
    let mut pos = 0;
    for (at, _, text) in edits {
        out.push_str(&source[pos..at]);
        out.push_str(&text);
        pos = at;
    }
    out.push_str(&source[pos..]);
    out
}

fn header_edit(source: &str, at: usize, experiment_path: &str) -> (usize, Slot, String) {
    let nl = newline(source);
    let lead = if at == source.len() && !source.is_empty() && !source.ends_with('\n') { nl } else { "" };
    (at, Slot::Header, format!("{lead}{}", header(experiment_path, nl)))
}

/// Before/after edits for one statement. A statement alone on its lines gets
/// inserts on their own lines at its indentation; otherwise they are joined
/// inline with `;`.
fn statement_edits(source: &str, stmt: &std::ops::Range<usize>, before: String, after: String) -> [(usize, Slot, String); 2] {
    let nl = newline(source);
    let line_start = source[..stmt.start].rfind('\n').map_or(0, |i| i + 1);
    let prefix = &source[line_start..stmt.start];
    let line_end = source[stmt.end..].find('\n').map_or(source.len(), |i| stmt.end + i);
    let content_end = if line_end > stmt.end && source.as_bytes()[line_end - 1] == b'\r' { line_end - 1 } else { line_end };
    let rest = source[stmt.end..content_end].trim();
    let rest = rest.strip_prefix(';').map_or(rest, str::trim_start);
    if prefix.chars().all(char::is_whitespace) && (rest.is_empty() || rest.starts_with('#')) {
        [
            (line_start, Slot::Before, format!("{prefix}{before}{nl}")),
            (content_end, Slot::After, format!("{nl}{prefix}{after}")),
        ]
    } else {
        [(stmt.start, Slot::Before, format!("{before}; ")), (stmt.end, Slot::After, format!("; {after}"))]
    }
}

/// Wraps every patchable site in a breakpoint pair. Returns the source
/// unchanged when no site is patchable.
pub fn patch_method_level(source: &str, sites: &[CallSite], experiment_path: &str) -> Result<PatchedScript, SyntaxError> {
    let module = parse_module(source)?;
    let mut edits = Vec::new();
    let mut report = PatchReport { eligible: sites.len(), ..PatchReport::default() };
    for site in sites {
        match &site.placement {
            Placement::Statement(stmt) => {
                edits.extend(statement_edits(source, stmt, before_stmt(&site.qualified_name), site_after(site)));
                report.patched += 1;
            }
            Placement::Skipped(reason) => report.skipped.push(SkippedSite { line: site.line, reason: *reason }),
        }
    }
    report.skipped.sort_by_key(|s| s.line);
    if report.patched == 0 {
        return Ok(PatchedScript { source: source.to_string(), report });
    }
    edits.push(header_edit(source, module.header_at, experiment_path));
    Ok(PatchedScript { source: splice(source, edits), report })
}

/// Scans and patches in one step, carrying scan warnings into the report.
pub fn patch_source(source: &str, framework: &Framework, experiment_path: &str) -> Result<PatchedScript, SyntaxError> {
    let module = parse_module(source)?;
    let scan = scan_module(source, &module, framework);
    let mut patched = patch_method_level(source, &scan.sites, experiment_path)?;
    patched.report.warnings = scan.warnings;
    Ok(patched)
}

const EXIT_CALLS: [&str; 4] = ["exit", "quit", "sys.exit", "os._exit"];

fn early_exits(stmts: &[Stmt], lines: &LineIndex, out: &mut Vec<(usize, String)>) {
    fn in_expr(e: &Expr, lines: &LineIndex, out: &mut Vec<(usize, String)>) {
        if let ExprKind::Call { func, .. } = &e.kind {
            if let Some(name) = func.dotted().filter(|n| EXIT_CALLS.contains(&n.as_str())) {
                out.push((lines.line(e.span.start), name));
            }
        }
        e.children().into_iter().for_each(|c| in_expr(c, lines, out));
    }
    for s in stmts {
        match &s.kind {
            StmtKind::Exit(exprs) => {
                for e in exprs {
                    let raised = match &e.kind {
                        ExprKind::Call { func, .. } => func.dotted(),
                        _ => e.dotted(),
                    };
                    if raised.as_deref() == Some("SystemExit") {
                        out.push((lines.line(s.span.start), "raise SystemExit".into()));
                    } else {
                        in_expr(e, lines, out);
                    }
                }
            }
            StmtKind::Assign { targets, value, .. } => {
                value.iter().chain(targets).for_each(|e| in_expr(e, lines, out));
            }
            StmtKind::Expr(e) => in_expr(e, lines, out),
            StmtKind::Other(exprs) => exprs.iter().for_each(|e| in_expr(e, lines, out)),
            StmtKind::Def { header, body, .. } | StmtKind::Class { header, body, .. } => {
                header.iter().for_each(|e| in_expr(e, lines, out));
                early_exits(body, lines, out);
            }
            StmtKind::Compound { header, bodies, .. } => {
                header.iter().for_each(|e| in_expr(e, lines, out));
                bodies.iter().for_each(|b| early_exits(b, lines, out));
            }
            StmtKind::Import(_) | StmtKind::StarImport(_) | StmtKind::Unbind(_) => {}
        }
    }
}

/// One breakpoint pair around the whole script. The after-breakpoint sits at
/// the textual end, so early exits skip it; those are reported as warnings.
pub fn patch_project_level(source: &str, experiment_path: &str, script_id: &str) -> Result<PatchedScript, SyntaxError> {
    let module = parse_module(source)?;
    let nl = newline(source);
    let (at, _, head) = header_edit(source, module.header_at, experiment_path);
    let mut edits = vec![(at, Slot::Header, format!("{head}{}{nl}", before_stmt(script_id)))];
    let lead = if source.ends_with('\n') || at == source.len() { "" } else { nl };
    edits.push((source.len(), Slot::End, format!("{lead}{}{nl}", after_stmt(script_id, "None", "None", "None"))));
    let lines = LineIndex::new(source);
    let mut exits = Vec::new();
    early_exits(&module.body, &lines, &mut exits);
    let warnings = exits
        .into_iter()
        .map(|(line, how)| format!("line {line}: early exit via `{how}` skips the after-breakpoint"))
        .collect();
    let report = PatchReport { eligible: 1, patched: 1, skipped: Vec::new(), warnings };
    Ok(PatchedScript { source: splice(source, edits), report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BreakpointKind {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Breakpoint {
    pub kind: BreakpointKind,
    pub function_to_run: String,
    pub line: usize,
}

/// Inserted breakpoints of a patched script in source order.
pub fn breakpoints(patched: &str) -> Result<Vec<Breakpoint>, SyntaxError> {
    fn visit(stmts: &[Stmt], source: &str, lines: &LineIndex, out: &mut Vec<Breakpoint>) {
        for s in stmts {
            let call = match &s.kind {
                StmtKind::Assign { value: Some(v), .. } => Some(v),
                StmtKind::Expr(e) => Some(e),
                StmtKind::Def { body, .. } | StmtKind::Class { body, .. } => {
                    visit(body, source, lines, out);
                    None
                }
                StmtKind::Compound { bodies, .. } => {
                    bodies.iter().for_each(|b| visit(b, source, lines, out));
                    None
                }
                _ => None,
            };
            let Some(Expr { kind: ExprKind::Call { func, args }, .. }) = call else { continue };
            let kind = match func.dotted().as_deref() {
                Some(BEFORE_FN) => BreakpointKind::Before,
                Some(AFTER_FN) => BreakpointKind::After,
                _ => continue,
            };
            let name = args
                .iter()
                .find(|a| a.kind == ArgKind::Keyword("function_to_run".into()))
                .and_then(|a| py_str_value(&source[a.value.span.clone()]))
                .unwrap_or_default();
            out.push(Breakpoint { kind, function_to_run: name, line: lines.line(s.span.start) });
        }
    }
    let module = parse_module(patched)?;
    let mut out = Vec::new();
    visit(&module.body, patched, &LineIndex::new(patched), &mut out);
    out.sort_by_key(|b| b.line);
    Ok(out)
}

/// Before/after names paired in order; `None` if any breakpoint is unmatched.
pub fn breakpoint_pairs(patched: &str) -> Result<Option<Vec<String>>, SyntaxError> {
    let bps = breakpoints(patched)?;
    if bps.len() % 2 != 0 {
        return Ok(None);
    }
    let mut names = Vec::new();
    for pair in bps.chunks(2) {
        let (b, a) = (&pair[0], &pair[1]);
        if b.kind != BreakpointKind::Before || a.kind != BreakpointKind::After || b.function_to_run != a.function_to_run {
            return Ok(None);
        }
        names.push(b.function_to_run.clone());
    }
    Ok(Some(names))
}
