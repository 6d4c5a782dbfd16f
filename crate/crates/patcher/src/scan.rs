//! Binding resolution and call-site discovery.
//!
//! Statements are walked in source order with a flat, flow-insensitive scope.
//! Function bodies are deferred until the enclosing block is complete and see
//! its final bindings, which is how module-level objects used inside helper
//! functions resolve. Objects returned from user functions are not followed.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::python::{parse_module, SyntaxError};
use crate::tree::{ArgKind, Expr, ExprKind, ImportKind, LineIndex, Module, Span, Stmt, StmtKind};

/// Dotted module name whose API calls are instrumented.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Framework(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid framework name {0:?}")]
pub struct InvalidFramework(pub String);

impl Framework {
    pub fn new(dotted: &str) -> Result<Self, InvalidFramework> {
        let ok = !dotted.is_empty()
            && dotted.split('.').all(|part| {
                let mut chars = part.chars();
                chars.next().is_some_and(|c| c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
            });
        if ok {
            Ok(Framework(dotted.to_string()))
        } else {
            Err(InvalidFramework(dotted.to_string()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// `path` is the framework itself or lies below it.
    pub fn matches(&self, path: &str) -> bool {
        path == self.0 || path.strip_prefix(self.0.as_str()).is_some_and(|rest| rest.starts_with('.'))
    }

    /// `path` may lead to the framework: it matches, or is an ancestor package.
    fn related(&self, path: &str) -> bool {
        self.matches(path) || self.0.strip_prefix(path).is_some_and(|rest| rest.starts_with('.'))
    }
}

impl Default for Framework {
    fn default() -> Self {
        Framework("tensorflow".into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportBinding {
    pub module_path: String,
    pub local_alias: String,
    pub kind: ImportKind,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectOrigin {
    Constructor,
    Subclass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackedObject {
    pub name: String,
    pub origin: ObjectOrigin,
    /// API path the object's methods are reported under.
    pub qualified_name: String,
    pub line: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// Inside the arguments or receiver of another instrumented call.
    NestedCall,
    /// The statement holds more than one instrumented call.
    MultipleCalls,
    /// `return`/`raise`: no place for the after-breakpoint.
    ControlTransfer,
    /// Loop, branch, `with`, decorator or default-value expression.
    HeaderExpression,
    /// Lambda or comprehension body.
    DeferredScope,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::NestedCall => "nested-call",
            SkipReason::MultipleCalls => "multiple-calls",
            SkipReason::ControlTransfer => "control-transfer",
            SkipReason::HeaderExpression => "header-expression",
            SkipReason::DeferredScope => "deferred-scope",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForwardedArg {
    pub kind: ArgKind,
    pub source: String,
    /// False when evaluating the expression a second time could change
    /// behavior; such arguments are forwarded as `None`.
    pub reevaluable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    /// Patchable; the span is the enclosing statement.
    Statement(Span),
    Skipped(SkipReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub line: usize,
    pub column: usize,
    pub qualified_name: String,
    /// Source text of the receiving object, the `method_object`.
    pub receiver: Option<String>,
    pub args: Vec<ForwardedArg>,
    /// Assignment target text when the statement stores the result.
    pub target: Option<String>,
    pub call_span: Span,
    pub placement: Placement,
}

impl CallSite {
    pub fn skip_reason(&self) -> Option<SkipReason> {
        match self.placement {
            Placement::Skipped(r) => Some(r),
            Placement::Statement(_) => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scan {
    pub bindings: Vec<ImportBinding>,
    pub tracked: Vec<TrackedObject>,
    pub sites: Vec<CallSite>,
    pub warnings: Vec<String>,
}

pub fn scan(source: &str, framework: &Framework) -> Result<Scan, SyntaxError> {
    let module = parse_module(source)?;
    Ok(scan_module(source, &module, framework))
}

pub fn collect_bindings(source: &str, framework: &Framework) -> Result<(Vec<ImportBinding>, Vec<TrackedObject>), SyntaxError> {
    let s = scan(source, framework)?;
    Ok((s.bindings, s.tracked))
}

pub fn find_call_sites(source: &str, framework: &Framework) -> Result<Vec<CallSite>, SyntaxError> {
    Ok(scan(source, framework)?.sites)
}

pub fn scan_module(source: &str, module: &Module, framework: &Framework) -> Scan {
    let mut w = Walker { source, lines: LineIndex::new(source), fw: framework, record: true, out: Scan::default() };
    let mut scope = Scope::new();
    let mut deferred = Vec::new();
    w.block(&module.body, &mut scope, &mut deferred, None);
    w.run_deferred(deferred, &scope);
    w.out.sites.sort_by_key(|s| s.call_span.start);
    w.out.tracked.sort_by_key(|t| t.line);
    w.out
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Path(String),
    Object(String, ObjectOrigin),
    /// User class deriving from a framework class.
    Class(String),
    /// Bound to something outside the framework; shadows outer bindings.
    Opaque,
}

impl Value {
    fn known(&self) -> Option<Value> {
        (*self != Value::Opaque).then(|| self.clone())
    }
}

type Scope = HashMap<String, Value>;

struct ClassCtx {
    base: Option<String>,
    methods: Vec<String>,
    attrs: RefCell<HashMap<String, Value>>,
}

struct Deferred<'a> {
    def: &'a Stmt,
    class: Option<Rc<ClassCtx>>,
}

struct Walker<'a> {
    source: &'a str,
    lines: LineIndex,
    fw: &'a Framework,
    record: bool,
    out: Scan,
}

fn bind(scope: &mut Scope, key: &str, value: Value) {
    let prefix = format!("{key}.");
    scope.retain(|k, _| !k.starts_with(&prefix));
    scope.insert(key.to_string(), value);
}

/// True when `e` reads a path that the statement rebinds, so evaluating it
/// again afterwards would see the new value.
fn reads_rebound(e: &Expr, rebinds: &[String]) -> bool {
    match e.dotted() {
        Some(p) => rebinds.iter().any(|k| p == *k || p.strip_prefix(k.as_str()).is_some_and(|r| r.starts_with('.'))),
        None => e.children().into_iter().any(|c| reads_rebound(c, rebinds)),
    }
}

fn names_in(e: &Expr, out: &mut Vec<String>) {
    match &e.kind {
        ExprKind::Name(n) => out.push(n.clone()),
        ExprKind::Attribute { .. } => out.extend(e.dotted()),
        ExprKind::Starred(inner) => names_in(inner, out),
        ExprKind::Other(children) => children.iter().for_each(|c| names_in(c, out)),
        _ => {}
    }
}

impl<'a> Walker<'a> {
    fn text(&self, span: &Span) -> &'a str {
        &self.source[span.clone()]
    }

    fn resolve(&self, e: &Expr, scope: &Scope) -> Option<Value> {
        match &e.kind {
            ExprKind::Name(n) => scope.get(n).and_then(Value::known),
            ExprKind::Attribute { value, attr } => {
                if let Some(v) = e.dotted().and_then(|k| scope.get(&k)) {
                    return v.known();
                }
                match self.resolve(value, scope)? {
                    Value::Path(p) | Value::Object(p, _) | Value::Class(p) => Some(Value::Path(format!("{p}.{attr}"))),
                    Value::Opaque => None,
                }
            }
            ExprKind::Call { func, .. } => match self.resolve(func, scope)? {
                Value::Path(p) => Some(Value::Object(p, ObjectOrigin::Constructor)),
                Value::Object(o, _) => Some(Value::Object(format!("{o}.__call__"), ObjectOrigin::Constructor)),
                Value::Class(b) => Some(Value::Object(b, ObjectOrigin::Subclass)),
                Value::Opaque => None,
            },
            ExprKind::Subscript { value, .. } => match self.resolve(value, scope)? {
                Value::Path(p) | Value::Object(p, _) => Some(Value::Object(format!("{p}[]"), ObjectOrigin::Constructor)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Qualified API name when `call` targets the framework.
    fn call_name(&self, func: &Expr, scope: &Scope) -> Option<String> {
        let name = match self.resolve(func, scope)? {
            Value::Path(p) => p,
            Value::Object(o, _) => format!("{o}.__call__"),
            Value::Class(_) | Value::Opaque => return None,
        };
        self.fw.matches(&name).then_some(name)
    }

    fn receiver(&self, func: &Expr, scope: &Scope, rebinds: &[String]) -> Option<String> {
        let obj = match &func.kind {
            _ if matches!(self.resolve(func, scope), Some(Value::Object(..))) => func,
            ExprKind::Attribute { value, .. } => value.as_ref(),
            _ => return None,
        };
        let is_object = matches!(self.resolve(obj, scope), Some(Value::Object(..)));
        (is_object && !obj.has_effects() && !reads_rebound(obj, rebinds)).then(|| self.text(&obj.span).to_string())
    }

    fn site(&self, call: &Expr, name: String, scope: &Scope, target: Option<&str>, rebinds: &[String], placement: Placement) -> CallSite {
        let ExprKind::Call { func, args } = &call.kind else { unreachable!("site on a non-call") };
        let anchor = match &func.kind {
            ExprKind::Attribute { attr, .. } => func.span.end - attr.len(),
            ExprKind::Name(_) => func.span.start,
            _ => call.span.start,
        };
        let (line, column) = self.lines.location(self.source, anchor);
        CallSite {
            line,
            column,
            qualified_name: name,
            receiver: self.receiver(func, scope, rebinds),
            args: args
                .iter()
                .map(|a| ForwardedArg {
                    kind: a.kind.clone(),
                    source: self.text(&a.value.span).to_string(),
                    reevaluable: !a.value.has_effects() && !reads_rebound(&a.value, rebinds),
                })
                .collect(),
            target: target.map(str::to_string),
            call_span: call.span.clone(),
            placement,
        }
    }

    /// Sites in a simple statement; at most one outermost call is patchable.
    fn statement_sites(
        &mut self,
        stmt: &Stmt,
        exprs: &[&Expr],
        scope: &Scope,
        exits: bool,
        target: Option<&str>,
        rebinds: &[String],
    ) {
        if !self.record {
            return;
        }
        let mut candidates = Vec::new();
        let mut skipped = Vec::new();
        for e in exprs {
            self.visit_calls(e, scope, false, false, &mut candidates, &mut skipped);
        }
        let placement = match (candidates.len(), exits) {
            (0, _) => return self.push_skipped(skipped, scope),
            (1, false) => Placement::Statement(stmt.span.clone()),
            (1, true) => Placement::Skipped(SkipReason::ControlTransfer),
            _ => Placement::Skipped(SkipReason::MultipleCalls),
        };
        for (call, name) in candidates {
            let site = self.site(call, name, scope, target, rebinds, placement.clone());
            self.out.sites.push(site);
        }
        self.push_skipped(skipped, scope);
    }

    fn push_skipped(&mut self, skipped: Vec<(&Expr, String, SkipReason)>, scope: &Scope) {
        for (call, name, reason) in skipped {
            let site = self.site(call, name, scope, None, &[], Placement::Skipped(reason));
            self.out.sites.push(site);
        }
    }

    fn visit_calls<'e>(
        &self,
        e: &'e Expr,
        scope: &Scope,
        in_scoped: bool,
        in_candidate: bool,
        candidates: &mut Vec<(&'e Expr, String)>,
        skipped: &mut Vec<(&'e Expr, String, SkipReason)>,
    ) {
        let mut inner_candidate = in_candidate;
        let mut inner_scoped = in_scoped;
        match &e.kind {
            ExprKind::Call { func, .. } => {
                if let Some(name) = self.call_name(func, scope) {
                    if in_scoped {
                        skipped.push((e, name, SkipReason::DeferredScope));
                    } else if in_candidate {
                        skipped.push((e, name, SkipReason::NestedCall));
                    } else {
                        candidates.push((e, name));
                        inner_candidate = true;
                    }
                }
            }
            ExprKind::Scoped { .. } => inner_scoped = true,
            _ => {}
        }
        for c in e.children() {
            self.visit_calls(c, scope, inner_scoped, inner_candidate, candidates, skipped);
        }
    }

    fn header_sites(&mut self, exprs: &[Expr], scope: &Scope) {
        if !self.record {
            return;
        }
        let mut candidates = Vec::new();
        let mut skipped = Vec::new();
        for e in exprs {
            self.visit_calls(e, scope, false, false, &mut candidates, &mut skipped);
        }
        let all = candidates.into_iter().map(|(e, n)| (e, n, SkipReason::HeaderExpression));
        let all: Vec<_> = all.chain(skipped.into_iter().map(|(e, n, _)| (e, n, SkipReason::HeaderExpression))).collect();
        self.push_skipped(all, scope);
    }

    fn bind_target(&mut self, target: &Expr, value: Option<Value>, scope: &mut Scope) {
        match &target.kind {
            ExprKind::Name(_) | ExprKind::Attribute { .. } => {
                let Some(key) = target.dotted() else { return };
                match value {
                    Some(v) => {
                        if let (true, Value::Object(origin, kind)) = (self.record, &v) {
                            self.out.tracked.push(TrackedObject {
                                name: key.clone(),
                                origin: *kind,
                                qualified_name: origin.clone(),
                                line: self.lines.line(target.span.start),
                            });
                        }
                        bind(scope, &key, v);
                    }
                    None => bind(scope, &key, Value::Opaque),
                }
            }
            ExprKind::Subscript { .. } => {}
            _ => {
                // destructured values are data, not tracked objects
                let mut names = Vec::new();
                names_in(target, &mut names);
                for n in names {
                    bind(scope, &n, Value::Opaque);
                }
            }
        }
    }

    fn block(&mut self, stmts: &'a [Stmt], scope: &mut Scope, deferred: &mut Vec<Deferred<'a>>, class: Option<&Rc<ClassCtx>>) {
        for s in stmts {
            match &s.kind {
                StmtKind::Import(items) => {
                    for it in items {
                        if self.fw.related(&it.path) {
                            if self.record {
                                self.out.bindings.push(ImportBinding {
                                    module_path: it.path.clone(),
                                    local_alias: it.local.clone(),
                                    kind: it.kind,
                                    line: self.lines.line(s.span.start),
                                });
                            }
                            bind(scope, &it.local, Value::Path(it.path.clone()));
                        } else {
                            bind(scope, &it.local, Value::Opaque);
                        }
                    }
                }
                StmtKind::StarImport(module) => {
                    if self.record && self.fw.related(module) {
                        let line = self.lines.line(s.span.start);
                        self.out.warnings.push(format!("line {line}: names from `from {module} import *` are not tracked"));
                    }
                }
                StmtKind::Assign { targets, value, augmented } => {
                    let target_text = (!*augmented && !targets.is_empty()).then(|| {
                        targets.iter().map(|t| self.text(&t.span)).collect::<Vec<_>>().join(" = ")
                    });
                    let mut exprs: Vec<&Expr> = value.iter().collect();
                    exprs.extend(targets.iter());
                    let mut rebinds = Vec::new();
                    targets.iter().for_each(|t| names_in(t, &mut rebinds));
                    self.statement_sites(s, &exprs, scope, false, target_text.as_deref(), &rebinds);
                    if !*augmented && value.is_some() {
                        let v = value.as_ref().and_then(|v| self.resolve(v, scope));
                        for t in targets {
                            self.bind_target(t, v.clone(), scope);
                        }
                    }
                }
                StmtKind::Expr(e) => self.statement_sites(s, &[e], scope, false, None, &[]),
                StmtKind::Exit(exprs) => {
                    let refs: Vec<&Expr> = exprs.iter().collect();
                    self.statement_sites(s, &refs, scope, true, None, &[]);
                }
                StmtKind::Other(exprs) => {
                    let refs: Vec<&Expr> = exprs.iter().collect();
                    self.statement_sites(s, &refs, scope, false, None, &[]);
                }
                StmtKind::Unbind(names) => {
                    for n in names {
                        bind(scope, n, Value::Opaque);
                    }
                }
                StmtKind::Def { name, header, .. } => {
                    self.header_sites(header, scope);
                    bind(scope, name, Value::Opaque);
                    deferred.push(Deferred { def: s, class: class.cloned() });
                }
                StmtKind::Class { name, bases, header, body } => {
                    self.header_sites(bases, scope);
                    self.header_sites(header, scope);
                    let base = bases.iter().find_map(|b| match self.resolve(b, scope) {
                        Some(Value::Path(p)) if self.fw.matches(&p) => Some(p),
                        Some(Value::Class(p)) => Some(p),
                        _ => None,
                    });
                    let methods = body
                        .iter()
                        .filter_map(|m| match &m.kind {
                            StmtKind::Def { name, .. } => Some(name.clone()),
                            _ => None,
                        })
                        .collect();
                    let ctx = Rc::new(ClassCtx { base: base.clone(), methods, attrs: RefCell::default() });
                    let mut class_scope = scope.clone();
                    self.block(body, &mut class_scope, deferred, Some(&ctx));
                    bind(scope, name, base.map_or(Value::Opaque, Value::Class));
                }
                StmtKind::Compound { header, binds, bodies } => {
                    self.header_sites(header, scope);
                    for (target, source) in binds {
                        let v = source.as_ref().and_then(|e| self.resolve(e, scope));
                        self.bind_target(target, v, scope);
                    }
                    for b in bodies {
                        self.block(b, scope, deferred, class);
                    }
                }
            }
        }
    }

    fn run_deferred(&mut self, deferred: Vec<Deferred<'a>>, parent: &Scope) {
        // instance attributes are visible in every method, so gather them first
        let record = self.record;
        self.record = false;
        for d in &deferred {
            if let Some(ctx) = &d.class {
                let (scope, receiver) = self.function(d, parent);
                if let Some(recv) = receiver {
                    let prefix = format!("{recv}.");
                    let mut attrs = ctx.attrs.borrow_mut();
                    for (k, v) in scope {
                        if let Some(attr) = k.strip_prefix(&prefix) {
                            if !ctx.methods.iter().any(|m| m == attr) {
                                attrs.insert(attr.to_string(), v);
                            }
                        }
                    }
                }
            }
        }
        self.record = record;
        if !record {
            return;
        }
        for d in &deferred {
            self.function(d, parent);
        }
    }

    /// Walks one function body; returns its final scope and receiver name.
    fn function(&mut self, d: &Deferred<'a>, parent: &Scope) -> (Scope, Option<String>) {
        let StmtKind::Def { params, body, .. } = &d.def.kind else { unreachable!("deferred non-function") };
        let mut scope = parent.clone();
        let mut receiver = None;
        for (i, p) in params.iter().enumerate() {
            match (&d.class, i) {
                (Some(ctx), 0) => {
                    let v = ctx.base.clone().map_or(Value::Opaque, |b| Value::Object(b, ObjectOrigin::Subclass));
                    bind(&mut scope, &p.name, v);
                    for m in &ctx.methods {
                        scope.insert(format!("{}.{m}", p.name), Value::Opaque);
                    }
                    for (attr, v) in ctx.attrs.borrow().iter() {
                        scope.insert(format!("{}.{attr}", p.name), v.clone());
                    }
                    receiver = Some(p.name.clone());
                }
                _ => {
                    let v = match p.annotation.as_ref().and_then(|a| self.resolve(a, &scope)) {
                        Some(Value::Path(t)) if self.fw.matches(&t) => Value::Object(t, ObjectOrigin::Constructor),
                        Some(Value::Class(b)) => Value::Object(b, ObjectOrigin::Subclass),
                        _ => Value::Opaque,
                    };
                    bind(&mut scope, &p.name, v);
                }
            }
        }
        let mut inner = Vec::new();
        self.block(body, &mut scope, &mut inner, None);
        if self.record {
            self.run_deferred(inner, &scope);
        }
        (scope, receiver)
    }
}
