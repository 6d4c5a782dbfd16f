//! Language-neutral syntax tree the instrumenter works on.
//!
//! Only the shapes that matter for binding resolution and statement-level
//! patching are kept; everything else collapses into `Other` nodes that still
//! expose their children so calls inside them are not lost.

use std::ops::Range;

/// Byte range into the original source.
pub type Span = Range<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct Module {
    pub body: Vec<Stmt>,
    /// Byte offset where a header may be inserted (after shebang, encoding
    /// line, docstring and future imports).
    pub header_at: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub span: Span,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportItem {
    /// Full dotted path the local name refers to.
    pub path: String,
    pub local: String,
    pub kind: ImportKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportKind {
    Module,
    Symbol,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub annotation: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Import(Vec<ImportItem>),
    /// `from x import *`
    StarImport(String),
    /// Plain, augmented and annotated assignment.
    Assign { targets: Vec<Expr>, value: Option<Expr>, augmented: bool },
    Expr(Expr),
    Def { name: String, params: Vec<Param>, header: Vec<Expr>, body: Vec<Stmt> },
    Class { name: String, bases: Vec<Expr>, header: Vec<Expr>, body: Vec<Stmt> },
    /// Compound statement. `binds` pairs a bound target with the expression
    /// whose value it receives, if that value is the expression itself
    /// (`with x as y`), or `None` when the value is derived (`for y in x`).
    Compound { header: Vec<Expr>, binds: Vec<(Expr, Option<Expr>)>, bodies: Vec<Vec<Stmt>> },
    /// `return`, `raise`, and other statements that leave the block.
    Exit(Vec<Expr>),
    /// `del` targets.
    Unbind(Vec<String>),
    Other(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub span: Span,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Name(String),
    Attribute { value: Box<Expr>, attr: String },
    Call { func: Box<Expr>, args: Vec<Argument> },
    Subscript { value: Box<Expr>, index: Box<Expr> },
    Starred(Box<Expr>),
    /// Body runs in its own scope. `lazy` when it may never run at all
    /// (lambda); comprehensions run immediately.
    Scoped { lazy: bool, children: Vec<Expr> },
    /// Evaluation has side effects beyond calls (await, yield, walrus).
    Effect(Vec<Expr>),
    Other(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Argument {
    pub kind: ArgKind,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgKind {
    Positional,
    Star,
    Keyword(String),
    DoubleStar,
}

impl Expr {
    pub fn new(span: Span, kind: ExprKind) -> Self {
        Expr { span, kind }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Name(_) => Vec::new(),
            ExprKind::Attribute { value, .. } | ExprKind::Starred(value) => vec![value],
            ExprKind::Call { func, args } => {
                let mut v: Vec<&Expr> = vec![func];
                v.extend(args.iter().map(|a| &a.value));
                v
            }
            ExprKind::Subscript { value, index } => vec![value, index],
            ExprKind::Scoped { children, .. } | ExprKind::Effect(children) | ExprKind::Other(children) => {
                children.iter().collect()
            }
        }
    }

    /// Dotted path for a pure `a.b.c` chain.
    pub fn dotted(&self) -> Option<String> {
        match &self.kind {
            ExprKind::Name(n) => Some(n.clone()),
            ExprKind::Attribute { value, attr } => value.dotted().map(|p| format!("{p}.{attr}")),
            _ => None,
        }
    }

    /// True when re-evaluating the expression could change program state:
    /// it contains a call or an effect outside a lambda body.
    pub fn has_effects(&self) -> bool {
        match &self.kind {
            ExprKind::Call { .. } | ExprKind::Effect(_) => true,
            ExprKind::Scoped { lazy: true, .. } => false,
            _ => self.children().into_iter().any(Expr::has_effects),
        }
    }
}

/// Maps byte offsets to 1-based line and column numbers.
#[derive(Debug, Clone)]
pub struct LineIndex {
    starts: Vec<usize>,
}

impl LineIndex {
    pub fn new(source: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(source.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { starts }
    }

    pub fn line(&self, offset: usize) -> usize {
        self.starts.partition_point(|&s| s <= offset)
    }

    pub fn line_start(&self, line: usize) -> usize {
        self.starts[line - 1]
    }

    /// (line, column), both 1-based; the column counts characters.
    pub fn location(&self, source: &str, offset: usize) -> (usize, usize) {
        let line = self.line(offset);
        let col = source[self.line_start(line)..offset].chars().count() + 1;
        (line, col)
    }
}
