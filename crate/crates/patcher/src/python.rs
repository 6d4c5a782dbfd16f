//! Adapter from the Python grammar to the neutral tree.

use rustpython_parser::ast::{self, Constant, Ranged};
use rustpython_parser::Parse;

use crate::tree::{ArgKind, Argument, Expr, ExprKind, ImportItem, ImportKind, LineIndex, Module, Param, Span, Stmt, StmtKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at line {line}, column {column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse_module(source: &str) -> Result<Module, SyntaxError> {
    let suite = ast::Suite::parse(source, "<script>").map_err(|e| {
        let offset = usize::from(e.offset).min(source.len());
        let (line, column) = LineIndex::new(source).location(source, offset);
        SyntaxError { line, column, message: e.error.to_string() }
    })?;
    let header_at = header_offset(source, &suite);
    Ok(Module { body: suite.iter().map(stmt).collect(), header_at })
}

fn span<T: Ranged + ?Sized>(r: &T) -> Span {
    let r = r.range();
    usize::from(r.start())..usize::from(r.end())
}

fn end_of_line(source: &str, offset: usize) -> usize {
    source[offset..].find('\n').map_or(source.len(), |i| offset + i + 1)
}

fn header_offset(source: &str, suite: &[ast::Stmt]) -> usize {
    let mut at = 0;
    for (n, line) in source.split_inclusive('\n').take(2).enumerate() {
        let t = line.trim_start();
        let magic = (n == 0 && t.starts_with("#!")) || (t.starts_with('#') && t.contains("coding") && (t.contains(':') || t.contains('=')));
        if !magic {
            break;
        }
        at += line.len();
    }
    let mut stmts = suite.iter().peekable();
    if let Some(ast::Stmt::Expr(e)) = stmts.peek() {
        if matches!(&*e.value, ast::Expr::Constant(c) if matches!(c.value, Constant::Str(_))) {
            at = end_of_line(source, usize::from(e.range.end()));
            stmts.next();
        }
    }
    for s in stmts {
        match s {
            ast::Stmt::ImportFrom(i) if i.module.as_ref().is_some_and(|m| m.as_str() == "__future__") => {
                at = end_of_line(source, usize::from(i.range.end()));
            }
            _ => break,
        }
    }
    at
}

fn block(body: &[ast::Stmt]) -> Vec<Stmt> {
    body.iter().map(stmt).collect()
}

fn exprs<'a>(it: impl IntoIterator<Item = &'a ast::Expr>) -> Vec<Expr> {
    it.into_iter().map(expr).collect()
}

fn params(args: &ast::Arguments) -> (Vec<Param>, Vec<Expr>) {
    let mut out = Vec::new();
    let mut header = Vec::new();
    for a in args.posonlyargs.iter().chain(&args.args).chain(&args.kwonlyargs) {
        out.push(Param { name: a.def.arg.to_string(), annotation: a.def.annotation.as_deref().map(expr) });
        if let Some(d) = &a.default {
            header.push(expr(d));
        }
        header.extend(a.def.annotation.as_deref().map(expr));
    }
    for a in args.vararg.iter().chain(&args.kwarg) {
        out.push(Param { name: a.arg.to_string(), annotation: None });
        header.extend(a.annotation.as_deref().map(expr));
    }
    (out, header)
}

fn stmt(s: &ast::Stmt) -> Stmt {
    use ast::Stmt as S;
    let kind = match s {
        S::FunctionDef(f) => def(&f.name, &f.args, &f.body, &f.decorator_list, f.returns.as_deref()),
        S::AsyncFunctionDef(f) => def(&f.name, &f.args, &f.body, &f.decorator_list, f.returns.as_deref()),
        S::ClassDef(c) => {
            let mut header = exprs(&c.decorator_list);
            header.extend(c.keywords.iter().map(|k| expr(&k.value)));
            StmtKind::Class { name: c.name.to_string(), bases: exprs(&c.bases), header, body: block(&c.body) }
        }
        S::Return(r) => StmtKind::Exit(r.value.as_deref().map(expr).into_iter().collect()),
        S::Raise(r) => StmtKind::Exit(exprs(r.exc.as_deref().into_iter().chain(r.cause.as_deref()))),
        S::Delete(d) => StmtKind::Unbind(d.targets.iter().filter_map(|t| expr(t).dotted()).collect()),
        S::Assign(a) => StmtKind::Assign { targets: exprs(&a.targets), value: Some(expr(&a.value)), augmented: false },
        S::AugAssign(a) => {
            StmtKind::Assign { targets: vec![expr(&a.target)], value: Some(expr(&a.value)), augmented: true }
        }
        S::AnnAssign(a) => StmtKind::Assign {
            targets: vec![expr(&a.target)],
            value: a.value.as_deref().map(expr),
            augmented: false,
        },
        S::TypeAlias(t) => StmtKind::Other(vec![expr(&t.value)]),
        S::For(f) => for_loop(&f.target, &f.iter, &f.body, &f.orelse),
        S::AsyncFor(f) => for_loop(&f.target, &f.iter, &f.body, &f.orelse),
        S::While(w) => StmtKind::Compound { header: vec![expr(&w.test)], binds: vec![], bodies: vec![block(&w.body), block(&w.orelse)] },
        S::If(i) => StmtKind::Compound { header: vec![expr(&i.test)], binds: vec![], bodies: vec![block(&i.body), block(&i.orelse)] },
        S::With(w) => with(&w.items, &w.body),
        S::AsyncWith(w) => with(&w.items, &w.body),
        S::Match(m) => StmtKind::Compound {
            header: std::iter::once(expr(&m.subject)).chain(m.cases.iter().filter_map(|c| c.guard.as_deref().map(expr))).collect(),
            binds: vec![],
            bodies: m.cases.iter().map(|c| block(&c.body)).collect(),
        },
        S::Try(t) => try_stmt(&t.body, &t.handlers, &t.orelse, &t.finalbody),
        S::TryStar(t) => try_stmt(&t.body, &t.handlers, &t.orelse, &t.finalbody),
        S::Assert(a) => StmtKind::Other(exprs(std::iter::once(&*a.test).chain(a.msg.as_deref()))),
        S::Import(i) => StmtKind::Import(
            i.names
                .iter()
                .map(|a| match &a.asname {
                    Some(local) => ImportItem { path: a.name.to_string(), local: local.to_string(), kind: ImportKind::Module },
                    None => {
                        let root = a.name.split('.').next().unwrap_or_default().to_string();
                        ImportItem { path: root.clone(), local: root, kind: ImportKind::Module }
                    }
                })
                .collect(),
        ),
        S::ImportFrom(i) => {
            let relative = i.level.as_ref().is_some_and(|l| l.to_u32() > 0);
            let module = i.module.as_ref().map(|m| m.to_string()).unwrap_or_default();
            if i.names.iter().any(|a| a.name.as_str() == "*") {
                StmtKind::StarImport(module)
            } else {
                StmtKind::Import(
                    i.names
                        .iter()
                        .map(|a| {
                            let local = a.asname.as_ref().unwrap_or(&a.name).to_string();
                            // relative imports never resolve to an installed framework
                            let path = if relative { format!(".{local}") } else { format!("{module}.{}", a.name) };
                            ImportItem { path, local, kind: ImportKind::Symbol }
                        })
                        .collect(),
                )
            }
        }
        S::Expr(e) => StmtKind::Expr(expr(&e.value)),
        S::Global(_) | S::Nonlocal(_) | S::Pass(_) | S::Break(_) | S::Continue(_) => StmtKind::Other(vec![]),
    };
    Stmt { span: span(s), kind }
}

fn def(name: &str, args: &ast::Arguments, body: &[ast::Stmt], decorators: &[ast::Expr], returns: Option<&ast::Expr>) -> StmtKind {
    let (params, mut header) = params(args);
    header.extend(exprs(decorators));
    header.extend(returns.map(expr));
    StmtKind::Def { name: name.to_string(), params, header, body: block(body) }
}

fn for_loop(target: &ast::Expr, iter: &ast::Expr, body: &[ast::Stmt], orelse: &[ast::Stmt]) -> StmtKind {
    StmtKind::Compound { header: vec![expr(iter)], binds: vec![(expr(target), None)], bodies: vec![block(body), block(orelse)] }
}

fn with(items: &[ast::WithItem], body: &[ast::Stmt]) -> StmtKind {
    StmtKind::Compound {
        header: items.iter().map(|i| expr(&i.context_expr)).collect(),
        binds: items
            .iter()
            .filter_map(|i| i.optional_vars.as_deref().map(|v| (expr(v), Some(expr(&i.context_expr)))))
            .collect(),
        bodies: vec![block(body)],
    }
}

fn try_stmt(body: &[ast::Stmt], handlers: &[ast::ExceptHandler], orelse: &[ast::Stmt], finalbody: &[ast::Stmt]) -> StmtKind {
    let mut header = Vec::new();
    let mut binds = Vec::new();
    let mut bodies = vec![block(body)];
    for ast::ExceptHandler::ExceptHandler(h) in handlers {
        header.extend(h.type_.as_deref().map(expr));
        if let Some(name) = &h.name {
            let r = span(h);
            binds.push((Expr::new(r, ExprKind::Name(name.to_string())), None));
        }
        bodies.push(block(&h.body));
    }
    bodies.push(block(orelse));
    bodies.push(block(finalbody));
    StmtKind::Compound { header, binds, bodies }
}

fn comprehension(elts: Vec<&ast::Expr>, generators: &[ast::Comprehension]) -> ExprKind {
    let mut children = exprs(elts);
    for g in generators {
        children.push(expr(&g.target));
        children.push(expr(&g.iter));
        children.extend(exprs(&g.ifs));
    }
    ExprKind::Scoped { lazy: false, children }
}

fn expr(e: &ast::Expr) -> Expr {
    use ast::Expr as E;
    let kind = match e {
        E::Name(n) => ExprKind::Name(n.id.to_string()),
        E::Attribute(a) => ExprKind::Attribute { value: Box::new(expr(&a.value)), attr: a.attr.to_string() },
        E::Call(c) => {
            let mut args: Vec<Argument> = c
                .args
                .iter()
                .map(|a| match a {
                    E::Starred(s) => Argument { kind: ArgKind::Star, value: expr(&s.value) },
                    other => Argument { kind: ArgKind::Positional, value: expr(other) },
                })
                .collect();
            args.extend(c.keywords.iter().map(|k| Argument {
                kind: k.arg.as_ref().map_or(ArgKind::DoubleStar, |a| ArgKind::Keyword(a.to_string())),
                value: expr(&k.value),
            }));
            args.sort_by_key(|a| a.value.span.start);
            ExprKind::Call { func: Box::new(expr(&c.func)), args }
        }
        E::Subscript(s) => ExprKind::Subscript { value: Box::new(expr(&s.value)), index: Box::new(expr(&s.slice)) },
        E::Starred(s) => ExprKind::Starred(Box::new(expr(&s.value))),
        E::Lambda(l) => {
            let (_, mut children) = params(&l.args);
            children.push(expr(&l.body));
            ExprKind::Scoped { lazy: true, children }
        }
        E::ListComp(c) => comprehension(vec![&c.elt], &c.generators),
        E::SetComp(c) => comprehension(vec![&c.elt], &c.generators),
        E::GeneratorExp(c) => comprehension(vec![&c.elt], &c.generators),
        E::DictComp(c) => comprehension(vec![&c.key, &c.value], &c.generators),
        E::Await(a) => ExprKind::Effect(vec![expr(&a.value)]),
        E::Yield(y) => ExprKind::Effect(y.value.as_deref().map(expr).into_iter().collect()),
        E::YieldFrom(y) => ExprKind::Effect(vec![expr(&y.value)]),
        E::NamedExpr(n) => ExprKind::Effect(vec![expr(&n.target), expr(&n.value)]),
        E::BoolOp(b) => ExprKind::Other(exprs(&b.values)),
        E::BinOp(b) => ExprKind::Other(vec![expr(&b.left), expr(&b.right)]),
        E::UnaryOp(u) => ExprKind::Other(vec![expr(&u.operand)]),
        E::IfExp(i) => ExprKind::Other(vec![expr(&i.test), expr(&i.body), expr(&i.orelse)]),
        E::Dict(d) => ExprKind::Other(exprs(d.keys.iter().flatten().chain(&d.values))),
        E::Set(s) => ExprKind::Other(exprs(&s.elts)),
        E::List(l) => ExprKind::Other(exprs(&l.elts)),
        E::Tuple(t) => ExprKind::Other(exprs(&t.elts)),
        E::Compare(c) => ExprKind::Other(exprs(std::iter::once(&*c.left).chain(&c.comparators))),
        E::FormattedValue(f) => ExprKind::Other(exprs(std::iter::once(&*f.value).chain(f.format_spec.as_deref()))),
        E::JoinedStr(j) => ExprKind::Other(exprs(&j.values)),
        E::Constant(_) => ExprKind::Other(vec![]),
        E::Slice(s) => ExprKind::Other(exprs(s.lower.as_deref().into_iter().chain(s.upper.as_deref()).chain(s.step.as_deref()))),
    };
    Expr::new(span(e), kind)
}
