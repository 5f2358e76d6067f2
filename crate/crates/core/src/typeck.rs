//! Type inference and βδρ-conversion.
//!
//! Conversion compares weak head normal forms and unfolds definitions
//! lazily: when both sides are headed by the same constant their arguments
//! are compared first, otherwise the more recently defined head is unfolded.
//! Every query runs under a fuel bound and reports [`TypeErrorKind::FuelExhausted`]
//! rather than diverging.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use crate::env::{EnvEntry, GlobalEnv, PatArg, Pattern, RewriteRule};
use crate::print::Printer;
use crate::term::{Hint, Sort, Term};

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Clone, Debug)]
pub struct CtxEntry {
    pub hint: Hint,
    pub ty: Term,
    pub value: Option<Term>,
}

/// Local context, outermost binding first.
#[derive(Clone, Debug, Default)]
pub struct LocalCtx {
    entries: Vec<CtxEntry>,
}

impl LocalCtx {
    pub fn new() -> LocalCtx {
        LocalCtx::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, hint: Hint, ty: Term) {
        self.entries.push(CtxEntry { hint, ty, value: None });
    }

    pub fn push_def(&mut self, hint: Hint, ty: Term, value: Term) {
        self.entries.push(CtxEntry { hint, ty, value: Some(value) });
    }

    pub fn pop(&mut self) {
        self.entries.pop();
    }

    fn entry(&self, index: usize) -> Option<&CtxEntry> {
        self.entries.len().checked_sub(index + 1).map(|i| &self.entries[i])
    }

    /// Type of `Var(index)`, valid at the current depth.
    pub fn type_of(&self, index: usize) -> Option<Term> {
        self.entry(index).map(|e| e.ty.shift(index + 1))
    }

    /// Definition of a let-bound `Var(index)`, valid at the current depth.
    pub fn value_of(&self, index: usize) -> Option<Term> {
        self.entry(index).and_then(|e| e.value.as_ref()).map(|v| v.shift(index + 1))
    }

    /// Binder names, outermost first.
    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.hint.as_str().to_string()).collect()
    }
}

/// Step from a term to one of its immediate subterms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStep {
    Fun,
    Arg,
    Dom,
    Body,
    Ann,
    Defn,
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathStep::Fun => "fun",
            PathStep::Arg => "arg",
            PathStep::Dom => "dom",
            PathStep::Body => "body",
            PathStep::Ann => "ann",
            PathStep::Defn => "defn",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeErrorKind {
    UnknownConstant(Arc<str>),
    NoAxiom(Sort),
    /// Carries the offending `(s1, s2)` pair.
    NoRule(Sort, Sort),
    NotAFunction,
    DomainMismatch,
    NotASort,
    FuelExhausted,
    UnboundVariable(usize),
    ErasedTerm,
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeErrorKind::UnknownConstant(c) => write!(f, "UnknownConstant({c})"),
            TypeErrorKind::NoAxiom(s) => write!(f, "NoAxiom({s})"),
            TypeErrorKind::NoRule(a, b) => write!(f, "NoRule({a},{b})"),
            TypeErrorKind::NotAFunction => f.write_str("NotAFunction"),
            TypeErrorKind::DomainMismatch => f.write_str("DomainMismatch"),
            TypeErrorKind::NotASort => f.write_str("NotASort"),
            TypeErrorKind::FuelExhausted => f.write_str("FuelExhausted"),
            TypeErrorKind::UnboundVariable(i) => write!(f, "UnboundVariable({i})"),
            TypeErrorKind::ErasedTerm => f.write_str("ErasedTerm"),
        }
    }
}

/// A typing failure, with the path to the offending subterm and the terms
/// needed to explain it (rendered on demand, folded or raw).
#[derive(Clone, Debug)]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub path: Vec<PathStep>,
    /// Names of the local binders the subjects live under, outermost first.
    pub ctx: Vec<String>,
    pub subjects: Vec<(&'static str, Term)>,
}

impl TypeError {
    fn new(kind: TypeErrorKind, ctx: &LocalCtx) -> TypeError {
        TypeError { kind, path: Vec::new(), ctx: ctx.names(), subjects: Vec::new() }
    }

    fn with(mut self, label: &'static str, t: Term) -> TypeError {
        self.subjects.push((label, t));
        self
    }

    fn at(mut self, path: &[PathStep]) -> TypeError {
        if self.path.is_empty() {
            self.path = path.to_vec();
        }
        self
    }

    pub fn location(&self) -> String {
        if self.path.is_empty() {
            "top".into()
        } else {
            self.path.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
        }
    }

    /// Human-readable message. With `raw` unset, subjects are displayed with
    /// definitions folded back into names.
    pub fn render(&self, env: &GlobalEnv, raw: bool) -> String {
        let printer = if raw { Printer::raw(env) } else { Printer::folded(env) };
        self.render_with(&printer)
    }

    fn render_with(&self, printer: &Printer<'_>) -> String {
        let mut out = format!("{} at {}", self.kind, self.location());
        for (label, t) in &self.subjects {
            out.push_str(&format!("\n  {label}: {}", printer.show_in(t, &self.ctx)));
        }
        out
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.location())
    }
}

impl std::error::Error for TypeError {}

/// Type checker and conversion engine bound to one environment.
pub struct Kernel<'e> {
    env: &'e GlobalEnv,
    fuel: Cell<u64>,
    limit: u64,
}

impl<'e> Kernel<'e> {
    pub fn new(env: &'e GlobalEnv) -> Kernel<'e> {
        Kernel::with_fuel(env, DEFAULT_FUEL)
    }

    pub fn with_fuel(env: &'e GlobalEnv, limit: u64) -> Kernel<'e> {
        Kernel { env, fuel: Cell::new(limit), limit }
    }

    pub fn env(&self) -> &'e GlobalEnv {
        self.env
    }

    fn refuel(&self) {
        self.fuel.set(self.limit);
    }

    fn tick(&self, ctx: &LocalCtx) -> Result<(), TypeError> {
        let left = self.fuel.get();
        if left == 0 {
            return Err(TypeError::new(TypeErrorKind::FuelExhausted, ctx));
        }
        self.fuel.set(left - 1);
        Ok(())
    }

    // ---- reduction -------------------------------------------------------

    /// Weak head normal form in the empty context.
    pub fn whnf(&self, t: &Term) -> Result<Term, TypeError> {
        self.whnf_in(&LocalCtx::new(), t)
    }

    pub fn whnf_in(&self, ctx: &LocalCtx, t: &Term) -> Result<Term, TypeError> {
        self.refuel();
        self.whnf_(ctx, t, true)
    }

    fn whnf_(&self, ctx: &LocalCtx, t: &Term, delta: bool) -> Result<Term, TypeError> {
        let mut cur = t.clone();
        while let Some(next) = self.head_step(ctx, &cur, delta)? {
            self.tick(ctx)?;
            cur = next;
        }
        Ok(cur)
    }

    /// One weak-head step: β, let, local definition, δ (if `delta`) or a
    /// rewrite rule. `None` when the head is stuck.
    fn head_step(&self, ctx: &LocalCtx, t: &Term, delta: bool) -> Result<Option<Term>, TypeError> {
        let (head, args) = t.spine();
        let rebuild = |h: Term, rest: &[&Term]| Term::apps(h, rest.iter().map(|a| (*a).clone()));
        Ok(match head {
            Term::Lam(_, _, body) if !args.is_empty() => Some(rebuild(body.subst(args[0]), &args[1..])),
            Term::Let(_, _, d, b) => Some(rebuild(b.subst(d), &args)),
            Term::Var(i, _) => ctx.value_of(*i).map(|v| rebuild(v, &args)),
            Term::Const(c) => match self.env.get(c) {
                Some(EnvEntry::Def { body, .. }) if delta => Some(rebuild(body.clone(), &args)),
                Some(EnvEntry::Def { .. }) => None,
                Some(_) => self.fire_rule(ctx, c, &args)?,
                None => return Err(TypeError::new(TypeErrorKind::UnknownConstant(c.clone()), ctx)),
            },
            _ => None,
        })
    }

    /// Tries every rule headed by `c` against the spine `args`.
    fn fire_rule(&self, ctx: &LocalCtx, c: &str, args: &[&Term]) -> Result<Option<Term>, TypeError> {
        for rule in self.env.rules_for(c) {
            if let Some(out) = self.try_rule(ctx, rule, args)? {
                return Ok(Some(out));
            }
        }
        Ok(None)
    }

    /// Applies `rule` at the head of `c args` if it matches, returning the
    /// contractum applied to any extra arguments.
    pub(crate) fn try_rule(
        &self,
        ctx: &LocalCtx,
        rule: &RewriteRule,
        args: &[&Term],
    ) -> Result<Option<Term>, TypeError> {
        let n = rule.arity();
        if args.len() < n {
            return Ok(None);
        }
        let mut values = Vec::new();
        for (p, a) in rule.lhs.args.iter().zip(args) {
            if !self.match_arg(ctx, p, a, &mut values)? {
                return Ok(None);
            }
        }
        let out = rule.instantiate(&values);
        Ok(Some(Term::apps(out, args[n..].iter().map(|a| (*a).clone()))))
    }

    fn match_arg(
        &self,
        ctx: &LocalCtx,
        p: &PatArg,
        t: &Term,
        out: &mut Vec<Term>,
    ) -> Result<bool, TypeError> {
        match p {
            PatArg::Meta(_) => {
                out.push(t.clone());
                Ok(true)
            }
            PatArg::Rigid(q) => self.match_rigid(ctx, q, t, out),
        }
    }

    fn match_rigid(
        &self,
        ctx: &LocalCtx,
        q: &Pattern,
        t: &Term,
        out: &mut Vec<Term>,
    ) -> Result<bool, TypeError> {
        let w = self.whnf_(ctx, t, true)?;
        let (head, args) = w.spine();
        if !matches!(head, Term::Const(c) if *c == q.head) || args.len() != q.args.len() {
            return Ok(false);
        }
        for (p, a) in q.args.iter().zip(args) {
            if !self.match_arg(ctx, p, a, out)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    // ---- conversion ------------------------------------------------------

    /// βδρ-convertibility of two closed terms.
    pub fn convert(&self, a: &Term, b: &Term) -> Result<bool, TypeError> {
        self.convert_in(&LocalCtx::new(), a, b)
    }

    pub fn convert_in(&self, ctx: &LocalCtx, a: &Term, b: &Term) -> Result<bool, TypeError> {
        self.refuel();
        let mut ctx = ctx.clone();
        self.conv(&mut ctx, a, b)
    }

    /// Height used to pick which side to unfold: the definition's position,
    /// or `None` when the head cannot be δ-unfolded.
    fn height(&self, t: &Term) -> Option<usize> {
        match t.head() {
            Term::Const(c) => match self.env.get(c) {
                Some(EnvEntry::Def { .. }) => self.env.position(c),
                _ => None,
            },
            _ => None,
        }
    }

    fn unfold_head(&self, ctx: &LocalCtx, t: &Term) -> Result<Term, TypeError> {
        self.tick(ctx)?;
        let (head, args) = t.spine();
        let body = match head {
            Term::Const(c) => match self.env.get(c) {
                Some(EnvEntry::Def { body, .. }) => body.clone(),
                _ => unreachable!("unfold_head on a non-definition"),
            },
            _ => unreachable!("unfold_head on a non-constant head"),
        };
        let t = Term::apps(body, args.into_iter().cloned());
        self.whnf_(ctx, &t, false)
    }

    fn conv(&self, ctx: &mut LocalCtx, a: &Term, b: &Term) -> Result<bool, TypeError> {
        if a == b {
            return Ok(true);
        }
        let mut a = self.whnf_(ctx, a, false)?;
        let mut b = self.whnf_(ctx, b, false)?;
        loop {
            if a == b {
                return Ok(true);
            }
            match (self.height(&a), self.height(&b)) {
                (None, None) => break,
                (Some(x), Some(y)) if x == y => {
                    if self.spines_conv(ctx, &a, &b)? {
                        return Ok(true);
                    }
                    a = self.unfold_head(ctx, &a)?;
                    b = self.unfold_head(ctx, &b)?;
                }
                (Some(x), Some(y)) if x > y => a = self.unfold_head(ctx, &a)?,
                (Some(_), None) => a = self.unfold_head(ctx, &a)?,
                _ => b = self.unfold_head(ctx, &b)?,
            }
        }
        match (&a, &b) {
            (Term::Sort(s), Term::Sort(t)) => Ok(s == t),
            (Term::Erased, Term::Erased) => Ok(true),
            (Term::Pi(h, d1, b1), Term::Pi(_, d2, b2)) | (Term::Lam(h, d1, b1), Term::Lam(_, d2, b2))
                if std::mem::discriminant(&a) == std::mem::discriminant(&b) =>
            {
                if !self.conv(ctx, d1, d2)? {
                    return Ok(false);
                }
                ctx.push(h.clone(), (**d1).clone());
                let r = self.conv(ctx, b1, b2);
                ctx.pop();
                r
            }
            _ => {
                let (ha, _) = a.spine();
                if matches!(ha, Term::Var(..) | Term::Const(_)) {
                    self.spines_conv(ctx, &a, &b)
                } else {
                    Ok(false)
                }
            }
        }
    }

    /// Same head and pairwise convertible arguments.
    fn spines_conv(&self, ctx: &mut LocalCtx, a: &Term, b: &Term) -> Result<bool, TypeError> {
        let (ha, xs) = a.spine();
        let (hb, ys) = b.spine();
        if ha != hb || xs.len() != ys.len() {
            return Ok(false);
        }
        for (x, y) in xs.into_iter().zip(ys) {
            if !self.conv(ctx, x, y)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    // ---- typing ----------------------------------------------------------

    pub fn infer(&self, ctx: &mut LocalCtx, t: &Term) -> Result<Term, TypeError> {
        let mut path = Vec::new();
        self.infer_at(ctx, t, &mut path)
    }

    /// Checks `t` against `expected`.
    pub fn check(&self, ctx: &mut LocalCtx, t: &Term, expected: &Term) -> Result<(), TypeError> {
        let found = self.infer(ctx, t)?;
        self.expect_convertible(ctx, &found, expected)
    }

    pub(crate) fn expect_convertible(
        &self,
        ctx: &mut LocalCtx,
        found: &Term,
        expected: &Term,
    ) -> Result<(), TypeError> {
        self.refuel();
        if self.conv(ctx, found, expected)? {
            Ok(())
        } else {
            Err(TypeError::new(TypeErrorKind::DomainMismatch, ctx)
                .with("expected", expected.clone())
                .with("found", found.clone()))
        }
    }

    /// The sort classifying the type `t`.
    pub fn sort_of(&self, ctx: &mut LocalCtx, t: &Term) -> Result<Sort, TypeError> {
        let mut path = Vec::new();
        self.sort_of_at(ctx, t, &mut path)
    }

    fn sort_of_at(&self, ctx: &mut LocalCtx, t: &Term, path: &mut Vec<PathStep>) -> Result<Sort, TypeError> {
        let ty = self.infer_at(ctx, t, path)?;
        self.refuel();
        match self.whnf_(ctx, &ty, true).map_err(|e| e.at(path))? {
            Term::Sort(s) => Ok(s),
            other => Err(TypeError::new(TypeErrorKind::NotASort, ctx)
                .with("term", t.clone())
                .with("type", other)
                .at(path)),
        }
    }

    fn infer_at(&self, ctx: &mut LocalCtx, t: &Term, path: &mut Vec<PathStep>) -> Result<Term, TypeError> {
        match t {
            Term::Sort(s) => self
                .env
                .spec()
                .axiom_of(*s)
                .map(Term::Sort)
                .ok_or_else(|| TypeError::new(TypeErrorKind::NoAxiom(*s), ctx).at(path)),
            Term::Var(i, _) => ctx
                .type_of(*i)
                .ok_or_else(|| TypeError::new(TypeErrorKind::UnboundVariable(*i), ctx).at(path)),
            Term::Const(c) => match self.env.get(c).and_then(EnvEntry::ty) {
                Some(ty) => Ok(ty.clone()),
                None => Err(TypeError::new(TypeErrorKind::UnknownConstant(c.clone()), ctx).at(path)),
            },
            Term::App(f, a) => {
                path.push(PathStep::Fun);
                let fty = self.infer_at(ctx, f, path)?;
                self.refuel();
                let fty = self.whnf_(ctx, &fty, true).map_err(|e| e.at(path))?;
                path.pop();
                let (dom, cod) = match fty {
                    Term::Pi(_, d, c) => (d, c),
                    other => {
                        return Err(TypeError::new(TypeErrorKind::NotAFunction, ctx)
                            .with("function", (**f).clone())
                            .with("type", other)
                            .at(path))
                    }
                };
                path.push(PathStep::Arg);
                let aty = self.infer_at(ctx, a, path)?;
                self.expect_convertible(ctx, &aty, &dom).map_err(|e| e.at(path))?;
                path.pop();
                Ok(cod.subst(a))
            }
            Term::Lam(h, d, b) => {
                path.push(PathStep::Dom);
                let s1 = self.sort_of_at(ctx, d, path)?;
                path.pop();
                path.push(PathStep::Body);
                ctx.push(h.clone(), (**d).clone());
                let res = self.infer_at(ctx, b, path).and_then(|bty| {
                    let s2 = self.sort_of_at(ctx, &bty, path)?;
                    Ok((bty, s2))
                });
                ctx.pop();
                let (bty, s2) = res?;
                path.pop();
                self.rule(ctx, s1, s2, path)?;
                Ok(Term::Pi(h.clone(), d.clone(), Arc::new(bty)))
            }
            Term::Pi(h, d, b) => {
                path.push(PathStep::Dom);
                let s1 = self.sort_of_at(ctx, d, path)?;
                path.pop();
                path.push(PathStep::Body);
                ctx.push(h.clone(), (**d).clone());
                let s2 = self.sort_of_at(ctx, b, path);
                ctx.pop();
                let s2 = s2?;
                path.pop();
                Ok(Term::Sort(self.rule(ctx, s1, s2, path)?))
            }
            Term::Let(h, ann, d, b) => {
                path.push(PathStep::Ann);
                self.sort_of_at(ctx, ann, path)?;
                path.pop();
                path.push(PathStep::Defn);
                let dty = self.infer_at(ctx, d, path)?;
                self.expect_convertible(ctx, &dty, ann).map_err(|e| e.at(path))?;
                path.pop();
                path.push(PathStep::Body);
                ctx.push_def(h.clone(), (**ann).clone(), (**d).clone());
                let bty = self.infer_at(ctx, b, path);
                ctx.pop();
                let bty = bty?;
                path.pop();
                Ok(bty.subst(d))
            }
            Term::Erased => Err(TypeError::new(TypeErrorKind::ErasedTerm, ctx).at(path)),
        }
    }

    fn rule(&self, ctx: &LocalCtx, s1: Sort, s2: Sort, path: &[PathStep]) -> Result<Sort, TypeError> {
        self.env
            .spec()
            .rule_of(s1, s2)
            .ok_or_else(|| TypeError::new(TypeErrorKind::NoRule(s1, s2), ctx).at(path))
    }
}
