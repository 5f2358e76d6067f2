//! Head reduction engines, traces, erasure and loop detection.
//!
//! Two strategies are offered. `HeadDef` unfolds the head constant and then
//! contracts the head β-redexes its body exposes, so each step corresponds to
//! one row of a definition-level trace table. `HeadLinear` is a Danos–Regnier style
//! machine: only the head variable occurrence is replaced, and prime redexes
//! stay in the state until a readback.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::env::{EnvEntry, GlobalEnv};
use crate::print::Printer;
use crate::term::{Hint, Name, Sort, Term};
use crate::typeck::{Kernel, LocalCtx, PathStep, TypeError, DEFAULT_FUEL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    HeadDef,
    HeadLinear,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::HeadDef => "head-def",
            Strategy::HeadLinear => "head-linear",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Strategy, String> {
        match s {
            "head-def" => Ok(Strategy::HeadDef),
            "head-linear" => Ok(Strategy::HeadLinear),
            _ => Err(format!("unknown strategy `{s}` (expected head-def or head-linear)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    DeltaUnfold(Name),
    /// Number of β-contractions performed.
    BetaContract(usize),
    RewriteFire(Name),
    /// Path from the root to the replaced head occurrence.
    LinearSubst(Vec<PathStep>),
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::DeltaUnfold(_) => "delta",
            Event::BetaContract(_) => "beta",
            Event::RewriteFire(_) => "rewrite",
            Event::LinearSubst(_) => "subst",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::DeltaUnfold(c) => write!(f, "delta {c}"),
            Event::BetaContract(n) => write!(f, "beta {n}"),
            Event::RewriteFire(r) => write!(f, "rewrite {r}"),
            Event::LinearSubst(p) if p.is_empty() => f.write_str("subst top"),
            Event::LinearSubst(p) => {
                let p: Vec<String> = p.iter().map(|s| s.to_string()).collect();
                write!(f, "subst {}", p.join("."))
            }
        }
    }
}

/// Why a step could not be taken.
#[derive(Clone, Debug)]
pub enum Stuck {
    HeadNormal,
    Error(TypeError),
}

pub type StepResult = Result<(Event, Term), Stuck>;

// ---- head-def ------------------------------------------------------------------

/// Applies `head` to `args`, contracting head β-redexes while arguments
/// remain. Returns the result and the number of contractions.
fn contract(head: Term, args: &[&Term]) -> (Term, usize) {
    let mut pending: Vec<Term> = args.iter().rev().map(|a| (*a).clone()).collect();
    let mut cur = head;
    let mut n = 0;
    loop {
        match (&cur, pending.last()) {
            (Term::Lam(_, _, b), Some(a)) => {
                cur = b.subst(a);
                pending.pop();
                n += 1;
            }
            (Term::App(..), Some(_)) if matches!(cur.head(), Term::Lam(..)) => {
                let (h, xs) = cur.spine();
                let h = h.clone();
                let xs: Vec<Term> = xs.into_iter().cloned().collect();
                pending.extend(xs.into_iter().rev());
                cur = h;
            }
            _ => break,
        }
    }
    (Term::apps(cur, pending.into_iter().rev()), n)
}

fn fire(env: &GlobalEnv, c: &str, args: &[&Term]) -> Result<Option<(Name, Term)>, TypeError> {
    let kernel = Kernel::new(env);
    let ctx = LocalCtx::new();
    for rule in env.rules_for(c) {
        if let Some(out) = kernel.try_rule(&ctx, rule, args)? {
            return Ok(Some((rule.name.clone(), out)));
        }
    }
    Ok(None)
}

/// One head-def step. Descends through leading λs.
pub fn head_def_step(env: &GlobalEnv, t: &Term) -> StepResult {
    if let Term::Lam(h, d, b) = t {
        let (e, b) = head_def_step(env, b)?;
        return Ok((e, Term::Lam(h.clone(), d.clone(), b.into())));
    }
    let (head, args) = t.spine();
    match head {
        Term::Lam(..) if !args.is_empty() => {
            let (out, n) = contract(head.clone(), &args);
            Ok((Event::BetaContract(n), out))
        }
        Term::Let(h, _, d, b) => {
            let (out, _) = contract(b.subst(d), &args);
            Ok((Event::DeltaUnfold(h.as_str().into()), out))
        }
        Term::Const(c) => match env.get(c) {
            Some(EnvEntry::Def { body, .. }) => {
                let (out, _) = contract(body.clone(), &args);
                Ok((Event::DeltaUnfold(c.clone()), out))
            }
            Some(_) => match fire(env, c, &args).map_err(Stuck::Error)? {
                Some((rule, out)) => Ok((Event::RewriteFire(rule), out)),
                None => Err(Stuck::HeadNormal),
            },
            None => Err(Stuck::Error(unknown(c))),
        },
        _ => Err(Stuck::HeadNormal),
    }
}

fn unknown(c: &Name) -> TypeError {
    TypeError {
        kind: crate::typeck::TypeErrorKind::UnknownConstant(c.clone()),
        path: Vec::new(),
        ctx: Vec::new(),
        subjects: Vec::new(),
    }
}

// ---- head-linear -------------------------------------------------------------

enum Bind {
    /// Bound to an argument living at the given depth.
    Arg(Term, usize),
    Free,
}

/// One step of the head-linear machine.
pub fn head_linear_step(env: &GlobalEnv, t: &Term) -> StepResult {
    let mut binds: Vec<Bind> = Vec::new();
    let mut stack: Vec<(Term, usize)> = Vec::new();
    let mut path = Vec::new();
    let mut cur = t;
    let mut depth = 0;
    loop {
        match cur {
            Term::App(f, a) => {
                stack.push(((**a).clone(), depth));
                path.push(PathStep::Fun);
                cur = f;
            }
            Term::Lam(_, _, b) => {
                binds.push(match stack.pop() {
                    Some((a, da)) => Bind::Arg(a, da),
                    None => Bind::Free,
                });
                path.push(PathStep::Body);
                depth += 1;
                cur = b;
            }
            Term::Let(_, _, d, b) => {
                binds.push(Bind::Arg((**d).clone(), depth));
                path.push(PathStep::Body);
                depth += 1;
                cur = b;
            }
            Term::Var(i, _) => {
                let k = match binds.len().checked_sub(i + 1) {
                    Some(k) => k,
                    None => return Err(Stuck::HeadNormal),
                };
                return match &binds[k] {
                    Bind::Arg(a, da) => {
                        let value = a.shift(depth - da);
                        Ok((Event::LinearSubst(path.clone()), replace_at(t, &path, value)))
                    }
                    Bind::Free => Err(Stuck::HeadNormal),
                };
            }
            Term::Const(c) => {
                return match env.get(c) {
                    Some(EnvEntry::Def { body, .. }) => {
                        Ok((Event::DeltaUnfold(c.clone()), replace_at(t, &path, body.clone())))
                    }
                    Some(_) if env.rules_for(c).next().is_some() => match head_def_step(env, &readback(t))? {
                        (e @ Event::RewriteFire(_), out) => Ok((e, out)),
                        _ => Err(Stuck::HeadNormal),
                    },
                    Some(_) => Err(Stuck::HeadNormal),
                    None => Err(Stuck::Error(unknown(c))),
                };
            }
            _ => return Err(Stuck::HeadNormal),
        }
    }
}

fn replace_at(t: &Term, path: &[PathStep], value: Term) -> Term {
    let Some((step, rest)) = path.split_first() else {
        return value;
    };
    match (step, t) {
        (PathStep::Fun, Term::App(f, a)) => Term::App(replace_at(f, rest, value).into(), a.clone()),
        (PathStep::Body, Term::Lam(h, d, b)) => {
            Term::Lam(h.clone(), d.clone(), replace_at(b, rest, value).into())
        }
        (PathStep::Body, Term::Let(h, ann, d, b)) => {
            Term::Let(h.clone(), ann.clone(), d.clone(), replace_at(b, rest, value).into())
        }
        _ => unreachable!("path follows the head spine"),
    }
}

/// Number of prime redexes (applied λs and lets) along the head path.
pub fn prime_redexes(t: &Term) -> usize {
    let mut pending = 0usize;
    let mut count = 0;
    let mut cur = t;
    loop {
        match cur {
            Term::App(f, _) => {
                pending += 1;
                cur = f;
            }
            Term::Lam(_, _, b) => {
                if pending > 0 {
                    pending -= 1;
                    count += 1;
                }
                cur = b;
            }
            Term::Let(_, _, _, b) => {
                count += 1;
                cur = b;
            }
            _ => return count,
        }
    }
}

/// One head β or let step, under leading λs.
pub fn head_beta_step(t: &Term) -> Option<Term> {
    if let Term::Lam(h, d, b) = t {
        return head_beta_step(b).map(|b| Term::Lam(h.clone(), d.clone(), b.into()));
    }
    let (head, args) = t.spine();
    let rest = |from: usize| args[from..].iter().map(|a| (*a).clone()).collect::<Vec<_>>();
    match head {
        Term::Lam(_, _, b) if !args.is_empty() => Some(Term::apps(b.subst(args[0]), rest(1))),
        Term::Let(_, _, d, b) => Some(Term::apps(b.subst(d), rest(0))),
        _ => None,
    }
}

/// Contracts the prime redexes of a machine state. Equivalent to
/// [`prime_redexes`] many [`head_beta_step`]s, computed in one pass.
pub fn readback(t: &Term) -> Term {
    let mut sigma: Vec<Bound> = Vec::new();
    let mut kept = 0;
    let mut stack: Vec<(Term, usize)> = Vec::new();
    let mut free: Vec<(Hint, Term)> = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::App(f, a) => {
                stack.push((translate(a, &sigma, kept), kept));
                cur = f;
            }
            Term::Lam(h, d, b) => {
                match stack.pop() {
                    Some((v, k)) => sigma.push(Bound::Value(v, k)),
                    None => {
                        free.push((h.clone(), translate(d, &sigma, kept)));
                        sigma.push(Bound::Kept(kept));
                        kept += 1;
                    }
                }
                cur = b;
            }
            Term::Let(_, _, d, b) => {
                sigma.push(Bound::Value(translate(d, &sigma, kept), kept));
                cur = b;
            }
            _ => break,
        }
    }
    let head = translate(cur, &sigma, kept);
    let args = stack.into_iter().rev().map(|(v, k)| v.shift(kept - k));
    let mut out = Term::apps(head, args);
    for (h, d) in free.into_iter().rev() {
        out = Term::Lam(h, d.into(), out.into());
    }
    out
}

/// A binder met while reading back: either substituted away, or kept as the
/// given position among the surviving binders.
enum Bound {
    /// Value valid when `usize` binders had been kept.
    Value(Term, usize),
    Kept(usize),
}

/// Applies the pending substitution `sigma` to `t`.
fn translate(t: &Term, sigma: &[Bound], kept: usize) -> Term {
    fn go(t: &Term, d: usize, sigma: &[Bound], kept: usize) -> Term {
        match t {
            Term::Var(i, h) if *i < d => Term::Var(*i, h.clone()),
            Term::Var(i, h) => {
                let j = i - d;
                match sigma.len().checked_sub(j + 1).map(|k| &sigma[k]) {
                    Some(Bound::Value(v, at)) => v.shift(d + kept - at),
                    Some(Bound::Kept(pos)) => Term::Var(d + kept - 1 - pos, h.clone()),
                    // Free in the whole state: skip over the binders removed.
                    None => Term::Var(d + kept + (j - sigma.len()), h.clone()),
                }
            }
            Term::Sort(_) | Term::Const(_) | Term::Erased => t.clone(),
            Term::App(f, a) => Term::app(go(f, d, sigma, kept), go(a, d, sigma, kept)),
            Term::Lam(h, a, b) => {
                Term::Lam(h.clone(), go(a, d, sigma, kept).into(), go(b, d + 1, sigma, kept).into())
            }
            Term::Pi(h, a, b) => {
                Term::Pi(h.clone(), go(a, d, sigma, kept).into(), go(b, d + 1, sigma, kept).into())
            }
            Term::Let(h, a, v, b) => Term::Let(
                h.clone(),
                go(a, d, sigma, kept).into(),
                go(v, d, sigma, kept).into(),
                go(b, d + 1, sigma, kept).into(),
            ),
        }
    }
    if sigma.is_empty() {
        return t.clone();
    }
    go(t, 0, sigma, kept)
}

/// Readback by repeated head steps; slow, kept as a reference.
pub fn readback_stepwise(t: &Term) -> Term {
    let mut cur = t.clone();
    for _ in 0..prime_redexes(t) {
        cur = head_beta_step(&cur).expect("a prime redex is a head redex");
    }
    cur
}

pub fn step(env: &GlobalEnv, strategy: Strategy, t: &Term) -> StepResult {
    match strategy {
        Strategy::HeadDef => head_def_step(env, t),
        Strategy::HeadLinear => head_linear_step(env, t),
    }
}

// ---- normalisation ---------------------------------------------------------------

/// Full normal form by repeated weak head reduction (β, let, δ, rewrite).
/// `fuel` bounds both each head reduction and the number of subterms visited.
pub fn normalize(env: &GlobalEnv, t: &Term, fuel: u64) -> Result<Term, TypeError> {
    let kernel = Kernel::with_fuel(env, fuel);
    let mut budget = fuel;
    nf(&kernel, &mut LocalCtx::new(), t, &mut budget)
}

fn nf(k: &Kernel<'_>, ctx: &mut LocalCtx, t: &Term, budget: &mut u64) -> Result<Term, TypeError> {
    if *budget == 0 {
        return Err(TypeError {
            kind: crate::typeck::TypeErrorKind::FuelExhausted,
            path: Vec::new(),
            ctx: ctx.names(),
            subjects: Vec::new(),
        });
    }
    *budget -= 1;
    let w = k.whnf_in(ctx, t)?;
    Ok(match &w {
        Term::Lam(h, d, b) | Term::Pi(h, d, b) => {
            let d2 = nf(k, ctx, d, budget)?;
            ctx.push(h.clone(), (**d).clone());
            let b2 = nf(k, ctx, b, budget);
            ctx.pop();
            let b2 = b2?;
            if matches!(w, Term::Lam(..)) {
                Term::lam(h.as_str(), d2, b2)
            } else {
                Term::pi(h.as_str(), d2, b2)
            }
        }
        Term::App(..) => {
            let (head, args) = w.spine();
            let mut out = head.clone();
            for a in args {
                out = Term::app(out, nf(k, ctx, a, budget)?);
            }
            out
        }
        _ => w,
    })
}

// ---- erasure -----------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ErasureMode {
    /// Drop λ domains and let annotations; types in term position become `_`.
    AnnotationsOnly,
    /// Additionally delete binders and arguments whose type lives in `#` or
    /// `##`, keeping only proof-level structure. Needs typing information.
    DropPolymorphism,
}

impl ErasureMode {
    pub fn name(self) -> &'static str {
        match self {
            ErasureMode::AnnotationsOnly => "annotations",
            ErasureMode::DropPolymorphism => "poly",
        }
    }
}

impl FromStr for ErasureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<ErasureMode, String> {
        match s {
            "annotations" => Ok(ErasureMode::AnnotationsOnly),
            "poly" => Ok(ErasureMode::DropPolymorphism),
            _ => Err(format!("unknown erasure mode `{s}` (expected annotations or poly)")),
        }
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum EraseError {
    /// Dropping polymorphism needs a well-typed input.
    #[error("erasure needs types: {0}")]
    NeedsTypes(TypeError),
    #[error("variable {0} is computationally relevant but bound at type level")]
    RelevantTypeVariable(usize),
}

fn erase_annotations(t: &Term) -> Term {
    match t {
        Term::Sort(_) | Term::Pi(..) => Term::Erased,
        Term::Var(..) | Term::Const(_) | Term::Erased => t.clone(),
        Term::App(f, a) => Term::app(erase_annotations(f), erase_annotations(a)),
        Term::Lam(h, _, b) => Term::Lam(h.clone(), Term::Erased.into(), erase_annotations(b).into()),
        Term::Let(h, _, d, b) => Term::Let(
            h.clone(),
            Term::Erased.into(),
            erase_annotations(d).into(),
            erase_annotations(b).into(),
        ),
    }
}

struct Dropper<'e> {
    kernel: Kernel<'e>,
    ctx: LocalCtx,
    kept: Vec<bool>,
}

impl Dropper<'_> {
    fn sort(&mut self, ty: &Term) -> Result<Sort, EraseError> {
        self.kernel.sort_of(&mut self.ctx, ty).map_err(EraseError::NeedsTypes)
    }

    fn relevant(&mut self, t: &Term) -> Result<bool, EraseError> {
        let ty = self.kernel.infer(&mut self.ctx, t).map_err(EraseError::NeedsTypes)?;
        Ok(self.sort(&ty)? == Sort::Star)
    }

    fn erase(&mut self, t: &Term) -> Result<Term, EraseError> {
        Ok(match t {
            Term::Var(i, h) => {
                let k = self.kept.len() - 1 - i;
                if !self.kept[k] {
                    return Err(EraseError::RelevantTypeVariable(*i));
                }
                let j = self.kept[k + 1..].iter().filter(|b| **b).count();
                Term::Var(j, h.clone())
            }
            Term::Const(_) => t.clone(),
            Term::App(f, a) => {
                let fty = self.kernel.infer(&mut self.ctx, f).map_err(EraseError::NeedsTypes)?;
                let fty = self.kernel.whnf_in(&self.ctx, &fty).map_err(EraseError::NeedsTypes)?;
                let keep = match &fty {
                    Term::Pi(_, d, _) => self.sort(d)? == Sort::Star,
                    _ => true,
                };
                let f2 = self.erase(f)?;
                if keep {
                    Term::app(f2, self.erase(a)?)
                } else {
                    f2
                }
            }
            Term::Lam(h, d, b) => {
                let keep = self.sort(d)? == Sort::Star;
                self.ctx.push(h.clone(), (**d).clone());
                self.kept.push(keep);
                let b2 = self.erase(b);
                self.ctx.pop();
                self.kept.pop();
                let b2 = b2?;
                if keep {
                    Term::Lam(h.clone(), Term::Erased.into(), b2.into())
                } else {
                    b2
                }
            }
            Term::Let(h, ann, d, b) => {
                let keep = self.sort(ann)? == Sort::Star;
                let d2 = if keep { Some(self.erase(d)?) } else { None };
                self.ctx.push_def(h.clone(), (**ann).clone(), (**d).clone());
                self.kept.push(keep);
                let b2 = self.erase(b);
                self.ctx.pop();
                self.kept.pop();
                let b2 = b2?;
                match d2 {
                    Some(d2) => Term::Let(h.clone(), Term::Erased.into(), d2.into(), b2.into()),
                    None => b2,
                }
            }
            Term::Sort(_) | Term::Pi(..) | Term::Erased => Term::Erased,
        })
    }
}

/// Erases a closed term. `env` supplies the types `DropPolymorphism` needs.
pub fn erase(env: &GlobalEnv, t: &Term, mode: ErasureMode) -> Result<Term, EraseError> {
    match mode {
        ErasureMode::AnnotationsOnly => Ok(erase_annotations(t)),
        ErasureMode::DropPolymorphism => {
            let mut d = Dropper { kernel: Kernel::new(env), ctx: LocalCtx::new(), kept: Vec::new() };
            if d.relevant(t)? {
                d.erase(t)
            } else {
                Ok(Term::Erased)
            }
        }
    }
}

/// The environment with every definition body erased. Types are kept so
/// the result can still be printed; rewrite rules survive annotation
/// erasure only.
pub fn erase_env(env: &GlobalEnv, mode: ErasureMode) -> Result<GlobalEnv, EraseError> {
    let mut out = GlobalEnv::new(env.spec().clone());
    for e in env.entries() {
        let entry = match (e, mode) {
            (EnvEntry::Decl { .. }, _) => e.clone(),
            (EnvEntry::Def { name, ty, body, params }, ErasureMode::AnnotationsOnly) => EnvEntry::Def {
                name: name.clone(),
                ty: ty.clone(),
                body: erase_annotations(body),
                params: *params,
            },
            (EnvEntry::Def { name, ty, body, params }, ErasureMode::DropPolymorphism) => {
                let k = Kernel::new(env);
                let proof = *params == 0 && matches!(k.sort_of(&mut LocalCtx::new(), ty), Ok(Sort::Star));
                let body = if proof { erase(env, body, mode)? } else { Term::Erased };
                EnvEntry::Def { name: name.clone(), ty: ty.clone(), body, params: *params }
            }
            (EnvEntry::Rewrite(r), ErasureMode::AnnotationsOnly) => {
                let mut r = r.clone();
                r.rhs = erase_annotations(&r.rhs);
                EnvEntry::Rewrite(r)
            }
            (EnvEntry::Rewrite(_), ErasureMode::DropPolymorphism) => continue,
        };
        out = out.push_unchecked(entry);
    }
    Ok(out)
}

// ---- traces ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub index: usize,
    /// `None` for the initial state.
    pub event: Option<Event>,
    pub term: Term,
    /// Folded display; empty when displays were not requested.
    pub display: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    HeadNormal,
    StepLimit,
    /// The state at step `entry + period` repeats the one at `entry`.
    Loop {
        entry: usize,
        period: usize,
    },
    Error(String),
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::HeadNormal => f.write_str("head normal form"),
            StopReason::StepLimit => f.write_str("step limit"),
            StopReason::Loop { entry, period } => write!(f, "loop at {entry}, period {period}"),
            StopReason::Error(e) => write!(f, "error: {e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub strategy: Strategy,
    pub steps: Vec<TraceStep>,
    pub stop: StopReason,
}

#[derive(Serialize)]
struct StepRecord<'a> {
    index: usize,
    event: Option<&'static str>,
    detail: Option<String>,
    display: &'a str,
    raw: String,
}

#[derive(Serialize)]
struct StopRecord {
    stop: &'static str,
    entry: Option<usize>,
    period: Option<usize>,
    message: Option<String>,
}

impl Trace {
    /// Folded displays, one per state.
    pub fn displays(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.display.as_str()).collect()
    }

    /// One folded display per line, as in the golden files.
    pub fn to_text(&self) -> String {
        self.steps.iter().map(|s| format!("{}\n", s.display)).collect()
    }

    /// One JSON object per line: the steps, then the stop reason.
    pub fn to_json_lines(&self, env: &GlobalEnv) -> String {
        let plain = Printer::plain(Some(env));
        let mut out = String::new();
        for s in &self.steps {
            let rec = StepRecord {
                index: s.index,
                event: s.event.as_ref().map(Event::kind),
                detail: s.event.as_ref().map(|e| e.to_string()),
                display: &s.display,
                raw: plain.show(&s.term),
            };
            out.push_str(&serde_json::to_string(&rec).expect("serialisable"));
            out.push('\n');
        }
        let stop = match &self.stop {
            StopReason::HeadNormal => {
                StopRecord { stop: "head-normal", entry: None, period: None, message: None }
            }
            StopReason::StepLimit => {
                StopRecord { stop: "step-limit", entry: None, period: None, message: None }
            }
            StopReason::Loop { entry, period } => {
                StopRecord { stop: "loop", entry: Some(*entry), period: Some(*period), message: None }
            }
            StopReason::Error(m) => {
                StopRecord { stop: "error", entry: None, period: None, message: Some(m.clone()) }
            }
        };
        out.push_str(&serde_json::to_string(&stop).expect("serialisable"));
        out.push('\n');
        out
    }
}

/// State compared by loop detection.
fn observable(strategy: Strategy, t: &Term) -> Term {
    match strategy {
        Strategy::HeadDef => t.clone(),
        Strategy::HeadLinear => readback(t),
    }
}

/// Canonical form of an erased state: head and arguments normalised, so
/// states that differ only in unreduced argument structure coincide.
fn canonical(env: &GlobalEnv, t: &Term) -> Term {
    let norm = |u: &Term| normalize(env, u, DEFAULT_FUEL / 10).unwrap_or_else(|_| u.clone());
    let mut binders = Vec::new();
    let mut cur = t;
    while let Term::Lam(h, _, b) = cur {
        binders.push(h.clone());
        cur = b;
    }
    let (head, args) = cur.spine();
    let mut out = Term::apps(norm(head), args.into_iter().map(norm));
    for h in binders.into_iter().rev() {
        out = Term::Lam(h, Term::Erased.into(), out.into());
    }
    out
}

struct Run {
    steps: Vec<TraceStep>,
    stop: StopReason,
}

fn run(
    env: &GlobalEnv,
    strategy: Strategy,
    t: &Term,
    max_steps: usize,
    canon: bool,
    printer: Option<&Printer<'_>>,
) -> Run {
    let show = |t: &Term| printer.map(|p| p.show(t)).unwrap_or_default();
    let key = |t: &Term| {
        let o = observable(strategy, t);
        if canon {
            canonical(env, &o)
        } else {
            o
        }
    };
    let mut seen: HashMap<Term, usize> = HashMap::new();
    let mut last = key(t);
    seen.insert(last.clone(), 0);
    let mut steps = vec![TraceStep { index: 0, event: None, term: t.clone(), display: show(t) }];
    let mut cur = t.clone();
    for i in 1..=max_steps {
        let (event, next) = match step(env, strategy, &cur) {
            Ok(x) => x,
            Err(Stuck::HeadNormal) => return Run { steps, stop: StopReason::HeadNormal },
            Err(Stuck::Error(e)) => return Run { steps, stop: StopReason::Error(e.to_string()) },
        };
        steps.push(TraceStep { index: i, event: Some(event), term: next.clone(), display: show(&next) });
        let k = key(&next);
        cur = next;
        // The linear machine stutters: a substitution may leave the readback
        // unchanged, which is not a repetition.
        if strategy == Strategy::HeadLinear && k == last {
            continue;
        }
        if let Some(&entry) = seen.get(&k) {
            return Run { steps, stop: StopReason::Loop { entry, period: i - entry } };
        }
        seen.insert(k.clone(), i);
        last = k;
    }
    Run { steps, stop: StopReason::StepLimit }
}

/// Reduces `t` for at most `max_steps` steps, stopping early at a head
/// normal form or at the first repeated state (which is included).
pub fn trace(env: &GlobalEnv, t: &Term, strategy: Strategy, max_steps: usize) -> Trace {
    let printer = Printer::folded(env);
    let r = run(env, strategy, t, max_steps, false, Some(&printer));
    Trace { strategy, steps: r.steps, stop: r.stop }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopReport {
    pub strategy: Strategy,
    pub erasure: Option<ErasureMode>,
    /// `(entry, period)` of the first repetition.
    pub found: Option<(usize, usize)>,
    /// Steps taken.
    pub steps: usize,
    pub stop: StopReason,
}

/// Looks for a repeated state within `bound` steps. With an erasure mode the
/// term and environment are erased first and states are compared after
/// normalising head and arguments.
pub fn detect_loop(
    env: &GlobalEnv,
    t: &Term,
    strategy: Strategy,
    erasure: Option<ErasureMode>,
    bound: usize,
) -> Result<LoopReport, EraseError> {
    let r = match erasure {
        None => run(env, strategy, t, bound, false, None),
        Some(mode) => {
            let env2 = erase_env(env, mode)?;
            let t2 = erase(env, t, mode)?;
            run(&env2, strategy, &t2, bound, true, None)
        }
    };
    let found = match r.stop {
        StopReason::Loop { entry, period } => Some((entry, period)),
        _ => None,
    };
    Ok(LoopReport { strategy, erasure, found, steps: r.steps.len() - 1, stop: r.stop })
}
