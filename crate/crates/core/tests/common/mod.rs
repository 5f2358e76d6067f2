//! Reference head reducer used as an oracle by several test targets.
//!
//! It works on its own named representation with textbook capture-avoiding
//! substitution and shares no reduction code with the library: terms cross
//! over once (de Bruijn to names) and are then reduced and compared here.
#![allow(dead_code)]

use std::collections::HashSet;

use pts_core::corpus::{self, ParadoxBundle, ParadoxId};
use pts_core::dev::ItemKind;
use pts_core::reduce::{self, Strategy};
use pts_core::{EnvEntry, GlobalEnv, Hint, LocalCtx, Term};

#[derive(Clone, Debug)]
pub enum N {
    Var(String),
    Con(String),
    Sort(String),
    App(Box<N>, Box<N>),
    Lam(String, Box<N>, Box<N>),
    Pi(String, Box<N>, Box<N>),
}

/// Converts a let-free library term. Binders get fresh names `v0, v1, ...`.
pub fn named(t: &Term) -> N {
    fn go(t: &Term, scope: &mut Vec<String>, next: &mut usize) -> N {
        let bind = |d: &Term, b: &Term, scope: &mut Vec<String>, next: &mut usize| {
            let x = format!("v{next}");
            *next += 1;
            let d = go(d, scope, next);
            scope.push(x.clone());
            let b = go(b, scope, next);
            scope.pop();
            (x, Box::new(d), Box::new(b))
        };
        match t {
            Term::Var(i, h) => match scope.len().checked_sub(i + 1) {
                Some(k) => N::Var(scope[k].clone()),
                None => N::Var(format!("free:{}", h.as_str())),
            },
            Term::Const(c) => N::Con(c.to_string()),
            Term::Sort(s) => N::Sort(s.symbol().to_string()),
            Term::Erased => N::Con("_".into()),
            Term::App(f, a) => N::App(Box::new(go(f, scope, next)), Box::new(go(a, scope, next))),
            Term::Lam(_, d, b) => {
                let (x, d, b) = bind(d, b, scope, next);
                N::Lam(x, d, b)
            }
            Term::Pi(_, d, b) => {
                let (x, d, b) = bind(d, b, scope, next);
                N::Pi(x, d, b)
            }
            Term::Let(..) => panic!("oracle input must be let-free"),
        }
    }
    go(t, &mut Vec::new(), &mut 0)
}

fn free_vars(t: &N, out: &mut HashSet<String>) {
    match t {
        N::Var(x) => {
            out.insert(x.clone());
        }
        N::Con(_) | N::Sort(_) => {}
        N::App(f, a) => {
            free_vars(f, out);
            free_vars(a, out);
        }
        N::Lam(x, d, b) | N::Pi(x, d, b) => {
            free_vars(d, out);
            let mut inner = HashSet::new();
            free_vars(b, &mut inner);
            inner.remove(x);
            out.extend(inner);
        }
    }
}

/// `t[x := v]`, renaming binders that would capture a free variable of `v`.
pub fn subst(t: &N, x: &str, v: &N, fv: &HashSet<String>, fresh: &mut usize) -> N {
    match t {
        N::Var(y) if y == x => v.clone(),
        N::Var(_) | N::Con(_) | N::Sort(_) => t.clone(),
        N::App(f, a) => N::App(Box::new(subst(f, x, v, fv, fresh)), Box::new(subst(a, x, v, fv, fresh))),
        N::Lam(y, d, b) | N::Pi(y, d, b) => {
            let d = Box::new(subst(d, x, v, fv, fresh));
            let (y, b) = if y == x {
                (y.clone(), b.clone())
            } else if fv.contains(y) {
                *fresh += 1;
                let z = format!("r{fresh}");
                let b = subst(b, y, &N::Var(z.clone()), &HashSet::from([z.clone()]), fresh);
                (z, Box::new(subst(&b, x, v, fv, fresh)))
            } else {
                (y.clone(), Box::new(subst(b, x, v, fv, fresh)))
            };
            match t {
                N::Lam(..) => N::Lam(y, d, b),
                _ => N::Pi(y, d, b),
            }
        }
    }
}

/// One leftmost head β-step, under leading abstractions.
pub fn step(t: &N, fresh: &mut usize) -> Option<N> {
    match t {
        N::Lam(x, d, b) => step(b, fresh).map(|b| N::Lam(x.clone(), d.clone(), Box::new(b))),
        N::App(f, a) => match &**f {
            N::Lam(x, _, b) => {
                let mut fv = HashSet::new();
                free_vars(a, &mut fv);
                Some(subst(b, x, a, &fv, fresh))
            }
            _ => step(f, fresh).map(|f| N::App(Box::new(f), a.clone())),
        },
        _ => None,
    }
}

/// Runs at most `max` steps and returns every state, the start included.
pub fn run(t: &N, max: usize) -> Vec<N> {
    let mut fresh = 0;
    let mut out = vec![t.clone()];
    while out.len() <= max {
        match step(out.last().unwrap(), &mut fresh) {
            Some(n) => out.push(n),
            None => break,
        }
    }
    out
}

pub fn alpha_eq(a: &N, b: &N) -> bool {
    fn go<'a>(a: &'a N, b: &'a N, env: &mut Vec<(&'a str, &'a str)>) -> bool {
        match (a, b) {
            (N::Var(x), N::Var(y)) => match env.iter().rev().find(|(l, r)| l == x || r == y) {
                Some((l, r)) => l == x && r == y,
                None => x == y,
            },
            (N::Con(x), N::Con(y)) | (N::Sort(x), N::Sort(y)) => x == y,
            (N::App(f, a), N::App(g, b)) => go(f, g, env) && go(a, b, env),
            (N::Lam(x, d, b), N::Lam(y, e, c)) | (N::Pi(x, d, b), N::Pi(y, e, c)) => {
                if !go(d, e, env) {
                    return false;
                }
                env.push((x, y));
                let ok = go(b, c, env);
                env.pop();
                ok
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}

/// Reduces from `targets[0]` and checks that every target shows up, in
/// order, at most `slack` oracle steps after the previous one. Returns the
/// step at which each target was met, or the index of the first miss.
pub fn follows(targets: &[N], slack: usize) -> Result<Vec<usize>, usize> {
    let mut fresh = 0;
    let mut cur = targets[0].clone();
    let mut at = 0;
    let mut hits = vec![0];
    for (k, target) in targets.iter().enumerate().skip(1) {
        let mut budget = slack;
        loop {
            if budget == 0 {
                return Err(k);
            }
            match step(&cur, &mut fresh) {
                Some(n) => cur = n,
                None => return Err(k),
            }
            at += 1;
            budget -= 1;
            if alpha_eq(&cur, target) {
                hits.push(at);
                break;
            }
        }
    }
    Ok(hits)
}

pub fn bundles() -> Vec<ParadoxBundle> {
    ParadoxId::ALL.into_iter().map(|id| corpus::build(id).expect("corpus builds")).collect()
}

/// Every closed term a bundle names: definition types and bodies, key terms
/// and the states of its golden trace.
pub fn corpus_terms(b: &ParadoxBundle) -> Vec<Term> {
    let env = b.env();
    let mut out = Vec::new();
    for e in env.entries() {
        match e {
            EnvEntry::Decl { ty, .. } => out.push(ty.clone()),
            EnvEntry::Def { ty, body, params: 0, .. } => {
                out.push(ty.clone());
                out.push(body.clone());
            }
            _ => {}
        }
    }
    out.extend(b.key_terms().into_iter().map(|(_, t)| t.clone()));
    out.extend(golden_states(b));
    out
}

pub fn golden_states(b: &ParadoxBundle) -> Vec<Term> {
    let n = b.id.golden_head_def().len() - 1;
    reduce::trace(b.env(), b.bottom_proof(), Strategy::HeadDef, n).steps.into_iter().map(|s| s.term).collect()
}

/// Reads the pending redexes of a machine state as `let`s, which is how the
/// linear machine treats them: a substituted occurrence only has its
/// expected type up to those definitions.
pub fn as_lets(t: &Term) -> Term {
    let (head, args) = t.spine();
    let rest = |from: usize| args[from..].iter().map(|a| a.shift(1)).collect::<Vec<_>>();
    match head {
        Term::Lam(h, d, b) if !args.is_empty() => Term::Let(
            h.clone(),
            d.clone(),
            args[0].clone().into(),
            as_lets(&Term::apps((**b).clone(), rest(1))).into(),
        ),
        Term::Let(h, a, d, b) => {
            Term::Let(h.clone(), a.clone(), d.clone(), as_lets(&Term::apps((**b).clone(), rest(0))).into())
        }
        Term::Lam(h, d, b) => Term::Lam(h.clone(), d.clone(), as_lets(b).into()),
        _ => t.clone(),
    }
}

/// Convertible pairs of terms in a shared context.
pub struct Probe {
    pub env: GlobalEnv,
    pub ctx: LocalCtx,
    pub a: Term,
    pub b: Term,
}

pub fn probes() -> Vec<Probe> {
    let mut out = Vec::new();
    for b in bundles() {
        let env = b.env().clone();
        // Consecutive trace states.
        let states = golden_states(&b);
        for w in states.windows(2) {
            out.push(Probe { env: env.clone(), ctx: LocalCtx::new(), a: w[0].clone(), b: w[1].clone() });
        }
        // Every `conv` directive of the development.
        for item in &b.dev.items {
            if let ItemKind::Conv { ctx, lhs, rhs } = &item.kind {
                let mut c = LocalCtx::new();
                for (n, ty) in ctx {
                    c.push(Hint::new(n), ty.clone());
                }
                out.push(Probe { env: env.clone(), ctx: c, a: lhs.clone(), b: rhs.clone() });
            }
        }
        // A definition against its own body.
        for name in ["l₁", "l₂", "x₀"] {
            if let Some(EnvEntry::Def { body, .. }) = env.get(name) {
                out.push(Probe {
                    env: env.clone(),
                    ctx: LocalCtx::new(),
                    a: Term::cnst(name),
                    b: body.clone(),
                });
            }
        }
    }
    out
}
