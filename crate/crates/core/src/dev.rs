//! Loading development files: every directive is elaborated and checked in
//! order, and each judgment gets a line in the report.

use std::fmt;

use crate::env::{EnvEntry, EnvError, GlobalEnv};
use crate::parse::{parse_document, pattern_of, Binder, Directive, Elaborator, ParseError, Pos};
use crate::pts::{PresetId, PtsSpec};
use crate::term::{Sort, Term};
use crate::typeck::{Kernel, LocalCtx, TypeError};

#[derive(Clone, Debug)]
pub enum ItemKind {
    System(PresetId),
    Axiom(Sort, Sort),
    Rule(Sort, Sort, Sort),
    Entry(EnvEntry),
    Check {
        term: Term,
        ty: Term,
    },
    /// Context binders (outermost first) and the two sides.
    Conv {
        ctx: Vec<(String, Term)>,
        lhs: Term,
        rhs: Term,
    },
    Trace {
        name: String,
        ty: Option<Term>,
        term: Term,
    },
    /// Elaboration failed before anything could be checked.
    Invalid,
}

#[derive(Clone, Debug)]
pub enum Failure {
    Env(EnvError),
    Type(TypeError),
    NotConvertible,
    Elab(ParseError),
    Signature(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Env(e) => write!(f, "{e}"),
            Failure::Type(e) => write!(f, "{e}"),
            Failure::NotConvertible => f.write_str("not convertible"),
            Failure::Elab(e) => write!(f, "{e}"),
            Failure::Signature(s) => f.write_str(s),
        }
    }
}

impl Failure {
    /// The underlying type error, if the failure is one.
    pub fn type_error(&self) -> Option<&TypeError> {
        match self {
            Failure::Env(e) => e.type_error(),
            Failure::Type(e) => Some(e),
            Failure::Elab(e) => e.type_error.as_deref(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Item {
    pub pos: Pos,
    pub keyword: &'static str,
    /// Entry or trace name; empty for anonymous judgments.
    pub label: String,
    pub kind: ItemKind,
    pub outcome: Result<(), Failure>,
    /// Environment the item was checked in, kept for rendering failures.
    env: GlobalEnv,
}

impl Item {
    pub fn failure(&self) -> Option<&Failure> {
        self.outcome.as_ref().err()
    }

    fn render_failure(&self, f: &Failure, raw: bool) -> String {
        match f.type_error() {
            Some(te) => {
                let head = match f {
                    Failure::Env(EnvError::IllTyped { entry, part, .. }) => {
                        format!("`{entry}` is ill-typed in its {part}: ")
                    }
                    _ => String::new(),
                };
                format!("{head}{}", te.render(&self.env, raw))
            }
            None => f.to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Development {
    pub env: GlobalEnv,
    pub items: Vec<Item>,
}

impl Development {
    pub fn ok(&self) -> bool {
        self.items.iter().all(|i| i.outcome.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Item> {
        self.items.iter().filter(|i| i.outcome.is_err())
    }

    /// Named terms from `trace` directives that checked.
    pub fn traces(&self) -> impl Iterator<Item = (&str, &Term)> {
        self.items.iter().filter_map(|i| match (&i.kind, &i.outcome) {
            (ItemKind::Trace { name, term, .. }, Ok(())) => Some((name.as_str(), term)),
            _ => None,
        })
    }

    pub fn trace(&self, name: &str) -> Option<&Term> {
        self.traces().find(|(n, _)| *n == name).map(|(_, t)| t)
    }

    /// One line per judgment, failures followed by their explanation.
    pub fn report(&self, raw: bool) -> String {
        let mut out = String::new();
        for item in &self.items {
            let status = if item.outcome.is_ok() { "ok  " } else { "FAIL" };
            let label = if item.label.is_empty() { String::new() } else { format!(" {}", item.label) };
            out.push_str(&format!("{status} {} {}{label}\n", item.pos, item.keyword));
            if let Err(f) = &item.outcome {
                for line in item.render_failure(f, raw).lines() {
                    out.push_str("     ");
                    out.push_str(line);
                    out.push('\n');
                }
            }
        }
        out
    }
}

/// Parses and checks a development. Syntax errors abort; typing failures are
/// recorded per directive and later directives are still processed.
/// `system` overrides any signature given in the file.
pub fn load(src: &str, system: Option<PresetId>) -> Result<Development, ParseError> {
    let directives = parse_document(src)?;
    let mut env = GlobalEnv::new(system.unwrap_or(PresetId::LambdaHol).spec());
    let mut custom: Option<PtsSpec> = None;
    let mut items = Vec::new();
    for (d, pos) in directives {
        let keyword = d.keyword();
        let (label, kind, outcome) = step(&mut env, &mut custom, system, d);
        items.push(Item { pos, keyword, label, kind, outcome, env: env.clone() });
    }
    Ok(Development { env, items })
}

type Step = (String, ItemKind, Result<(), Failure>);

fn step(env: &mut GlobalEnv, custom: &mut Option<PtsSpec>, system: Option<PresetId>, d: Directive) -> Step {
    let signature_closed = |env: &GlobalEnv| {
        if env.is_empty() {
            Ok(())
        } else {
            Err(Failure::Signature("the signature must be fixed before the first entry".into()))
        }
    };
    match d {
        Directive::System(name) => match name.parse::<PresetId>() {
            Ok(p) => {
                let outcome = signature_closed(env);
                if outcome.is_ok() && system.is_none() {
                    *env = env.with_spec(p.spec());
                    *custom = None;
                }
                (name, ItemKind::System(p), outcome)
            }
            Err(e) => (name, ItemKind::Invalid, Err(Failure::Signature(e))),
        },
        Directive::Axiom(s, t) => {
            let r = signature_closed(env).and_then(|_| {
                let spec = custom.get_or_insert_with(PtsSpec::empty);
                spec.add_axiom(s, t).map_err(|e| Failure::Signature(e.to_string()))
            });
            if r.is_ok() && system.is_none() {
                *env = env.with_spec(custom.clone().expect("set above"));
            }
            (String::new(), ItemKind::Axiom(s, t), r)
        }
        Directive::Rule(s1, s2, s3) => {
            let r = signature_closed(env).and_then(|_| {
                let spec = custom.get_or_insert_with(PtsSpec::empty);
                spec.add_rule(s1, s2, s3).map_err(|e| Failure::Signature(e.to_string()))
            });
            if r.is_ok() && system.is_none() {
                *env = env.with_spec(custom.clone().expect("set above"));
            }
            (String::new(), ItemKind::Rule(s1, s2, s3), r)
        }
        Directive::Const { name, ty } => {
            let entry = Elaborator::new(env).elab(&ty).map(|ty| EnvEntry::decl(&name, ty));
            add_entry(env, name, entry)
        }
        Directive::Def { name, params, ty, body } => {
            let entry = elab_def(env, &name, &params, &ty, &body);
            add_entry(env, name, entry)
        }
        Directive::Rewrite { name, lhs, rhs } => {
            let entry = pattern_of(&lhs).and_then(|lhs| {
                let mut el = Elaborator::new(env);
                for m in lhs.metas() {
                    el.push(&format!("${m}"), Term::Erased);
                }
                let rhs = el.elab(&rhs)?;
                Ok(EnvEntry::rewrite(&name, lhs, rhs))
            });
            add_entry(env, name, entry)
        }
        Directive::Check { term, ty } => {
            let mut el = Elaborator::new(env);
            let elab = el.elab(&term).and_then(|t| Ok((t, el.elab(&ty)?)));
            match elab {
                Ok((term, ty)) => {
                    let r = check(env, &mut LocalCtx::new(), &term, &ty);
                    (String::new(), ItemKind::Check { term, ty }, r)
                }
                Err(e) => (String::new(), ItemKind::Invalid, Err(Failure::Elab(e))),
            }
        }
        Directive::Conv { ctx, lhs, rhs } => {
            let mut el = Elaborator::new(env);
            let elab = (|| {
                let binders = el.push_binders(&ctx)?;
                Ok((binders, el.elab(&lhs)?, el.elab(&rhs)?))
            })();
            match elab {
                Ok((binders, lhs, rhs)) => {
                    let r = conv(env, el.ctx(), &binders, &lhs, &rhs);
                    (String::new(), ItemKind::Conv { ctx: binders, lhs, rhs }, r)
                }
                Err(e) => (String::new(), ItemKind::Invalid, Err(Failure::Elab(e))),
            }
        }
        Directive::Trace { name, ty, term } => {
            let mut el = Elaborator::new(env);
            let elab = (|| {
                let term = el.elab(&term)?;
                let ty = ty.as_ref().map(|t| el.elab(t)).transpose()?;
                Ok((term, ty))
            })();
            match elab {
                Ok((term, ty)) => {
                    let mut ctx = LocalCtx::new();
                    let kernel = Kernel::new(env);
                    let r = match &ty {
                        Some(ty) => check(env, &mut ctx, &term, ty),
                        None => kernel.infer(&mut ctx, &term).map(|_| ()).map_err(Failure::Type),
                    };
                    (name.clone(), ItemKind::Trace { name, ty, term }, r)
                }
                Err(e) => (name, ItemKind::Invalid, Err(Failure::Elab(e))),
            }
        }
    }
}

fn elab_def(
    env: &GlobalEnv,
    name: &str,
    params: &[Binder],
    ty: &crate::parse::Expr,
    body: &crate::parse::Expr,
) -> Result<EnvEntry, ParseError> {
    let mut el = Elaborator::new(env);
    let ps = el.push_binders(params)?;
    let mut ty = el.elab(ty)?;
    let mut body = el.elab(body)?;
    for (x, d) in ps.iter().rev() {
        ty = Term::pi(x, d.clone(), ty);
        body = Term::lam(x, d.clone(), body);
    }
    Ok(EnvEntry::def_with_params(name, ps.len(), ty, body))
}

fn add_entry(env: &mut GlobalEnv, name: String, entry: Result<EnvEntry, ParseError>) -> Step {
    match entry {
        Ok(entry) => match env.add(entry.clone()) {
            Ok(next) => {
                *env = next;
                (name, ItemKind::Entry(entry), Ok(()))
            }
            Err(e) => (name, ItemKind::Entry(entry), Err(Failure::Env(e))),
        },
        Err(e) => (name, ItemKind::Invalid, Err(Failure::Elab(e))),
    }
}

fn check(env: &GlobalEnv, ctx: &mut LocalCtx, term: &Term, ty: &Term) -> Result<(), Failure> {
    let kernel = Kernel::new(env);
    kernel.sort_of(ctx, ty).map_err(Failure::Type)?;
    kernel.check(ctx, term, ty).map_err(Failure::Type)
}

fn conv(
    env: &GlobalEnv,
    ctx: &LocalCtx,
    binders: &[(String, Term)],
    lhs: &Term,
    rhs: &Term,
) -> Result<(), Failure> {
    let kernel = Kernel::new(env);
    // The context itself must be well formed.
    let mut c = LocalCtx::new();
    for (x, ty) in binders {
        kernel.sort_of(&mut c, ty).map_err(Failure::Type)?;
        c.push(x.as_str().into(), ty.clone());
    }
    // Both sides must be well typed; conversion alone would accept `x = x`
    // for any garbage `x`.
    for side in [lhs, rhs] {
        kernel.infer(&mut c, side).map_err(Failure::Type)?;
    }
    match kernel.convert_in(ctx, lhs, rhs) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Failure::NotConvertible),
        Err(e) => Err(Failure::Type(e)),
    }
}
