//! Global environments: declarations, transparent definitions and
//! left-linear rewrite rules, kept in declaration order.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::pts::PtsSpec;
use crate::term::{Name, Term};
use crate::typeck::{Kernel, LocalCtx, TypeError};

/// Argument position of a [`Pattern`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PatArg {
    Meta(Name),
    Rigid(Pattern),
}

/// A constant applied to metavariables and nested rigid patterns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub head: Name,
    pub args: Vec<PatArg>,
}

impl Pattern {
    pub fn new(head: &str, args: Vec<PatArg>) -> Pattern {
        Pattern { head: Arc::from(head), args }
    }

    pub fn meta(name: &str) -> PatArg {
        PatArg::Meta(Arc::from(name))
    }

    /// Metavariables in left-to-right order of occurrence.
    pub fn metas(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_metas(&mut out);
        out
    }

    fn collect_metas(&self, out: &mut Vec<Name>) {
        for a in &self.args {
            match a {
                PatArg::Meta(m) => out.push(m.clone()),
                PatArg::Rigid(p) => p.collect_metas(out),
            }
        }
    }

    pub fn is_left_linear(&self) -> bool {
        let ms = self.metas();
        ms.iter().enumerate().all(|(i, m)| !ms[..i].contains(m))
    }

    fn heads(&self, out: &mut Vec<Name>) {
        out.push(self.head.clone());
        for a in &self.args {
            if let PatArg::Rigid(p) = a {
                p.heads(out);
            }
        }
    }

    /// Syntactic matching: `t` must literally be the head constant applied to
    /// exactly the pattern's arguments. Returns the assignment in the order
    /// of [`Pattern::metas`].
    pub fn matches(&self, t: &Term) -> Option<Vec<(Name, Term)>> {
        let mut out = Vec::new();
        self.match_into(t, &mut out).then_some(out)
    }

    fn match_into(&self, t: &Term, out: &mut Vec<(Name, Term)>) -> bool {
        let (head, args) = t.spine();
        if !matches!(head, Term::Const(c) if *c == self.head) || args.len() != self.args.len() {
            return false;
        }
        self.args.iter().zip(args).all(|(p, a)| match p {
            PatArg::Meta(m) => {
                out.push((m.clone(), a.clone()));
                true
            }
            PatArg::Rigid(q) => q.match_into(a, out),
        })
    }

    /// The term `head args` with metavariable `j` (in occurrence order) as
    /// `Var(n - 1 - j)`, `n` being the number of metavariables.
    pub fn to_term(&self) -> Term {
        let n = self.metas().len();
        let mut next = 0;
        self.build(n, &mut next)
    }

    fn build(&self, n: usize, next: &mut usize) -> Term {
        let args = self.args.iter().map(|a| match a {
            PatArg::Meta(m) => {
                let t = Term::var(n - 1 - *next, &format!("${m}"));
                *next += 1;
                t
            }
            PatArg::Rigid(p) => p.build(n, next),
        });
        let args: Vec<Term> = args.collect();
        Term::apps(Term::Const(self.head.clone()), args)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head)?;
        for a in &self.args {
            match a {
                PatArg::Meta(m) => write!(f, " ${m}")?,
                PatArg::Rigid(p) if p.args.is_empty() => write!(f, " {p}")?,
                PatArg::Rigid(p) => write!(f, " ({p})")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub name: Name,
    pub lhs: Pattern,
    /// Right-hand side in the context of the lhs metavariables: metavariable
    /// `j` of [`Pattern::metas`] is `Var(n - 1 - j)`.
    pub rhs: Term,
}

impl RewriteRule {
    pub fn arity(&self) -> usize {
        self.lhs.args.len()
    }

    /// Right-hand side with the metavariables replaced by `values` (given in
    /// occurrence order).
    pub fn instantiate(&self, values: &[Term]) -> Term {
        let by_index: Vec<Term> = values.iter().rev().cloned().collect();
        self.rhs.instantiate(&by_index)
    }
}

#[derive(Clone, Debug)]
pub enum EnvEntry {
    Decl {
        name: Name,
        ty: Term,
    },
    /// `params` leading binders of `ty` and `body` are parameters: they are
    /// checked as a telescope and the product type itself is never required
    /// to be well-sorted.
    Def {
        name: Name,
        ty: Term,
        body: Term,
        params: usize,
    },
    Rewrite(RewriteRule),
}

impl EnvEntry {
    pub fn decl(name: &str, ty: Term) -> EnvEntry {
        EnvEntry::Decl { name: Arc::from(name), ty }
    }

    pub fn def(name: &str, ty: Term, body: Term) -> EnvEntry {
        EnvEntry::Def { name: Arc::from(name), ty, body, params: 0 }
    }

    pub fn def_with_params(name: &str, params: usize, ty: Term, body: Term) -> EnvEntry {
        EnvEntry::Def { name: Arc::from(name), ty, body, params }
    }

    pub fn rewrite(name: &str, lhs: Pattern, rhs: Term) -> EnvEntry {
        EnvEntry::Rewrite(RewriteRule { name: Arc::from(name), lhs, rhs })
    }

    pub fn name(&self) -> &Name {
        match self {
            EnvEntry::Decl { name, .. } | EnvEntry::Def { name, .. } => name,
            EnvEntry::Rewrite(r) => &r.name,
        }
    }

    /// Type of a declared or defined constant.
    pub fn ty(&self) -> Option<&Term> {
        match self {
            EnvEntry::Decl { ty, .. } | EnvEntry::Def { ty, .. } => Some(ty),
            EnvEntry::Rewrite(_) => None,
        }
    }
}

/// Which part of an entry failed to check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryPart {
    Param(usize),
    Type,
    Body,
    Lhs,
    Rhs,
}

impl fmt::Display for EntryPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryPart::Param(i) => write!(f, "parameter {}", i + 1),
            EntryPart::Type => f.write_str("type"),
            EntryPart::Body => f.write_str("body"),
            EntryPart::Lhs => f.write_str("left-hand side"),
            EntryPart::Rhs => f.write_str("right-hand side"),
        }
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum EnvError {
    #[error("duplicate name `{0}`")]
    DuplicateName(Name),
    #[error("`{entry}` is ill-typed in its {part}: {error}")]
    IllTyped { entry: Name, part: EntryPart, error: Box<TypeError> },
    #[error("ill-formed pattern in `{entry}`: {reason}")]
    IllFormedPattern { entry: Name, reason: String },
    #[error("unknown constant `{0}`")]
    UnknownConstant(Name),
}

impl EnvError {
    pub fn type_error(&self) -> Option<&TypeError> {
        match self {
            EnvError::IllTyped { error, .. } => Some(error),
            _ => None,
        }
    }
}

#[derive(Debug)]
struct Slot {
    entry: EnvEntry,
    unfolded: OnceLock<Term>,
}

/// An ordered, persistent global environment. Extension returns a new value;
/// the old one stays valid.
#[derive(Clone, Debug)]
pub struct GlobalEnv {
    spec: PtsSpec,
    slots: Vec<Arc<Slot>>,
    index: HashMap<Name, usize>,
    rules: HashMap<Name, Vec<usize>>,
}

impl GlobalEnv {
    pub fn new(spec: PtsSpec) -> GlobalEnv {
        GlobalEnv { spec, slots: Vec::new(), index: HashMap::new(), rules: HashMap::new() }
    }

    pub fn spec(&self) -> &PtsSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &EnvEntry> {
        self.slots.iter().map(|s| &s.entry)
    }

    pub fn lookup(&self, name: &str) -> Result<&EnvEntry, EnvError> {
        self.position(name)
            .map(|i| &self.slots[i].entry)
            .ok_or_else(|| EnvError::UnknownConstant(Arc::from(name)))
    }

    pub fn get(&self, name: &str) -> Option<&EnvEntry> {
        self.position(name).map(|i| &self.slots[i].entry)
    }

    /// Declaration index of a name; later entries have larger positions.
    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn rules_for(&self, head: &str) -> impl Iterator<Item = &RewriteRule> {
        self.rules.get(head).into_iter().flatten().filter_map(|&i| match &self.slots[i].entry {
            EnvEntry::Rewrite(r) => Some(r),
            _ => None,
        })
    }

    pub fn rule_count(&self) -> usize {
        self.rules.values().map(Vec::len).sum()
    }

    /// Same entries under a different signature. Nothing is re-checked.
    pub fn with_spec(&self, spec: PtsSpec) -> GlobalEnv {
        GlobalEnv { spec, ..self.clone() }
    }

    /// Checks `entry` against the current environment and returns the
    /// extended environment.
    pub fn add(&self, entry: EnvEntry) -> Result<GlobalEnv, EnvError> {
        let name = entry.name().clone();
        if self.index.contains_key(&name) {
            return Err(EnvError::DuplicateName(name));
        }
        self.check_entry(&entry)?;
        Ok(self.push_unchecked(entry))
    }

    /// Appends without checking. Used for erased environments, whose terms
    /// are untyped by construction.
    pub fn push_unchecked(&self, entry: EnvEntry) -> GlobalEnv {
        let mut out = self.clone();
        let pos = out.slots.len();
        out.index.insert(entry.name().clone(), pos);
        if let EnvEntry::Rewrite(r) = &entry {
            out.rules.entry(r.lhs.head.clone()).or_default().push(pos);
        }
        out.slots.push(Arc::new(Slot { entry, unfolded: OnceLock::new() }));
        out
    }

    fn check_entry(&self, entry: &EnvEntry) -> Result<(), EnvError> {
        let kernel = Kernel::new(self);
        let ill = |part, error: TypeError| EnvError::IllTyped {
            entry: entry.name().clone(),
            part,
            error: Box::new(error),
        };
        match entry {
            EnvEntry::Decl { ty, .. } => {
                kernel.sort_of(&mut LocalCtx::new(), ty).map_err(|e| ill(EntryPart::Type, e))?;
            }
            EnvEntry::Def { ty, body, params, .. } => {
                let mut ctx = LocalCtx::new();
                let (mut ty, mut body) = (ty, body);
                for i in 0..*params {
                    match (ty, body) {
                        (Term::Pi(h, d, cod), Term::Lam(_, d2, b)) if d == d2 => {
                            kernel.sort_of(&mut ctx, d).map_err(|e| ill(EntryPart::Param(i), e))?;
                            ctx.push(h.clone(), (**d).clone());
                            ty = cod;
                            body = b;
                        }
                        _ => {
                            return Err(EnvError::IllFormedPattern {
                                entry: entry.name().clone(),
                                reason: format!("parameter {} is missing from type or body", i + 1),
                            })
                        }
                    }
                }
                kernel.sort_of(&mut ctx, ty).map_err(|e| ill(EntryPart::Type, e))?;
                kernel.check(&mut ctx, body, ty).map_err(|e| ill(EntryPart::Body, e))?;
            }
            EnvEntry::Rewrite(rule) => self.check_rule(&kernel, rule)?,
        }
        Ok(())
    }

    fn check_rule(&self, kernel: &Kernel<'_>, rule: &RewriteRule) -> Result<(), EnvError> {
        let bad = |reason: String| EnvError::IllFormedPattern { entry: rule.name.clone(), reason };
        if !rule.lhs.is_left_linear() {
            return Err(bad("metavariables must be pairwise distinct".into()));
        }
        let mut heads = Vec::new();
        rule.lhs.heads(&mut heads);
        for h in &heads {
            match self.get(h) {
                Some(EnvEntry::Decl { .. }) => {}
                Some(_) => return Err(bad(format!("`{h}` is not a declared constant"))),
                None => return Err(EnvError::UnknownConstant(h.clone())),
            }
        }
        let metas = rule.lhs.metas();
        let n = metas.len();
        if !rule.rhs.is_closed_under(n) {
            return Err(bad("right-hand side mentions an unbound variable".into()));
        }

        // Infer metavariable types from their positions in the lhs. Types are
        // computed in the context of all `n` metavariables, then lowered.
        let mut blank = LocalCtx::new();
        for m in &metas {
            blank.push(m.as_ref().into(), Term::Erased);
        }
        let mut meta_tys: Vec<Option<Term>> = vec![None; n];
        let mut next = 0;
        let lhs_ty = self.pattern_type(kernel, &blank, &rule.lhs, n, &mut next, &mut meta_tys).map_err(
            |e| match e {
                PatternTypeError::Type(e) => {
                    EnvError::IllTyped { entry: rule.name.clone(), part: EntryPart::Lhs, error: Box::new(e) }
                }
                PatternTypeError::Other(reason) => bad(reason),
            },
        )?;
        let mut ctx = LocalCtx::new();
        for (j, (m, ty)) in metas.iter().zip(meta_tys).enumerate() {
            let ty = ty
                .expect("every metavariable is visited")
                .unshift(n - j)
                .ok_or_else(|| bad(format!("type of ${m} depends on a later metavariable")))?;
            ctx.push(format!("${m}").as_str().into(), ty);
        }
        let rhs_ty = kernel.infer(&mut ctx, &rule.rhs).map_err(|e| EnvError::IllTyped {
            entry: rule.name.clone(),
            part: EntryPart::Rhs,
            error: Box::new(e),
        })?;
        kernel.expect_convertible(&mut ctx, &rhs_ty, &lhs_ty).map_err(|e| EnvError::IllTyped {
            entry: rule.name.clone(),
            part: EntryPart::Rhs,
            error: Box::new(e),
        })?;
        Ok(())
    }

    fn pattern_type(
        &self,
        kernel: &Kernel<'_>,
        ctx: &LocalCtx,
        p: &Pattern,
        n: usize,
        next: &mut usize,
        meta_tys: &mut [Option<Term>],
    ) -> Result<Term, PatternTypeError> {
        let mut ty = self
            .lookup(&p.head)
            .map_err(|e| PatternTypeError::Other(e.to_string()))?
            .ty()
            .cloned()
            .ok_or_else(|| PatternTypeError::Other(format!("`{}` has no type", p.head)))?;
        for arg in &p.args {
            let (dom, cod) = match kernel.whnf_in(ctx, &ty).map_err(PatternTypeError::Type)? {
                Term::Pi(_, d, c) => ((*d).clone(), (*c).clone()),
                _ => {
                    return Err(PatternTypeError::Other(format!(
                        "`{}` is applied to too many arguments",
                        p.head
                    )))
                }
            };
            let arg_term = match arg {
                PatArg::Meta(m) => {
                    let j = *next;
                    *next += 1;
                    meta_tys[j] = Some(dom);
                    Term::var(n - 1 - j, &format!("${m}"))
                }
                PatArg::Rigid(q) => {
                    let start = *next;
                    let qty = self.pattern_type(kernel, ctx, q, n, next, meta_tys)?;
                    if !kernel.convert_in(ctx, &qty, &dom).map_err(PatternTypeError::Type)? {
                        return Err(PatternTypeError::Other(format!(
                            "argument `{q}` does not have the expected type"
                        )));
                    }
                    let mut k = start;
                    q.build(n, &mut k)
                }
            };
            ty = cod.subst(&arg_term);
        }
        Ok(ty)
    }

    /// Expands every definition and every `let`. The result mentions only
    /// declared constants. Idempotent.
    pub fn unfold_all(&self, t: &Term) -> Result<Term, EnvError> {
        Ok(match t {
            Term::Sort(_) | Term::Var(..) | Term::Erased => t.clone(),
            Term::Const(c) => {
                let i = self.position(c).ok_or_else(|| EnvError::UnknownConstant(c.clone()))?;
                let slot = &self.slots[i];
                match &slot.entry {
                    EnvEntry::Def { body, .. } => {
                        if let Some(u) = slot.unfolded.get() {
                            return Ok(u.clone());
                        }
                        let u = self.unfold_all(body)?;
                        slot.unfolded.get_or_init(|| u).clone()
                    }
                    _ => t.clone(),
                }
            }
            Term::App(f, a) => Term::app(self.unfold_all(f)?, self.unfold_all(a)?),
            Term::Lam(h, d, b) => {
                Term::Lam(h.clone(), Arc::new(self.unfold_all(d)?), Arc::new(self.unfold_all(b)?))
            }
            Term::Pi(h, d, b) => {
                Term::Pi(h.clone(), Arc::new(self.unfold_all(d)?), Arc::new(self.unfold_all(b)?))
            }
            Term::Let(_, _, d, b) => self.unfold_all(b)?.subst(&self.unfold_all(d)?),
        })
    }
}

enum PatternTypeError {
    Type(TypeError),
    Other(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Sort;

    fn star() -> Term {
        Term::sort(Sort::Star)
    }

    fn bx() -> Term {
        Term::sort(Sort::Box)
    }

    fn intro_match_env() -> GlobalEnv {
        // A : #, F : # (stands in for T A), intro : F -> A, match : A -> F
        let env = GlobalEnv::new(PtsSpec::lambda_hol());
        let env = env.add(EnvEntry::decl("A", bx())).unwrap();
        let env = env.add(EnvEntry::decl("F", bx())).unwrap();
        let env = env.add(EnvEntry::decl("intro", Term::arrow(Term::cnst("F"), Term::cnst("A")))).unwrap();
        env.add(EnvEntry::decl("match", Term::arrow(Term::cnst("A"), Term::cnst("F")))).unwrap()
    }

    fn retract_rule() -> EnvEntry {
        let lhs = Pattern::new("match", vec![PatArg::Rigid(Pattern::new("intro", vec![Pattern::meta("u")]))]);
        EnvEntry::rewrite("retract", lhs, Term::var(0, "$u"))
    }

    #[test]
    fn pow_as_parametric_definition() {
        // Pow : # -> # := fun (X : #) => X -> *
        let env = GlobalEnv::new(PtsSpec::lambda_hol());
        let ty = Term::pi("X", bx(), bx());
        let body = Term::lam("X", bx(), Term::arrow(Term::var(0, "X"), star()));
        assert!(env.add(EnvEntry::def_with_params("Pow", 1, ty.clone(), body.clone())).is_ok());
        // As an ordinary definition the product # -> # needs rule (##, ##).
        assert!(env.add(EnvEntry::def("Pow", ty, body)).is_err());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let env = intro_match_env();
        let err = env.add(EnvEntry::decl("A", bx())).unwrap_err();
        assert!(matches!(err, EnvError::DuplicateName(n) if &*n == "A"));
    }

    #[test]
    fn ill_typed_declaration_in_hol() {
        let env = GlobalEnv::new(PtsSpec::lambda_hol());
        let ty = Term::pi("X", bx(), Term::var(0, "X"));
        let err = env.add(EnvEntry::decl("bad", ty)).unwrap_err();
        let te = err.type_error().expect("type error");
        assert_eq!(te.kind, crate::typeck::TypeErrorKind::NoRule(Sort::Triangle, Sort::Box));
    }

    #[test]
    fn retract_rule_checks() {
        let env = intro_match_env().add(retract_rule()).unwrap();
        assert_eq!(env.rule_count(), 1);
        assert_eq!(env.rules_for("match").count(), 1);
    }

    #[test]
    fn rule_with_non_linear_lhs() {
        let env = GlobalEnv::new(PtsSpec::lambda_hol());
        let env = env.add(EnvEntry::decl("A", bx())).unwrap();
        let env = env.add(EnvEntry::decl("a", Term::cnst("A"))).unwrap();
        let f_ty = Term::arrow(Term::cnst("A"), Term::arrow(Term::cnst("A"), Term::cnst("A")));
        let env = env.add(EnvEntry::decl("f", f_ty)).unwrap();
        let lhs = Pattern::new("f", vec![Pattern::meta("x"), Pattern::meta("x")]);
        let err = env.add(EnvEntry::rewrite("dup", lhs, Term::cnst("a"))).unwrap_err();
        assert!(matches!(err, EnvError::IllFormedPattern { .. }));
    }

    #[test]
    fn rule_rhs_type_must_match() {
        let env = intro_match_env();
        let lhs = Pattern::new("match", vec![PatArg::Rigid(Pattern::new("intro", vec![Pattern::meta("u")]))]);
        // rhs `intro $u : A`, but lhs has type F
        let rhs = Term::app(Term::cnst("intro"), Term::var(0, "$u"));
        let err = env.add(EnvEntry::rewrite("bad", lhs, rhs)).unwrap_err();
        assert!(matches!(err, EnvError::IllTyped { part: EntryPart::Rhs, .. }));
    }

    #[test]
    fn rule_rhs_unbound() {
        let env = intro_match_env();
        let lhs = Pattern::new("match", vec![Pattern::meta("u")]);
        let err = env.add(EnvEntry::rewrite("bad", lhs, Term::var(1, "?"))).unwrap_err();
        assert!(matches!(err, EnvError::IllFormedPattern { .. }));
    }

    #[test]
    fn lookup() {
        let env = intro_match_env();
        assert!(matches!(env.lookup("A"), Ok(EnvEntry::Decl { ty, .. }) if *ty == bx()));
        let empty = GlobalEnv::new(PtsSpec::lambda_hol());
        assert!(matches!(empty.lookup("x"), Err(EnvError::UnknownConstant(_))));
    }

    #[test]
    fn syntactic_pattern_matching() {
        let p = Pattern::new("match", vec![PatArg::Rigid(Pattern::new("intro", vec![Pattern::meta("u")]))]);
        let t = Term::app(Term::cnst("match"), Term::app(Term::cnst("intro"), Term::cnst("X₀")));
        let got = p.matches(&t).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(&*got[0].0, "u");
        assert_eq!(got[0].1, Term::cnst("X₀"));
        // folded argument: heads differ
        assert!(p.matches(&Term::app(Term::cnst("match"), Term::cnst("x₀"))).is_none());
        assert!(p.matches(&Term::app(Term::cnst("intro"), Term::cnst("X₀"))).is_none());
    }

    #[test]
    fn unfold_all_expands_definitions_and_lets() {
        let env = intro_match_env();
        let env = env.add(EnvEntry::decl("u", Term::cnst("F"))).unwrap();
        let x0 = Term::app(Term::cnst("intro"), Term::cnst("u"));
        let env = env.add(EnvEntry::def("x0", Term::cnst("A"), x0.clone())).unwrap();
        assert_eq!(env.unfold_all(&Term::cnst("x0")).unwrap(), x0);
        assert_eq!(env.unfold_all(&Term::cnst("A")).unwrap(), Term::cnst("A"));
        let l = Term::let_in("x", Term::cnst("A"), Term::cnst("x0"), Term::var(0, "x"));
        assert_eq!(env.unfold_all(&l).unwrap(), x0);
        assert!(matches!(env.unfold_all(&Term::cnst("nope")), Err(EnvError::UnknownConstant(_))));
    }
}
