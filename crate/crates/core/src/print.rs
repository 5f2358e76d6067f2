//! Canonical printing.
//!
//! Application is left-associative and space separated, parentheses appear
//! only where the grammar needs them, sorts print as `*`, `#`, `##`. A
//! non-dependent product prints as an arrow; a dependent one as `Π` when its
//! domain is `#` or `##` and as `∀` otherwise.
//!
//! The folding printer first expands every definition and then folds back
//! every closed subterm that is the expansion of a definition (later
//! definitions win) or that matches a notation such as composition.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::env::{EnvEntry, GlobalEnv};
use crate::term::{alpha_hash, Name, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    /// `λ ∀ Π → ∘`, used for displays and traces.
    Unicode,
    /// `fun forall Pi -> <<`, used for development files.
    Ascii,
}

/// Pattern language for notations. `Bound(k)` refers to the k-th innermost
/// binder introduced by the pattern itself; metavariables may not mention
/// those binders.
#[derive(Clone, Debug)]
pub enum NotationPat {
    Meta(usize),
    Bound(usize),
    Const(Name),
    App(Box<NotationPat>, Box<NotationPat>),
    Lam(Box<NotationPat>, Box<NotationPat>),
}

#[derive(Clone, Debug)]
pub enum Piece {
    Text {
        unicode: &'static str,
        ascii: &'static str,
    },
    /// A metavariable printed at the given precedence level.
    Meta {
        index: usize,
        level: u8,
    },
}

#[derive(Clone, Debug)]
pub struct Notation {
    pub name: String,
    pub pattern: NotationPat,
    pub template: Vec<Piece>,
    /// Precedence of the whole notation.
    pub level: u8,
}

const LEVEL_BINDER: u8 = 0;
const LEVEL_ARROW: u8 = 1;
const LEVEL_COMP: u8 = 2;
const LEVEL_APP: u8 = 3;
const LEVEL_ATOM: u8 = 4;

impl Notation {
    /// `g∘f ≙ λx:X. g (f x)`.
    pub fn composition() -> Notation {
        use NotationPat::*;
        Notation {
            name: "composition".into(),
            pattern: Lam(
                Box::new(Meta(0)),
                Box::new(App(Box::new(Meta(1)), Box::new(App(Box::new(Meta(2)), Box::new(Bound(0)))))),
            ),
            template: vec![
                Piece::Meta { index: 1, level: LEVEL_APP },
                Piece::Text { unicode: "∘", ascii: " << " },
                Piece::Meta { index: 2, level: LEVEL_COMP },
            ],
            level: LEVEL_COMP,
        }
    }

    fn metas(&self) -> usize {
        fn count(p: &NotationPat) -> usize {
            match p {
                NotationPat::Meta(i) => i + 1,
                NotationPat::Bound(_) | NotationPat::Const(_) => 0,
                NotationPat::App(a, b) | NotationPat::Lam(a, b) => count(a).max(count(b)),
            }
        }
        count(&self.pattern)
    }

    /// Matches `t`; metavariable values are returned at the depth of `t`.
    pub fn matches(&self, t: &Term) -> Option<Vec<Term>> {
        let mut out = vec![None; self.metas()];
        if match_pat(&self.pattern, t, 0, &mut out) {
            out.into_iter().collect()
        } else {
            None
        }
    }
}

fn match_pat(p: &NotationPat, t: &Term, depth: usize, out: &mut [Option<Term>]) -> bool {
    match (p, t) {
        (NotationPat::Meta(_), Term::Erased) => false,
        (NotationPat::Meta(i), _) => match t.unshift(depth) {
            Some(v) => match &out[*i] {
                Some(prev) => *prev == v,
                None => {
                    out[*i] = Some(v);
                    true
                }
            },
            None => false,
        },
        (NotationPat::Bound(k), Term::Var(i, _)) => k == i,
        (NotationPat::Const(c), Term::Const(d)) => c == d,
        (NotationPat::App(pf, pa), Term::App(f, a)) => {
            match_pat(pf, f, depth, out) && match_pat(pa, a, depth, out)
        }
        (NotationPat::Lam(pd, pb), Term::Lam(_, d, b)) => {
            match_pat(pd, d, depth, out) && match_pat(pb, b, depth + 1, out)
        }
        _ => false,
    }
}

/// Index from expanded definition bodies back to their names.
struct Folder {
    by_hash: HashMap<u64, Vec<(Term, Name)>>,
}

impl Folder {
    fn new(env: &GlobalEnv) -> Folder {
        let mut by_hash: HashMap<u64, Vec<(Term, Name)>> = HashMap::new();
        // Later definitions first, so they win ties.
        let defs: Vec<Name> = env
            .entries()
            .filter_map(|e| match e {
                EnvEntry::Def { name, .. } => Some(name.clone()),
                _ => None,
            })
            .collect();
        for name in defs.into_iter().rev() {
            if let Ok(u) = env.unfold_all(&Term::Const(name.clone())) {
                if matches!(u, Term::Const(_) | Term::Sort(_)) {
                    // Aliases would rename every occurrence of their target.
                    continue;
                }
                by_hash.entry(alpha_hash(&u)).or_default().push((u, name));
            }
        }
        Folder { by_hash }
    }

    fn lookup(&self, t: &Term) -> Option<&Name> {
        let bucket = self.by_hash.get(&alpha_hash(t))?;
        bucket.iter().find(|(u, _)| u == t).map(|(_, n)| n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// Print the term as it is.
    AsIs,
    /// Expand definitions first, print the expansion.
    Raw,
    /// Expand, then fold definitions and notations back.
    Folded,
}

pub struct Printer<'e> {
    env: Option<&'e GlobalEnv>,
    mode: Mode,
    style: Style,
    notations: Vec<Notation>,
    folder: Option<Folder>,
    reserved: HashSet<String>,
}

impl<'e> Printer<'e> {
    fn build(env: Option<&'e GlobalEnv>, mode: Mode, style: Style, notations: bool) -> Printer<'e> {
        let reserved = env.map(|e| e.entries().map(|x| x.name().to_string()).collect()).unwrap_or_default();
        Printer {
            env,
            mode,
            style,
            notations: if notations { vec![Notation::composition()] } else { Vec::new() },
            folder: match (env, mode) {
                (Some(e), Mode::Folded) => Some(Folder::new(e)),
                _ => None,
            },
            reserved,
        }
    }

    /// Maximal re-folding display used for traces and error messages.
    pub fn folded(env: &'e GlobalEnv) -> Printer<'e> {
        Printer::build(Some(env), Mode::Folded, Style::Unicode, true)
    }

    /// Fully unfolded display, no notations.
    pub fn raw(env: &'e GlobalEnv) -> Printer<'e> {
        Printer::build(Some(env), Mode::Raw, Style::Unicode, false)
    }

    /// The term exactly as stored, no notations.
    pub fn plain(env: Option<&'e GlobalEnv>) -> Printer<'e> {
        Printer::build(env, Mode::AsIs, Style::Unicode, false)
    }

    /// Development-file syntax: as stored, ASCII keywords, composition folded.
    pub fn source(env: &'e GlobalEnv) -> Printer<'e> {
        Printer::build(Some(env), Mode::AsIs, Style::Ascii, true)
    }

    pub fn with_style(mut self, style: Style) -> Printer<'e> {
        self.style = style;
        self
    }

    pub fn show(&self, t: &Term) -> String {
        self.show_in(t, &[])
    }

    /// Prints `t` whose free variables are named by `ctx` (outermost first).
    pub fn show_in(&self, t: &Term, ctx: &[String]) -> String {
        let t = match (self.mode, self.env) {
            (Mode::AsIs, _) | (_, None) => t.clone(),
            (_, Some(env)) => env.unfold_all(t).unwrap_or_else(|_| t.clone()),
        };
        let mut names: Vec<String> = ctx.to_vec();
        let mut out = String::new();
        self.term(&t, &mut names, LEVEL_BINDER, &mut out);
        out
    }

    fn fresh(&self, hint: &str, names: &[String]) -> String {
        let base = if hint.is_empty() || hint == "_" { "x" } else { hint };
        let mut name = base.to_string();
        while self.reserved.contains(&name) || names.contains(&name) {
            name.push('\'');
        }
        name
    }

    fn kw(&self, unicode: &'static str, ascii: &'static str) -> &'static str {
        match self.style {
            Style::Unicode => unicode,
            Style::Ascii => ascii,
        }
    }

    fn term(&self, t: &Term, names: &mut Vec<String>, level: u8, out: &mut String) {
        if self.mode == Mode::Folded && t.is_closed_under(names.len()) {
            if let Some(folder) = &self.folder {
                if t.is_closed() {
                    if let Some(n) = folder.lookup(t) {
                        out.push_str(n);
                        return;
                    }
                }
            }
        }
        for n in &self.notations {
            if let Some(vals) = n.matches(t) {
                let paren = n.level < level;
                if paren {
                    out.push('(');
                }
                for piece in &n.template {
                    match piece {
                        Piece::Text { unicode, ascii } => out.push_str(self.kw(unicode, ascii)),
                        Piece::Meta { index, level } => self.term(&vals[*index], names, *level, out),
                    }
                }
                if paren {
                    out.push(')');
                }
                return;
            }
        }
        match t {
            Term::Sort(s) => out.push_str(match self.style {
                Style::Unicode => s.glyph(),
                Style::Ascii => s.symbol(),
            }),
            Term::Var(i, h) => match names.len().checked_sub(i + 1) {
                Some(k) => out.push_str(&names[k]),
                None => out.push_str(&format!("{}#{}", h.as_str(), i)),
            },
            Term::Const(c) => out.push_str(c),
            Term::Erased => out.push('_'),
            Term::App(..) => {
                let (head, args) = t.spine();
                let paren = level > LEVEL_APP;
                if paren {
                    out.push('(');
                }
                self.term(head, names, LEVEL_APP, out);
                for a in args {
                    out.push(' ');
                    self.term(a, names, LEVEL_ATOM, out);
                }
                if paren {
                    out.push(')');
                }
            }
            Term::Pi(h, d, b) if !b.has_free(0) => {
                let paren = level > LEVEL_ARROW;
                if paren {
                    out.push('(');
                }
                self.term(d, names, LEVEL_COMP, out);
                out.push_str(self.kw(" → ", " -> "));
                names.push("_".into());
                self.term(b, names, LEVEL_ARROW, out);
                names.pop();
                let _ = h;
                if paren {
                    out.push(')');
                }
            }
            Term::Pi(..) | Term::Lam(..) => self.binder(t, names, level, out),
            Term::Let(h, ann, d, b) => {
                let paren = level > LEVEL_BINDER;
                if paren {
                    out.push('(');
                }
                let x = self.fresh(h.as_str(), names);
                out.push_str("let ");
                out.push_str(&x);
                out.push_str(" : ");
                self.term(ann, names, LEVEL_BINDER, out);
                out.push_str(" := ");
                self.term(d, names, LEVEL_BINDER, out);
                out.push_str(" in ");
                names.push(x);
                self.term(b, names, LEVEL_BINDER, out);
                names.pop();
                if paren {
                    out.push(')');
                }
            }
        }
    }

    /// Prints a run of binders of the same kind as one group.
    fn binder(&self, t: &Term, names: &mut Vec<String>, level: u8, out: &mut String) {
        #[derive(PartialEq, Clone, Copy)]
        enum Kind {
            Lam,
            Forall,
            Pi,
        }
        let kind_of = |t: &Term| match t {
            Term::Lam(..) => Some(Kind::Lam),
            Term::Pi(_, d, b) if b.has_free(0) => {
                if matches!(**d, Term::Sort(Sort::Box | Sort::Triangle)) {
                    Some(Kind::Pi)
                } else {
                    Some(Kind::Forall)
                }
            }
            _ => None,
        };
        let kind = kind_of(t).expect("binder");
        let paren = level > LEVEL_BINDER;
        if paren {
            out.push('(');
        }
        out.push_str(match kind {
            Kind::Lam => self.kw("λ", "fun "),
            Kind::Forall => self.kw("∀", "forall "),
            Kind::Pi => self.kw("Π", "Pi "),
        });
        let pushed = names.len();
        let mut cur = t;
        let mut first = true;
        loop {
            let (h, d, b) = match cur {
                Term::Lam(h, d, b) | Term::Pi(h, d, b) => (h, d, b),
                _ => unreachable!(),
            };
            // Folding or notations may apply to the inner term; stop grouping.
            if !first && (self.folds(cur, names) || kind_of(cur) != Some(kind)) {
                break;
            }
            if !first {
                out.push(' ');
            }
            first = false;
            let x = self.fresh(h.as_str(), names);
            if matches!(**d, Term::Erased) {
                out.push_str(&x);
            } else {
                out.push('(');
                out.push_str(&x);
                out.push_str(" : ");
                self.term(d, names, LEVEL_BINDER, out);
                out.push(')');
            }
            names.push(x);
            cur = b;
            if kind_of(cur) != Some(kind) {
                break;
            }
        }
        out.push_str(match kind {
            Kind::Lam => self.kw(", ", " => "),
            _ => ", ",
        });
        self.term(cur, names, LEVEL_BINDER, out);
        names.truncate(pushed);
        if paren {
            out.push(')');
        }
    }

    fn folds(&self, t: &Term, names: &[String]) -> bool {
        if self.notations.iter().any(|n| n.matches(t).is_some()) {
            return true;
        }
        match &self.folder {
            Some(f) if self.mode == Mode::Folded => {
                t.is_closed() && f.lookup(t).is_some() && t.is_closed_under(names.len())
            }
            _ => false,
        }
    }
}

/// Folded display of `t` under `env` with the built-in notations.
pub fn fold_display(t: &Term, env: &GlobalEnv) -> String {
    Printer::folded(env).show(t)
}

/// Shared handle so callers can build a printer once per environment.
pub type SharedEnv = Arc<GlobalEnv>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvEntry;
    use crate::pts::PtsSpec;

    fn env() -> GlobalEnv {
        let e = GlobalEnv::new(PtsSpec::lambda_hol());
        let e = e.add(EnvEntry::decl("A", Term::sort(Sort::Box))).unwrap();
        let e = e.add(EnvEntry::decl("c", Term::cnst("A"))).unwrap();
        let ff = Term::arrow(Term::cnst("A"), Term::cnst("A"));
        let e = e.add(EnvEntry::decl("f", ff.clone())).unwrap();
        e.add(EnvEntry::decl("g", ff)).unwrap()
    }

    #[test]
    fn constants_print_by_name() {
        let e = env();
        assert_eq!(fold_display(&Term::cnst("c"), &e), "c");
    }

    #[test]
    fn application_parenthesisation() {
        let e = env();
        let t = Term::apps(Term::cnst("g"), [Term::app(Term::cnst("f"), Term::cnst("c"))]);
        assert_eq!(fold_display(&t, &e), "g (f c)");
    }

    #[test]
    fn composition_folds() {
        let e = env();
        let comp = Term::lam(
            "x",
            Term::cnst("A"),
            Term::app(Term::cnst("g"), Term::app(Term::cnst("f"), Term::var(0, "x"))),
        );
        assert_eq!(fold_display(&comp, &e), "g∘f");
        assert_eq!(Printer::source(&e).show(&comp), "g << f");
        assert_eq!(Printer::plain(Some(&e)).show(&comp), "λ(x : A), g (f x)");
        let applied = Term::app(Term::cnst("g"), comp);
        assert_eq!(fold_display(&applied, &e), "g (g∘f)");
    }

    #[test]
    fn products() {
        let e = env();
        let star = Term::sort(Sort::Star);
        let bot = Term::pi("p", star.clone(), Term::var(0, "p"));
        assert_eq!(fold_display(&bot, &e), "∀(p : ∗), p");
        let poly = Term::pi("X", Term::sort(Sort::Box), Term::arrow(Term::var(0, "X"), Term::var(0, "X")));
        assert_eq!(fold_display(&poly, &e), "Π(X : □), X → X");
        let arr = Term::arrow(Term::arrow(Term::cnst("A"), star.clone()), star);
        assert_eq!(fold_display(&arr, &e), "(A → ∗) → ∗");
        assert_eq!(Printer::source(&e).show(&arr), "(A -> *) -> *");
    }

    #[test]
    fn definitions_fold_back() {
        let e = env();
        let body = Term::app(Term::cnst("f"), Term::cnst("c"));
        let e = e.add(EnvEntry::def("d", Term::cnst("A"), body.clone())).unwrap();
        assert_eq!(fold_display(&body, &e), "d");
        assert_eq!(Printer::raw(&e).show(&Term::cnst("d")), "f c");
    }

    #[test]
    fn shadowed_names_are_primed() {
        let e = env();
        let t = Term::lam("x", Term::cnst("A"), Term::lam("x", Term::cnst("A"), Term::var(1, "x")));
        assert_eq!(Printer::plain(Some(&e)).show(&t), "λ(x : A) (x' : A), x");
        // A binder hint that clashes with a constant is renamed too.
        let t = Term::lam("c", Term::cnst("A"), Term::var(0, "c"));
        assert_eq!(Printer::plain(Some(&e)).show(&t), "λ(c' : A), c'");
    }

    #[test]
    fn erased_binders() {
        let t = Term::lam("x", Term::Erased, Term::var(0, "x"));
        assert_eq!(Printer::plain(None).show(&t), "λx, x");
    }
}
