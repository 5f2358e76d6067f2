//! Core term syntax.
//!
//! Terms use de Bruijn indices for bound variables. Every binder keeps a
//! display [`Hint`], but hints are invisible to equality and hashing, so the
//! derived `PartialEq`/`Hash` on [`Term`] *is* alpha-equivalence.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// The three sorts `*`, `#` and `##`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Star,
    Box,
    Triangle,
}

impl Sort {
    pub const ALL: [Sort; 3] = [Sort::Star, Sort::Box, Sort::Triangle];

    pub fn symbol(self) -> &'static str {
        match self {
            Sort::Star => "*",
            Sort::Box => "#",
            Sort::Triangle => "##",
        }
    }

    /// Display form: `∗`, `□`, `∆`.
    pub fn glyph(self) -> &'static str {
        match self {
            Sort::Star => "∗",
            Sort::Box => "□",
            Sort::Triangle => "∆",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Sort> {
        match s {
            "*" => Some(Sort::Star),
            "#" => Some(Sort::Box),
            "##" => Some(Sort::Triangle),
            _ => None,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.glyph())
    }
}

/// Display name of a binder. Compares equal to every other hint.
#[derive(Clone, Debug)]
pub struct Hint(Arc<str>);

impl Hint {
    pub fn new(name: &str) -> Hint {
        Hint(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for Hint {
    fn eq(&self, _: &Hint) -> bool {
        true
    }
}

impl Eq for Hint {}

impl Hash for Hint {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

impl From<&str> for Hint {
    fn from(s: &str) -> Hint {
        Hint::new(s)
    }
}

pub type Name = Arc<str>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Sort(Sort),
    Var(usize, Hint),
    Const(Name),
    App(Arc<Term>, Arc<Term>),
    Lam(Hint, Arc<Term>, Arc<Term>),
    Pi(Hint, Arc<Term>, Arc<Term>),
    Let(Hint, Arc<Term>, Arc<Term>, Arc<Term>),
    /// Opaque placeholder left behind by type erasure.
    Erased,
}

impl Term {
    pub fn sort(s: Sort) -> Term {
        Term::Sort(s)
    }

    pub fn var(index: usize, hint: &str) -> Term {
        Term::Var(index, Hint::new(hint))
    }

    pub fn cnst(name: &str) -> Term {
        Term::Const(Arc::from(name))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn lam(hint: &str, dom: Term, body: Term) -> Term {
        Term::Lam(Hint::new(hint), Arc::new(dom), Arc::new(body))
    }

    pub fn pi(hint: &str, dom: Term, cod: Term) -> Term {
        Term::Pi(Hint::new(hint), Arc::new(dom), Arc::new(cod))
    }

    /// Non-dependent product `dom → cod`; `cod` is given at the outer depth.
    pub fn arrow(dom: Term, cod: Term) -> Term {
        Term::pi("_", dom, cod.shift(1))
    }

    pub fn let_in(hint: &str, ann: Term, defn: Term, body: Term) -> Term {
        Term::Let(Hint::new(hint), Arc::new(ann), Arc::new(defn), Arc::new(body))
    }

    /// Splits `f a1 .. an` into `(f, [a1, .., an])`.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut head = self;
        while let Term::App(f, a) = head {
            args.push(&**a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    pub fn head(&self) -> &Term {
        let mut head = self;
        while let Term::App(f, _) = head {
            head = f;
        }
        head
    }

    pub fn head_const(&self) -> Option<&str> {
        match self.head() {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Sort(_) | Term::Var(..) | Term::Const(_) | Term::Erased => 1,
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Lam(_, d, b) | Term::Pi(_, d, b) => 1 + d.size() + b.size(),
            Term::Let(_, t, d, b) => 1 + t.size() + d.size() + b.size(),
        }
    }

    /// True if `Var(index)` (relative to this term's top) occurs free.
    pub fn has_free(&self, index: usize) -> bool {
        match self {
            Term::Var(i, _) => *i == index,
            Term::Sort(_) | Term::Const(_) | Term::Erased => false,
            Term::App(f, a) => f.has_free(index) || a.has_free(index),
            Term::Lam(_, d, b) | Term::Pi(_, d, b) => d.has_free(index) || b.has_free(index + 1),
            Term::Let(_, t, d, b) => t.has_free(index) || d.has_free(index) || b.has_free(index + 1),
        }
    }

    /// True if the term has no free variables.
    pub fn is_closed(&self) -> bool {
        self.is_closed_under(0)
    }

    /// True if every free index is below `depth`.
    pub fn is_closed_under(&self, depth: usize) -> bool {
        match self {
            Term::Var(i, _) => *i < depth,
            Term::Sort(_) | Term::Const(_) | Term::Erased => true,
            Term::App(f, a) => f.is_closed_under(depth) && a.is_closed_under(depth),
            Term::Lam(_, d, b) | Term::Pi(_, d, b) => {
                d.is_closed_under(depth) && b.is_closed_under(depth + 1)
            }
            Term::Let(_, t, d, b) => {
                t.is_closed_under(depth) && d.is_closed_under(depth) && b.is_closed_under(depth + 1)
            }
        }
    }

    /// Adds `by` to every free index.
    pub fn shift(&self, by: usize) -> Term {
        if by == 0 {
            return self.clone();
        }
        self.map_free(0, &mut |i, _| Replace::Index(i + by))
    }

    /// Subtracts `by` from every free index; `None` if one of the first `by`
    /// free indices occurs.
    pub fn unshift(&self, by: usize) -> Option<Term> {
        if by == 0 {
            return Some(self.clone());
        }
        let mut ok = true;
        let out = self.map_free(0, &mut |i, _| {
            if i < by {
                ok = false;
                Replace::Index(i)
            } else {
                Replace::Index(i - by)
            }
        });
        ok.then_some(out)
    }

    /// Substitutes `value` for index 0 of `self` (a binder body) and lowers the
    /// remaining free indices. `value` lives at the binder's outer depth.
    pub fn subst(&self, value: &Term) -> Term {
        self.instantiate(std::slice::from_ref(value))
    }

    /// Simultaneous substitution: index `i < values.len()` becomes
    /// `values[i]`, larger indices drop by `values.len()`.
    pub fn instantiate(&self, values: &[Term]) -> Term {
        let n = values.len();
        if n == 0 {
            return self.clone();
        }
        self.map_free(0, &mut |i, depth| {
            if i < n {
                Replace::Term(values[i].shift(depth))
            } else {
                Replace::Index(i - n)
            }
        })
    }

    /// Rebuilds the term, replacing each free variable occurrence. The callback
    /// receives the free index (relative to the top of `self`) and the binder
    /// depth at the occurrence.
    fn map_free(&self, depth: usize, f: &mut impl FnMut(usize, usize) -> Replace) -> Term {
        match self {
            Term::Var(i, h) => {
                if *i < depth {
                    self.clone()
                } else {
                    match f(*i - depth, depth) {
                        Replace::Index(j) => Term::Var(j + depth, h.clone()),
                        Replace::Term(t) => t,
                    }
                }
            }
            Term::Sort(_) | Term::Const(_) | Term::Erased => self.clone(),
            Term::App(a, b) => Term::App(Arc::new(a.map_free(depth, f)), Arc::new(b.map_free(depth, f))),
            Term::Lam(h, d, b) => {
                Term::Lam(h.clone(), Arc::new(d.map_free(depth, f)), Arc::new(b.map_free(depth + 1, f)))
            }
            Term::Pi(h, d, b) => {
                Term::Pi(h.clone(), Arc::new(d.map_free(depth, f)), Arc::new(b.map_free(depth + 1, f)))
            }
            Term::Let(h, t, d, b) => Term::Let(
                h.clone(),
                Arc::new(t.map_free(depth, f)),
                Arc::new(d.map_free(depth, f)),
                Arc::new(b.map_free(depth + 1, f)),
            ),
        }
    }

    /// Every constant name occurring in the term.
    pub fn constants(&self, out: &mut Vec<Name>) {
        match self {
            Term::Const(c) => {
                if !out.contains(c) {
                    out.push(c.clone());
                }
            }
            Term::Sort(_) | Term::Var(..) | Term::Erased => {}
            Term::App(f, a) => {
                f.constants(out);
                a.constants(out);
            }
            Term::Lam(_, d, b) | Term::Pi(_, d, b) => {
                d.constants(out);
                b.constants(out);
            }
            Term::Let(_, t, d, b) => {
                t.constants(out);
                d.constants(out);
                b.constants(out);
            }
        }
    }
}

enum Replace {
    /// New free index, relative to the top.
    Index(usize),
    /// Replacement already adjusted to the occurrence depth.
    Term(Term),
}

/// Alpha-equivalence: identical up to binder hints.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    a == b
}

/// Hash that is invariant under alpha-equivalence.
pub fn alpha_hash(t: &Term) -> u64 {
    use std::collections::hash_map::DefaultHasher;
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}
