//! Encoded inconsistency proofs.
//!
//! Each bundle is built from embedded development source. The files under
//! `corpus/` in the repository are generated from these builders with
//! [`render_source`] and golden-tested against them.

use std::fmt;
use std::str::FromStr;

use crate::dev::{load, Development, ItemKind};
use crate::env::{EnvEntry, GlobalEnv};
use crate::parse::ParseError;
use crate::print::Printer;
use crate::pts::PresetId;
use crate::reduce::Strategy;
use crate::term::Term;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParadoxId {
    Simple,
    RefinedAxiomatic,
    ReynoldsA,
    HurkensBMatch1,
    HurkensBMatch2,
}

impl ParadoxId {
    pub const ALL: [ParadoxId; 5] = [
        ParadoxId::Simple,
        ParadoxId::RefinedAxiomatic,
        ParadoxId::ReynoldsA,
        ParadoxId::HurkensBMatch1,
        ParadoxId::HurkensBMatch2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParadoxId::Simple => "simple",
            ParadoxId::RefinedAxiomatic => "refined-axiomatic",
            ParadoxId::ReynoldsA => "reynolds-A",
            ParadoxId::HurkensBMatch1 => "hurkens-B-match1",
            ParadoxId::HurkensBMatch2 => "hurkens-B-match2",
        }
    }

    pub fn system(self) -> PresetId {
        match self {
            ParadoxId::Simple | ParadoxId::RefinedAxiomatic => PresetId::LambdaHol,
            _ => PresetId::LambdaUMinus,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ParadoxId::Simple => "axiomatic retract T A -> A with match (intro u) = u",
            ParadoxId::RefinedAxiomatic => "axiomatic retract with match (intro u) = T (intro << match) u",
            ParadoxId::ReynoldsA => "carrier A := Pi X, (T X -> X) -> X, no axioms",
            ParadoxId::HurkensBMatch1 => "carrier B := Pi X, (T X -> X) -> T X, match via iteration",
            ParadoxId::HurkensBMatch2 => "carrier B, match b := b B intro",
        }
    }

    /// Source of the development, as embedded in the crate.
    pub fn source(self) -> String {
        let body = match self {
            ParadoxId::Simple => SIMPLE.to_string(),
            ParadoxId::RefinedAxiomatic => format!("{AXIOMATIC_REFINED}{}", refined("A")),
            ParadoxId::ReynoldsA => format!("{REYNOLDS}{}{}", refined("A"), reynolds_laws("A")),
            ParadoxId::HurkensBMatch1 => {
                format!("{HURKENS}{MATCH1}{}{}", refined("B"), reynolds_laws("B"))
            }
            ParadoxId::HurkensBMatch2 => {
                format!("{HURKENS}{MATCH2}{}{}", refined("B"), reynolds_laws("B"))
            }
        };
        format!("system {}.\n{PRELUDE}{body}", self.system())
    }

    /// Head-def trace of the closed proof of `⊥`, one folded display per
    /// state, as tabulated by hand.
    pub fn golden_head_def(self) -> &'static [&'static str] {
        match self {
            ParadoxId::Simple => &["l₂ p₀ l₂ l₁", "l₁ x₀ l₂ l₁", "l₂ p₀ l₂ l₁"],
            _ => &[
                "l₀ p₀ l₂ l₁",
                "l₁ x₀ l₂ (s₂ p₀ l₁)",
                "l₂ p₀ (s₁ x₀ l₂) (s₂ p₀ l₁)",
                "l₀ (p₀∘δ) (s₁ x₀ l₂) (s₂ p₀ l₁)",
                "s₂ p₀ l₁ x₀ (s₁ x₀ l₂) (s₂ (p₀∘δ) (s₂ p₀ l₁))",
                "l₁ (δ x₀) (s₁ x₀ l₂) (s₂ (p₀∘δ) (s₂ p₀ l₁))",
            ],
        }
    }
}

impl fmt::Display for ParadoxId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParadoxId {
    type Err = String;

    fn from_str(s: &str) -> Result<ParadoxId, String> {
        ParadoxId::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("UnknownBundle: `{s}`"))
    }
}

const PRELUDE: &str = "\
def ⊥ : * := forall (p : *), p.
def ¬ : * -> * := fun (p : *) => p -> ⊥.
def Pow (X : #) : # := X -> *.
def T (X : #) : # := Pow (Pow X).
def Tm (X : #) (Y : #) (f : X -> Y) : T X -> T Y := fun (F : T X) (q : Pow Y) => F (q << f).
";

const SIMPLE: &str = "\
const A : #.
const intro : T A -> A.
const match : A -> T A.
rewrite match_intro : match (intro $u) => $u.
def C : Pow A -> Pow A := fun (p : Pow A) (x : A) => p x -> ¬ (match x p).
def p₀ : Pow A := fun (x : A) => forall (p : Pow A), C p x.
def X₀ : T A := fun (p : Pow A) => forall (x : A), C p x.
def x₀ : A := intro X₀.
def l₁ : X₀ p₀ := fun (x : A) (h : p₀ x) => h p₀ h.
def l₂ : p₀ x₀ := fun (p : Pow A) (h : p x₀) (h₁ : match x₀ p) => h₁ x₀ h h₁.
trace bottomProof : ⊥ := l₂ p₀ l₂ l₁.
conv (u : T A), match (intro u) = u.
";

const AXIOMATIC_REFINED: &str = "\
const A : #.
const intro : T A -> A.
const match : A -> T A.
def δ : A -> A := intro << match.
rewrite match_intro : match (intro $u) => Tm A A δ $u.
";

const REYNOLDS: &str = "\
def A : # := Pi (X : #), (T X -> X) -> X.
def ι : Pi (X : #), (T X -> X) -> A -> X := fun (X : #) (f : T X -> X) (a : A) => a X f.
def intro : T A -> A := fun (u : T A) (X : #) (f : T X -> X) => f (Tm A X (ι X f) u).
def match : A -> T A := ι (T A) (Tm (T A) A intro).
def δ : A -> A := intro << match.
";

const HURKENS: &str = "\
def B : # := Pi (X : #), (T X -> X) -> T X.
def ι : Pi (X : #), (T X -> X) -> B -> X := fun (X : #) (f : T X -> X) (b : B) => f (b X f).
def intro : T B -> B := fun (v : T B) (X : #) (f : T X -> X) => Tm B X (ι X f) v.
";

const MATCH1: &str = "\
def match : B -> T B := ι (T B) (Tm (T B) B intro).
def δ : B -> B := intro << match.
";

const MATCH2: &str = "\
def match : B -> T B := fun (b : B) => b B intro.
def δ : B -> B := intro << match.
";

/// The refined paradox over carrier `c`, which must already have `intro`,
/// `match` and `δ`.
fn refined(c: &str) -> String {
    "\
def p₀ : Pow @ := fun (x : @) => forall (p : Pow @), p (δ x) -> ¬ (match x p).
def X₀ : T @ := fun (p : Pow @) => forall (x : @), p x -> ¬ (match x p).
def x₀ : @ := intro X₀.
def s₁ : forall (x : @), p₀ x -> p₀ (δ x) := fun (x : @) (h : p₀ x) (p : Pow @) => h (p << δ).
def s₂ : forall (p : Pow @), X₀ p -> X₀ (p << δ) := fun (p : Pow @) (h : X₀ p) (x : @) => h (δ x).
def l₀ : forall (p : Pow @), p x₀ -> ¬ (X₀ p) := fun (p : Pow @) (h : p x₀) (h₀ : X₀ p) => h₀ x₀ h (s₂ p h₀).
def l₁ : X₀ p₀ := fun (x : @) (h : p₀ x) => h p₀ (s₁ x h).
def l₂ : p₀ x₀ := fun (p : Pow @) => l₀ (p << δ).
trace bottomProof : ⊥ := l₀ p₀ l₂ l₁.
conv (x : @) (p : Pow @), match (δ x) p = match x (p << δ).
conv (p : Pow @), match x₀ p = X₀ (p << δ).
"
    .replace('@', c)
}

/// Equations that hold by computation once the carrier is impredicatively
/// encoded.
fn reynolds_laws(c: &str) -> String {
    "\
conv (X : #) (f : T X -> X), ι X f << intro = f << Tm @ X (ι X f).
conv match << intro = Tm @ @ (intro << match).
conv (X Y Z : #) (f : X -> Y) (g : Y -> Z), Tm X Z (g << f) = Tm Y Z g << Tm X Y f.
"
    .replace('@', c)
}

/// A checked corpus entry.
#[derive(Clone, Debug)]
pub struct ParadoxBundle {
    pub id: ParadoxId,
    pub dev: Development,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("corpus source does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("corpus entry fails to check:\n{0}")]
    Check(String),
}

impl ParadoxBundle {
    pub fn env(&self) -> &GlobalEnv {
        &self.dev.env
    }

    pub fn system(&self) -> PresetId {
        self.id.system()
    }

    /// Named closed terms: currently the proof of `⊥`.
    pub fn key_terms(&self) -> Vec<(&str, &Term)> {
        self.dev.traces().collect()
    }

    /// The closed proof of `⊥`.
    pub fn bottom_proof(&self) -> &Term {
        self.dev.trace("bottomProof").expect("every bundle defines `bottomProof`")
    }

    /// Declared types of the key terms.
    pub fn expected_types(&self) -> Vec<(&str, &Term)> {
        self.dev
            .items
            .iter()
            .filter_map(|i| match &i.kind {
                ItemKind::Trace { name, ty: Some(ty), .. } => Some((name.as_str(), ty)),
                _ => None,
            })
            .collect()
    }

    pub fn golden(&self, strategy: Strategy) -> Option<&'static [&'static str]> {
        match strategy {
            Strategy::HeadDef => Some(self.id.golden_head_def()),
            Strategy::HeadLinear => None,
        }
    }
}

/// Builds and checks a bundle.
pub fn build(id: ParadoxId) -> Result<ParadoxBundle, CorpusError> {
    let dev = load(&id.source(), None)?;
    if !dev.ok() {
        return Err(CorpusError::Check(dev.report(false)));
    }
    Ok(ParadoxBundle { id, dev })
}

/// Loads the bundle source under another signature without requiring it to
/// check.
pub fn load_with(id: ParadoxId, system: PresetId) -> Result<Development, ParseError> {
    load(&id.source(), Some(system))
}

/// Canonical development-file text for `dev`.
pub fn render_source(dev: &Development) -> String {
    let mut out = String::new();
    for item in &dev.items {
        let line = match &item.kind {
            ItemKind::System(p) => format!("system {p}."),
            ItemKind::Axiom(s, t) => format!("axiom {} : {}.", s.symbol(), t.symbol()),
            ItemKind::Rule(a, b, c) if b == c => format!("rule {} {}.", a.symbol(), b.symbol()),
            ItemKind::Rule(a, b, c) => {
                format!("rule {} {} {}.", a.symbol(), b.symbol(), c.symbol())
            }
            ItemKind::Entry(e) => render_entry(&dev.env, e),
            ItemKind::Check { term, ty } => {
                let p = Printer::source(&dev.env);
                format!("check {} : {}.", p.show(term), p.show(ty))
            }
            ItemKind::Conv { ctx, lhs, rhs } => {
                let p = Printer::source(&dev.env);
                let (binders, names) = telescope(&p, ctx);
                let sep = if binders.is_empty() { "" } else { ", " };
                format!("conv {binders}{sep}{} = {}.", p.show_in(lhs, &names), p.show_in(rhs, &names))
            }
            ItemKind::Trace { name, ty, term } => {
                let p = Printer::source(&dev.env);
                match ty {
                    Some(ty) => format!("trace {name} : {} := {}.", p.show(ty), p.show(term)),
                    None => format!("trace {name} := {}.", p.show(term)),
                }
            }
            ItemKind::Invalid => continue,
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// `(x : A) (y : B)` for a context, with the names bound so far.
fn telescope(p: &Printer<'_>, ctx: &[(String, Term)]) -> (String, Vec<String>) {
    let mut names = Vec::new();
    let mut parts = Vec::new();
    for (x, ty) in ctx {
        parts.push(format!("({x} : {})", p.show_in(ty, &names)));
        names.push(x.clone());
    }
    (parts.join(" "), names)
}

fn render_entry(env: &GlobalEnv, e: &EnvEntry) -> String {
    let p = Printer::source(env);
    match e {
        EnvEntry::Decl { name, ty } => format!("const {name} : {}.", p.show(ty)),
        EnvEntry::Def { name, ty, body, params } => {
            let (mut ty, mut body) = (ty, body);
            let mut ctx = Vec::new();
            for _ in 0..*params {
                match (ty, body) {
                    (Term::Pi(h, d, c), Term::Lam(_, _, b)) => {
                        ctx.push((h.as_str().to_string(), (**d).clone()));
                        ty = c;
                        body = b;
                    }
                    _ => unreachable!("checked definitions have their parameters"),
                }
            }
            let (binders, names) = telescope(&p, &ctx);
            let sep = if binders.is_empty() { "" } else { " " };
            format!("def {name}{sep}{binders} : {} := {}.", p.show_in(ty, &names), p.show_in(body, &names))
        }
        EnvEntry::Rewrite(r) => {
            let names: Vec<String> = r.lhs.metas().iter().map(|m| format!("${m}")).collect();
            format!("rewrite {} : {} => {}.", r.name, r.lhs, p.show_in(&r.rhs, &names))
        }
    }
}
