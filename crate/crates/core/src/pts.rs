//! PTS signatures: which sorts exist, which sort types which, and which
//! products may be formed.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::term::Sort;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PtsSpec {
    pub sorts: BTreeSet<Sort>,
    pub axioms: BTreeSet<(Sort, Sort)>,
    pub rules: BTreeSet<(Sort, Sort, Sort)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresetId {
    LambdaHol,
    LambdaUMinus,
}

impl PresetId {
    pub fn name(self) -> &'static str {
        match self {
            PresetId::LambdaHol => "lambda-hol",
            PresetId::LambdaUMinus => "lambda-u-minus",
        }
    }

    pub fn spec(self) -> PtsSpec {
        match self {
            PresetId::LambdaHol => PtsSpec::lambda_hol(),
            PresetId::LambdaUMinus => PtsSpec::lambda_u_minus(),
        }
    }
}

impl fmt::Display for PresetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetId {
    type Err = String;

    fn from_str(s: &str) -> Result<PresetId, String> {
        match s {
            "lambda-hol" => Ok(PresetId::LambdaHol),
            "lambda-u-minus" => Ok(PresetId::LambdaUMinus),
            _ => Err(format!("unknown system `{s}` (expected lambda-hol or lambda-u-minus)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecError {
    #[error("sort {0} has two axioms")]
    AmbiguousAxiom(Sort),
    #[error("rule ({0}, {1}) has two conclusions")]
    AmbiguousRule(Sort, Sort),
}

impl PtsSpec {
    /// Empty signature over all three sorts.
    pub fn empty() -> PtsSpec {
        PtsSpec { sorts: Sort::ALL.into_iter().collect(), axioms: BTreeSet::new(), rules: BTreeSet::new() }
    }

    /// `*:#`, `#:##`, rules (*,*), (#,#), (#,*).
    pub fn lambda_hol() -> PtsSpec {
        use Sort::*;
        let mut spec = PtsSpec::empty();
        spec.axioms.extend([(Star, Box), (Box, Triangle)]);
        for (s1, s2) in [(Star, Star), (Box, Box), (Box, Star)] {
            spec.rules.insert((s1, s2, s2));
        }
        spec
    }

    /// λHOL plus the rule (##, #).
    pub fn lambda_u_minus() -> PtsSpec {
        let mut spec = PtsSpec::lambda_hol();
        spec.rules.insert((Sort::Triangle, Sort::Box, Sort::Box));
        spec
    }

    pub fn add_axiom(&mut self, s: Sort, t: Sort) -> Result<(), SpecError> {
        match self.axiom_of(s) {
            Some(u) if u != t => Err(SpecError::AmbiguousAxiom(s)),
            _ => {
                self.axioms.insert((s, t));
                Ok(())
            }
        }
    }

    /// Adds `(s1, s2, s3)`; binary rules are written with `s3 = s2`.
    pub fn add_rule(&mut self, s1: Sort, s2: Sort, s3: Sort) -> Result<(), SpecError> {
        match self.rule_of(s1, s2) {
            Some(u) if u != s3 => Err(SpecError::AmbiguousRule(s1, s2)),
            _ => {
                self.rules.insert((s1, s2, s3));
                Ok(())
            }
        }
    }

    pub fn axiom_of(&self, s: Sort) -> Option<Sort> {
        self.axioms.iter().find(|(a, _)| *a == s).map(|&(_, t)| t)
    }

    pub fn rule_of(&self, s1: Sort, s2: Sort) -> Option<Sort> {
        self.rules.iter().find(|(a, b, _)| *a == s1 && *b == s2).map(|&(_, _, c)| c)
    }

    pub fn preset(&self) -> Option<PresetId> {
        [PresetId::LambdaHol, PresetId::LambdaUMinus].into_iter().find(|p| p.spec() == *self)
    }
}
