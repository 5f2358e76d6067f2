//! Surface syntax: lexer, parser and elaborator.
//!
//! Terms accept both the display forms (`λ(x : A), b`, `∀`, `Π`, `→`, `∘`)
//! and ASCII keywords (`fun (x : A) => b`, `forall`, `Pi`, `->`, `<<`).
//! Composition is elaborated eagerly: `g ∘ f` becomes `λx:X. g (f x)` where
//! `X` is the domain of the type of `f`, so elaboration needs a kernel.
//!
//! A development file is a sequence of directives, each ending in `.`:
//!
//! ```text
//! system lambda-hol.
//! const A : #.
//! def Pow (X : #) : # := X -> *.
//! rewrite beta : match (intro $u) => $u.
//! check c : A.
//! conv (x : A), f x = g x.
//! trace loop : ⊥ := l p h.
//! ```
//!
//! `axiom S : S.` and `rule S S [S].` build a custom signature instead of
//! a preset. `--` starts a line comment.

use std::fmt;

use crate::env::{GlobalEnv, PatArg, Pattern};
use crate::term::{Hint, Sort, Term};
use crate::typeck::{Kernel, LocalCtx, TypeError};

/// Nesting limit for the recursive-descent parser.
/// Application arguments count too, so the depth of the elaborated term is
/// bounded as well.
pub const MAX_DEPTH: usize = 128;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
    /// Set when elaborating a composition failed to type its right operand.
    pub type_error: Option<Box<TypeError>>,
}

impl ParseError {
    fn new(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError { pos, message: message.into(), type_error: None }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pos, self.message)
    }
}

impl std::error::Error for ParseError {}

// ---- lexer -----------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Meta(String),
    Sort(Sort),
    LParen,
    RParen,
    Colon,
    ColonEq,
    Dot,
    Comma,
    Arrow,
    FatArrow,
    Comp,
    Eq,
    Underscore,
    Lambda,
    Forall,
    Pi,
    Let,
    In,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Meta(s) => write!(f, "`${s}`"),
            Tok::Sort(s) => write!(f, "`{s}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::ColonEq => f.write_str("`:=`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::FatArrow => f.write_str("`=>`"),
            Tok::Comp => f.write_str("`<<`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Underscore => f.write_str("`_`"),
            Tok::Lambda => f.write_str("`fun`"),
            Tok::Forall => f.write_str("`forall`"),
            Tok::Pi => f.write_str("`Pi`"),
            Tok::Let => f.write_str("`let`"),
            Tok::In => f.write_str("`in`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn is_ident_start(c: char) -> bool {
    (c.is_alphabetic() || c == '_') && c != 'λ' && c != 'Π'
}

fn is_ident_continue(c: char) -> bool {
    (c.is_alphanumeric() || c == '_' || c == '\'') && c != 'λ' && c != 'Π'
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let next = chars.get(i + 1).copied();
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '-' && next == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ':' if next == Some('=') => (Tok::ColonEq, 2),
            ':' => (Tok::Colon, 1),
            '.' => (Tok::Dot, 1),
            ',' => (Tok::Comma, 1),
            '-' if next == Some('>') => (Tok::Arrow, 2),
            '=' if next == Some('>') => (Tok::FatArrow, 2),
            '=' => (Tok::Eq, 1),
            '<' if next == Some('<') => (Tok::Comp, 2),
            '→' => (Tok::Arrow, 1),
            '∘' => (Tok::Comp, 1),
            'λ' | '\\' => (Tok::Lambda, 1),
            '∀' => (Tok::Forall, 1),
            'Π' => (Tok::Pi, 1),
            '*' | '∗' => (Tok::Sort(Sort::Star), 1),
            '#' if next == Some('#') => (Tok::Sort(Sort::Triangle), 2),
            '#' => (Tok::Sort(Sort::Box), 1),
            '□' => (Tok::Sort(Sort::Box), 1),
            '∆' | '△' => (Tok::Sort(Sort::Triangle), 1),
            '⊥' | '¬' => (Tok::Ident(c.to_string()), 1),
            '$' => {
                let mut j = i + 1;
                while j < chars.len() && is_ident_continue(chars[j]) {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(ParseError::new(pos, "expected a metavariable name after `$`"));
                }
                (Tok::Meta(chars[i + 1..j].iter().collect()), j - i)
            }
            _ if is_ident_start(c) => {
                let mut j = i + 1;
                while j < chars.len() && is_ident_continue(chars[j]) {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let tok = match word.as_str() {
                    "_" => Tok::Underscore,
                    "fun" => Tok::Lambda,
                    "forall" => Tok::Forall,
                    "Pi" => Tok::Pi,
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    _ => Tok::Ident(word),
                };
                (tok, j - i)
            }
            _ => return Err(ParseError::new(pos, format!("unexpected character `{c}`"))),
        };
        out.push((tok, pos));
        advance(&mut i, &mut line, &mut col, len);
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

// ---- surface syntax ----------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinderKind {
    Lam,
    Forall,
    Pi,
}

#[derive(Clone, Debug)]
pub struct Binder {
    pub name: String,
    /// `None` for an unannotated (erased) binder.
    pub ty: Option<Expr>,
}

#[derive(Clone, Debug)]
pub enum Expr {
    Ident(String, Pos),
    Meta(String, Pos),
    Sort(Sort),
    Hole,
    App(Box<Expr>, Box<Expr>),
    Arrow(Box<Expr>, Box<Expr>),
    Comp(Box<Expr>, Box<Expr>, Pos),
    Binder(BinderKind, Vec<Binder>, Box<Expr>),
    Let(String, Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug)]
pub enum Directive {
    System(String),
    Axiom(Sort, Sort),
    Rule(Sort, Sort, Sort),
    Const { name: String, ty: Expr },
    Def { name: String, params: Vec<Binder>, ty: Expr, body: Expr },
    Rewrite { name: String, lhs: Expr, rhs: Expr },
    Check { term: Expr, ty: Expr },
    Conv { ctx: Vec<Binder>, lhs: Expr, rhs: Expr },
    Trace { name: String, ty: Option<Expr>, term: Expr },
}

impl Directive {
    pub fn keyword(&self) -> &'static str {
        match self {
            Directive::System(_) => "system",
            Directive::Axiom(..) => "axiom",
            Directive::Rule(..) => "rule",
            Directive::Const { .. } => "const",
            Directive::Def { .. } => "def",
            Directive::Rewrite { .. } => "rewrite",
            Directive::Check { .. } => "check",
            Directive::Conv { .. } => "conv",
            Directive::Trace { .. } => "trace",
        }
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    depth: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: lex(src)?, at: 0, depth: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<Pos, ParseError> {
        if self.peek() == t {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        ParseError::new(self.pos(), format!("expected {wanted}, found {}", self.peek()))
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        match self.peek().clone() {
            Tok::Sort(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("a sort")),
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(ParseError::new(self.pos(), "term nested too deeply"))
        } else {
            Ok(())
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let r = self.term_inner();
        self.depth -= 1;
        r
    }

    fn term_inner(&mut self) -> Result<Expr, ParseError> {
        let kind = match self.peek() {
            Tok::Lambda => Some(BinderKind::Lam),
            Tok::Forall => Some(BinderKind::Forall),
            Tok::Pi => Some(BinderKind::Pi),
            _ => None,
        };
        if let Some(kind) = kind {
            self.bump();
            let binders = self.binders()?;
            match (kind, self.peek()) {
                (_, Tok::Comma) | (BinderKind::Lam, Tok::FatArrow) | (BinderKind::Pi, Tok::Arrow) => {
                    self.bump();
                }
                _ => return Err(self.unexpected("`,`")),
            }
            let body = self.term()?;
            return Ok(Expr::Binder(kind, binders, Box::new(body)));
        }
        if self.eat(&Tok::Let) {
            let name = self.ident()?;
            self.expect(&Tok::Colon)?;
            let ty = self.term()?;
            self.expect(&Tok::ColonEq)?;
            let defn = self.term()?;
            self.expect(&Tok::In)?;
            let body = self.term()?;
            return Ok(Expr::Let(name, Box::new(ty), Box::new(defn), Box::new(body)));
        }
        let lhs = self.comp()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.term()?;
            return Ok(Expr::Arrow(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn comp(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.app()?;
        if self.peek() == &Tok::Comp {
            let pos = self.bump().1;
            self.enter()?;
            let rhs = self.comp();
            self.depth -= 1;
            return Ok(Expr::Comp(Box::new(lhs), Box::new(rhs?), pos));
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Meta(_) | Tok::Sort(_) | Tok::Underscore | Tok::LParen)
    }

    fn app(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        let start = self.depth;
        let r = loop {
            if !self.starts_atom() {
                break Ok(e);
            }
            if let Err(err) = self.enter() {
                break Err(err);
            }
            match self.atom() {
                Ok(a) => e = Expr::App(Box::new(e), Box::new(a)),
                Err(err) => break Err(err),
            }
        };
        self.depth = start;
        r
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, pos) = self.bump();
        match tok {
            Tok::Ident(s) => Ok(Expr::Ident(s, pos)),
            Tok::Meta(s) => Ok(Expr::Meta(s, pos)),
            Tok::Sort(s) => Ok(Expr::Sort(s)),
            Tok::Underscore => Ok(Expr::Hole),
            Tok::LParen => {
                let e = self.term()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            other => Err(ParseError::new(pos, format!("expected a term, found {other}"))),
        }
    }

    /// `(x y : A)` groups, bare names, or one unparenthesised `x y : A`.
    fn binders(&mut self) -> Result<Vec<Binder>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Tok::LParen => out.extend(self.group()?),
                Tok::Ident(_) | Tok::Underscore => {
                    let mut names = Vec::new();
                    while let Tok::Ident(_) | Tok::Underscore = self.peek() {
                        names.push(match self.bump().0 {
                            Tok::Ident(s) => s,
                            _ => "_".to_string(),
                        });
                    }
                    if self.eat(&Tok::Colon) {
                        let ty = self.term()?;
                        out.extend(names.into_iter().map(|name| Binder { name, ty: Some(ty.clone()) }));
                        break;
                    }
                    out.extend(names.into_iter().map(|name| Binder { name, ty: None }));
                }
                _ => break,
            }
        }
        if out.is_empty() {
            return Err(self.unexpected("a binder"));
        }
        Ok(out)
    }

    fn group(&mut self) -> Result<Vec<Binder>, ParseError> {
        self.expect(&Tok::LParen)?;
        let mut names = Vec::new();
        loop {
            match self.peek() {
                Tok::Ident(_) => names.push(self.ident()?),
                Tok::Underscore => {
                    self.bump();
                    names.push("_".into());
                }
                _ => break,
            }
        }
        if names.is_empty() {
            return Err(self.unexpected("a binder name"));
        }
        self.expect(&Tok::Colon)?;
        let ty = self.term()?;
        self.expect(&Tok::RParen)?;
        Ok(names.into_iter().map(|name| Binder { name, ty: Some(ty.clone()) }).collect())
    }

    /// Whether the next tokens read `( name+ :`.
    fn at_group(&self) -> bool {
        if self.peek() != &Tok::LParen {
            return false;
        }
        let mut k = 1;
        while let Tok::Ident(_) | Tok::Underscore = self.peek_at(k) {
            k += 1;
        }
        k > 1 && self.peek_at(k) == &Tok::Colon
    }

    fn directive(&mut self) -> Result<(Directive, Pos), ParseError> {
        let pos = self.pos();
        let kw = self.ident().map_err(|_| self.unexpected("a directive"))?;
        let d = match kw.as_str() {
            "system" => {
                // Dashes were turned into underscores before lexing.
                Directive::System(self.ident()?.replace('_', "-"))
            }
            "axiom" => {
                let s = self.sort()?;
                self.expect(&Tok::Colon)?;
                Directive::Axiom(s, self.sort()?)
            }
            "rule" => {
                let s1 = self.sort()?;
                let s2 = self.sort()?;
                let s3 = if let Tok::Sort(_) = self.peek() { self.sort()? } else { s2 };
                Directive::Rule(s1, s2, s3)
            }
            "const" => {
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                Directive::Const { name, ty: self.term()? }
            }
            "def" => {
                let name = self.ident()?;
                let mut params = Vec::new();
                while self.peek() == &Tok::LParen {
                    params.extend(self.group()?);
                }
                self.expect(&Tok::Colon)?;
                let ty = self.term()?;
                self.expect(&Tok::ColonEq)?;
                Directive::Def { name, params, ty, body: self.term()? }
            }
            "rewrite" => {
                let name = self.ident()?;
                self.expect(&Tok::Colon)?;
                let lhs = self.comp()?;
                self.expect(&Tok::FatArrow)?;
                Directive::Rewrite { name, lhs, rhs: self.term()? }
            }
            "check" => {
                let term = self.term()?;
                self.expect(&Tok::Colon)?;
                Directive::Check { term, ty: self.term()? }
            }
            "conv" => {
                let mut ctx = Vec::new();
                if self.at_group() {
                    while self.at_group() {
                        ctx.extend(self.group()?);
                    }
                    self.expect(&Tok::Comma)?;
                }
                let lhs = self.term()?;
                self.expect(&Tok::Eq)?;
                Directive::Conv { ctx, lhs, rhs: self.term()? }
            }
            "trace" => {
                let name = self.ident()?;
                let ty = if self.eat(&Tok::Colon) { Some(self.term()?) } else { None };
                self.expect(&Tok::ColonEq)?;
                Directive::Trace { name, ty, term: self.term()? }
            }
            other => return Err(ParseError::new(pos, format!("unknown directive `{other}`"))),
        };
        self.expect(&Tok::Dot)?;
        Ok((d, pos))
    }
}

/// Parses a development file into directives with their positions.
pub fn parse_document(src: &str) -> Result<Vec<(Directive, Pos)>, ParseError> {
    let src = glue_system_names(src);
    let mut p = Parser::new(&src)?;
    let mut out = Vec::new();
    while p.peek() != &Tok::Eof {
        out.push(p.directive()?);
    }
    Ok(out)
}

/// `system lambda-hol.` spells the preset with dashes; rewrite them to
/// underscores so the name lexes as one identifier.
fn glue_system_names(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    for line in src.split_inclusive('\n') {
        let trimmed = line.trim_start();
        if let Some(rest) = trimmed.strip_prefix("system") {
            if rest.starts_with(char::is_whitespace) {
                let indent = &line[..line.len() - trimmed.len()];
                out.push_str(indent);
                out.push_str("system");
                let (name, tail) = match rest.find('.') {
                    Some(i) => rest.split_at(i),
                    None => (rest, ""),
                };
                out.push_str(&name.replace('-', "_"));
                out.push_str(tail);
                continue;
            }
        }
        out.push_str(line);
    }
    out
}

/// Parses a single term.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.term()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

// ---- elaboration ---------------------------------------------------------------

/// Resolves names and expands notations against an environment and a local
/// context.
pub struct Elaborator<'e> {
    kernel: Kernel<'e>,
    ctx: LocalCtx,
    names: Vec<String>,
}

impl<'e> Elaborator<'e> {
    pub fn new(env: &'e GlobalEnv) -> Elaborator<'e> {
        Elaborator { kernel: Kernel::new(env), ctx: LocalCtx::new(), names: Vec::new() }
    }

    pub fn ctx(&self) -> &LocalCtx {
        &self.ctx
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Pushes a local binder of type `ty` (already elaborated).
    pub fn push(&mut self, name: &str, ty: Term) {
        self.ctx.push(Hint::new(name), ty);
        self.names.push(name.to_string());
    }

    pub fn pop(&mut self) {
        self.ctx.pop();
        self.names.pop();
    }

    /// Elaborates and pushes a telescope, returning the binder types.
    pub fn push_binders(&mut self, binders: &[Binder]) -> Result<Vec<(String, Term)>, ParseError> {
        let mut out = Vec::new();
        for b in binders {
            let ty = match &b.ty {
                Some(e) => self.elab(e)?,
                None => Term::Erased,
            };
            self.push(&b.name, ty.clone());
            out.push((b.name.clone(), ty));
        }
        Ok(out)
    }

    pub fn elab(&mut self, e: &Expr) -> Result<Term, ParseError> {
        Ok(match e {
            Expr::Ident(s, _) => match self.names.iter().rposition(|n| n == s) {
                Some(k) => Term::var(self.names.len() - 1 - k, s),
                None => Term::cnst(s),
            },
            Expr::Meta(s, pos) => {
                let key = format!("${s}");
                match self.names.iter().rposition(|n| *n == key) {
                    Some(k) => Term::var(self.names.len() - 1 - k, &key),
                    None => return Err(ParseError::new(*pos, format!("unbound metavariable `{key}`"))),
                }
            }
            Expr::Sort(s) => Term::sort(*s),
            Expr::Hole => Term::Erased,
            Expr::App(f, a) => Term::app(self.elab(f)?, self.elab(a)?),
            Expr::Arrow(a, b) => {
                let a = self.elab(a)?;
                self.push("_", a.clone());
                let b = self.elab(b);
                self.pop();
                Term::arrow(a, b?.unshift(1).expect("anonymous binder is unused"))
            }
            Expr::Comp(g, f, pos) => {
                let g = self.elab(g)?;
                let f = self.elab(f)?;
                let dom = self.domain_of(&f, *pos)?;
                Term::lam("x", dom, Term::app(g.shift(1), Term::app(f.shift(1), Term::var(0, "x"))))
            }
            Expr::Binder(kind, binders, body) => {
                let tys = self.push_binders(binders)?;
                let body = self.elab(body);
                for _ in &tys {
                    self.pop();
                }
                let mut t = body?;
                for (name, ty) in tys.into_iter().rev() {
                    t = match kind {
                        BinderKind::Lam => Term::lam(&name, ty, t),
                        BinderKind::Forall | BinderKind::Pi => Term::pi(&name, ty, t),
                    };
                }
                t
            }
            Expr::Let(name, ty, defn, body) => {
                let ty = self.elab(ty)?;
                let defn = self.elab(defn)?;
                self.ctx.push_def(Hint::new(name), ty.clone(), defn.clone());
                self.names.push(name.clone());
                let body = self.elab(body);
                self.pop();
                Term::let_in(name, ty, defn, body?)
            }
        })
    }

    fn domain_of(&self, f: &Term, pos: Pos) -> Result<Term, ParseError> {
        let fail = |error: TypeError| ParseError {
            pos,
            message: format!("cannot type the right operand of a composition: {error}"),
            type_error: Some(Box::new(error)),
        };
        let mut ctx = self.ctx.clone();
        let ty = self.kernel.infer(&mut ctx, f).map_err(fail)?;
        match self.kernel.whnf_in(&ctx, &ty).map_err(fail)? {
            Term::Pi(_, d, _) => Ok((*d).clone()),
            _ => Err(ParseError::new(pos, "the right operand of a composition is not a function")),
        }
    }
}

/// Parses and elaborates a closed term against `env`.
pub fn parse_term(src: &str, env: &GlobalEnv) -> Result<Term, ParseError> {
    Elaborator::new(env).elab(&parse_expr(src)?)
}

/// Converts a rewrite left-hand side into a pattern.
pub fn pattern_of(e: &Expr) -> Result<Pattern, ParseError> {
    let mut args = Vec::new();
    let mut cur = e;
    while let Expr::App(f, a) = cur {
        args.push(&**a);
        cur = f;
    }
    args.reverse();
    let head = match cur {
        Expr::Ident(s, _) => s.clone(),
        _ => return Err(ParseError::new(expr_pos(e), "a pattern must be headed by a constant")),
    };
    let args = args
        .into_iter()
        .map(|a| match a {
            Expr::Meta(m, _) => Ok(PatArg::Meta(m.as_str().into())),
            _ => pattern_of(a).map(PatArg::Rigid),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Pattern::new(&head, args))
}

fn expr_pos(e: &Expr) -> Pos {
    match e {
        Expr::Ident(_, p) | Expr::Meta(_, p) | Expr::Comp(_, _, p) => *p,
        Expr::App(f, _) | Expr::Arrow(f, _) => expr_pos(f),
        _ => Pos::default(),
    }
}

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
    fn lambda_forms_agree() {
        let e = env();
        let a = parse_term("fun (x : A) => f x", &e).unwrap();
        let b = parse_term("λ(x : A), f x", &e).unwrap();
        let c = parse_term("\\x : A, f x", &e).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, Term::lam("x", Term::cnst("A"), Term::app(Term::cnst("f"), Term::var(0, "x"))));
    }

    #[test]
    fn arrows_are_right_associative() {
        let e = env();
        let t = parse_term("A -> A → *", &e).unwrap();
        let star = Term::sort(Sort::Star);
        assert_eq!(t, Term::arrow(Term::cnst("A"), Term::arrow(Term::cnst("A"), star)));
    }

    #[test]
    fn application_is_left_associative() {
        let e = env();
        let t = parse_term("f (g c)", &e).unwrap();
        assert_eq!(t, Term::app(Term::cnst("f"), Term::app(Term::cnst("g"), Term::cnst("c"))));
    }

    #[test]
    fn composition_takes_domain_from_the_right_operand() {
        let e = env();
        let t = parse_term("g << f", &e).unwrap();
        let want = Term::lam(
            "x",
            Term::cnst("A"),
            Term::app(Term::cnst("g"), Term::app(Term::cnst("f"), Term::var(0, "x"))),
        );
        assert_eq!(t, want);
        assert_eq!(parse_term("g ∘ f", &e).unwrap(), want);
        let err = parse_term("g << c", &e).unwrap_err();
        assert!(err.message.contains("not a function"));
    }

    #[test]
    fn binders_shadow_constants() {
        let e = env();
        let t = parse_term("λ(c : A), c", &e).unwrap();
        assert_eq!(t, Term::lam("c", Term::cnst("A"), Term::var(0, "c")));
    }

    #[test]
    fn unicode_identifiers() {
        let e = env();
        let t = parse_term("λ(x₀ : A) (h' : A), ⊥ x₀", &e).unwrap();
        assert_eq!(
            t,
            Term::lam(
                "x₀",
                Term::cnst("A"),
                Term::lam("h'", Term::cnst("A"), Term::app(Term::cnst("⊥"), Term::var(1, "x₀")))
            )
        );
    }

    #[test]
    fn directives() {
        let src = "system lambda-u-minus.\n-- comment\nconst A : #.\ndef P (X : #) : # := X -> *.\nrewrite r : m (i $u) => $u.\nconv (x : A), x = x.\nconv A = A.\ntrace t : A := c.\n";
        let ds = parse_document(src).unwrap();
        let kws: Vec<_> = ds.iter().map(|(d, _)| d.keyword()).collect();
        assert_eq!(kws, ["system", "const", "def", "rewrite", "conv", "conv", "trace"]);
        match &ds[0].0 {
            Directive::System(s) => assert_eq!(s, "lambda-u-minus"),
            _ => unreachable!(),
        }
        assert_eq!(ds[1].1, Pos { line: 3, col: 1 });
        match &ds[3].0 {
            Directive::Rewrite { lhs, .. } => {
                assert_eq!(pattern_of(lhs).unwrap().to_string(), "m (i $u)")
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_document("const A : #.\nconst B : (A.").unwrap_err();
        assert_eq!(err.pos.line, 2);
        let err = parse_expr("λ, x").unwrap_err();
        assert_eq!(err.pos, Pos { line: 1, col: 2 });
    }

    #[test]
    fn depth_limit() {
        let deep = "(".repeat(MAX_DEPTH + 10) + "x" + &")".repeat(MAX_DEPTH + 10);
        assert!(parse_expr(&deep).is_err());
        let ok = "(".repeat(50) + "x" + &")".repeat(50);
        assert!(parse_expr(&ok).is_ok());
    }
}
