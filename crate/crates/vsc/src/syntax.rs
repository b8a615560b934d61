//! Terms with explicit substitutions, binding discipline, capture-avoiding
//! metasubstitution, one-hole contexts with capturing plug, and the textual
//! format.
//!
//! The term grammar is
//!
//! ```text
//! t, u ::= x | \x.t | t u | t[x<-u]
//! ```
//!
//! where `t[x<-u]` is an explicit substitution (ES) binding `x` in `t`.
//! Values are variables and abstractions. Binder names are arbitrary; all
//! observable operations are alpha-invariant and comparison points go
//! through [`alpha_canon`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub type Name = String;

/// A path from the root of a term to a subterm, as child indices.
/// `App`: 0 = function, 1 = argument. `Abs`: 0 = body.
/// `Es`: 0 = body, 1 = definition.
pub type Path = Vec<usize>;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Name),
    Abs(Name, Box<Term>),
    App(Box<Term>, Box<Term>),
    /// `Es(t, x, u)` renders `t[x<-u]`: the ES binds `x` in `t` only.
    Es(Box<Term>, Name, Box<Term>),
}

pub fn var(x: &str) -> Term {
    Term::Var(x.to_string())
}

pub fn abs(x: &str, body: Term) -> Term {
    Term::Abs(x.to_string(), Box::new(body))
}

pub fn app(fun: Term, arg: Term) -> Term {
    Term::App(Box::new(fun), Box::new(arg))
}

pub fn es(body: Term, x: &str, def: Term) -> Term {
    Term::Es(Box::new(body), x.to_string(), Box::new(def))
}

/// `I := \x.x`
pub fn identity() -> Term {
    abs("x", var("x"))
}

/// `DELTA := \x.x x`
pub fn delta() -> Term {
    abs("x", app(var("x"), var("x")))
}

/// `OMEGA := DELTA DELTA`, the canonical diverging term.
pub fn omega() -> Term {
    app(delta(), delta())
}

impl Term {
    pub fn is_value(&self) -> bool {
        matches!(self, Term::Var(_) | Term::Abs(_, _))
    }

    pub fn is_es_free(&self) -> bool {
        match self {
            Term::Var(_) => true,
            Term::Abs(_, b) => b.is_es_free(),
            Term::App(f, a) => f.is_es_free() && a.is_es_free(),
            Term::Es(_, _, _) => false,
        }
    }

    /// Total number of constructors, variables included.
    pub fn node_count(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Abs(_, b) => 1 + b.node_count(),
            Term::App(f, a) => 1 + f.node_count() + a.node_count(),
            Term::Es(b, _, d) => 1 + b.node_count() + d.node_count(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        fn go(t: &Term, acc: &mut BTreeSet<Name>) {
            match t {
                Term::Var(x) => {
                    acc.insert(x.clone());
                }
                Term::Abs(x, b) => {
                    let mut inner = BTreeSet::new();
                    go(b, &mut inner);
                    inner.remove(x);
                    acc.extend(inner);
                }
                Term::App(f, a) => {
                    go(f, acc);
                    go(a, acc);
                }
                Term::Es(b, x, d) => {
                    let mut inner = BTreeSet::new();
                    go(b, &mut inner);
                    inner.remove(x);
                    acc.extend(inner);
                    go(d, acc);
                }
            }
        }
        let mut acc = BTreeSet::new();
        go(self, &mut acc);
        acc
    }

    /// All names occurring anywhere (free, bound, or as binders).
    pub fn all_names(&self) -> BTreeSet<Name> {
        fn go(t: &Term, acc: &mut BTreeSet<Name>) {
            match t {
                Term::Var(x) => {
                    acc.insert(x.clone());
                }
                Term::Abs(x, b) => {
                    acc.insert(x.clone());
                    go(b, acc);
                }
                Term::App(f, a) => {
                    go(f, acc);
                    go(a, acc);
                }
                Term::Es(b, x, d) => {
                    acc.insert(x.clone());
                    go(b, acc);
                    go(d, acc);
                }
            }
        }
        let mut acc = BTreeSet::new();
        go(self, &mut acc);
        acc
    }

    pub fn subterm(&self, path: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in path {
            cur = match (cur, i) {
                (Term::Abs(_, b), 0) => b,
                (Term::App(f, _), 0) => f,
                (Term::App(_, a), 1) => a,
                (Term::Es(b, _, _), 0) => b,
                (Term::Es(_, _, d), 1) => d,
                _ => return None,
            };
        }
        Some(cur)
    }

    pub fn replace_at(&self, path: &[usize], new: Term) -> Term {
        match path.split_first() {
            None => new,
            Some((&i, rest)) => match (self, i) {
                (Term::Abs(x, b), 0) => Term::Abs(x.clone(), Box::new(b.replace_at(rest, new))),
                (Term::App(f, a), 0) => {
                    Term::App(Box::new(f.replace_at(rest, new)), a.clone())
                }
                (Term::App(f, a), 1) => {
                    Term::App(f.clone(), Box::new(a.replace_at(rest, new)))
                }
                (Term::Es(b, x, d), 0) => {
                    Term::Es(Box::new(b.replace_at(rest, new)), x.clone(), d.clone())
                }
                (Term::Es(b, x, d), 1) => {
                    Term::Es(b.clone(), x.clone(), Box::new(d.replace_at(rest, new)))
                }
                _ => panic!("replace_at: path does not exist in term"),
            },
        }
    }
}

/// Deterministic fresh-name supply: candidates are derived from the base
/// name by priming, probed against the avoid set. The supply is confined to
/// one reduction session, so traces are reproducible.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    used: BTreeSet<Name>,
}

impl FreshNames {
    pub fn new() -> Self {
        FreshNames::default()
    }

    pub fn avoiding(t: &Term) -> Self {
        FreshNames {
            used: t.all_names(),
        }
    }

    pub fn reserve(&mut self, names: impl IntoIterator<Item = Name>) {
        self.used.extend(names);
    }

    pub fn fresh(&mut self, base: &str) -> Name {
        let base: String = base.chars().take_while(|c| *c != '\'').collect();
        let base = if base.is_empty() { "x".to_string() } else { base };
        let mut k = 0usize;
        loop {
            let cand = if k == 0 {
                format!("{base}'")
            } else {
                format!("{base}'{k}")
            };
            if !self.used.contains(&cand) {
                self.used.insert(cand.clone());
                return cand;
            }
            k += 1;
        }
    }
}

/// Pick one fresh name avoiding a fixed set.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    let mut supply = FreshNames {
        used: avoid.clone(),
    };
    supply.fresh(base)
}

/// Rename the free occurrences of `from` to `to`. The caller guarantees that
/// `to` is not captured anywhere `from` occurs free.
pub fn rename_free(t: &Term, from: &str, to: &str) -> Term {
    match t {
        Term::Var(x) => {
            if x == from {
                Term::Var(to.to_string())
            } else {
                t.clone()
            }
        }
        Term::Abs(x, b) => {
            if x == from {
                t.clone()
            } else {
                Term::Abs(x.clone(), Box::new(rename_free(b, from, to)))
            }
        }
        Term::App(f, a) => Term::App(
            Box::new(rename_free(f, from, to)),
            Box::new(rename_free(a, from, to)),
        ),
        Term::Es(b, x, d) => {
            let d2 = rename_free(d, from, to);
            if x == from {
                Term::Es(b.clone(), x.clone(), Box::new(d2))
            } else {
                Term::Es(Box::new(rename_free(b, from, to)), x.clone(), Box::new(d2))
            }
        }
    }
}

/// Capture-avoiding substitution `t{x<-u}`. Binders in `t` are renamed on
/// the fly only when they would capture a free variable of `u`.
pub fn meta_subst(t: &Term, x: &str, u: &Term) -> Term {
    let fv_u = u.free_vars();
    subst_rec(t, x, u, &fv_u)
}

fn subst_rec(t: &Term, x: &str, u: &Term, fv_u: &BTreeSet<Name>) -> Term {
    match t {
        Term::Var(y) => {
            if y == x {
                u.clone()
            } else {
                t.clone()
            }
        }
        Term::Abs(y, b) => {
            if y == x {
                t.clone()
            } else if fv_u.contains(y) && b.free_vars().contains(x) {
                let mut avoid = fv_u.clone();
                avoid.extend(b.all_names());
                avoid.insert(x.to_string());
                let y2 = fresh_name(y, &avoid);
                let b2 = rename_free(b, y, &y2);
                Term::Abs(y2, Box::new(subst_rec(&b2, x, u, fv_u)))
            } else {
                Term::Abs(y.clone(), Box::new(subst_rec(b, x, u, fv_u)))
            }
        }
        Term::App(f, a) => Term::App(
            Box::new(subst_rec(f, x, u, fv_u)),
            Box::new(subst_rec(a, x, u, fv_u)),
        ),
        Term::Es(b, y, d) => {
            let d2 = subst_rec(d, x, u, fv_u);
            if y == x {
                Term::Es(b.clone(), y.clone(), Box::new(d2))
            } else if fv_u.contains(y) && b.free_vars().contains(x) {
                let mut avoid = fv_u.clone();
                avoid.extend(b.all_names());
                avoid.insert(x.to_string());
                let y2 = fresh_name(y, &avoid);
                let b2 = rename_free(b, y, &y2);
                Term::Es(Box::new(subst_rec(&b2, x, u, fv_u)), y2, Box::new(d2))
            } else {
                Term::Es(
                    Box::new(subst_rec(b, x, u, fv_u)),
                    y.clone(),
                    Box::new(d2),
                )
            }
        }
    }
}

/// Substitution without any renaming. Fails if a binder of `t` would capture
/// a free variable of `u` at a free occurrence of `x`.
pub fn plain_subst(t: &Term, x: &str, u: &Term) -> Option<Term> {
    let fv_u = u.free_vars();
    fn go(t: &Term, x: &str, u: &Term, fv_u: &BTreeSet<Name>) -> Option<Term> {
        match t {
            Term::Var(y) => Some(if y == x { u.clone() } else { t.clone() }),
            Term::Abs(y, b) => {
                if y == x {
                    Some(t.clone())
                } else if fv_u.contains(y) && b.free_vars().contains(x) {
                    None
                } else {
                    Some(Term::Abs(y.clone(), Box::new(go(b, x, u, fv_u)?)))
                }
            }
            Term::App(f, a) => Some(Term::App(
                Box::new(go(f, x, u, fv_u)?),
                Box::new(go(a, x, u, fv_u)?),
            )),
            Term::Es(b, y, d) => {
                let d2 = go(d, x, u, fv_u)?;
                if y == x {
                    Some(Term::Es(b.clone(), y.clone(), Box::new(d2)))
                } else if fv_u.contains(y) && b.free_vars().contains(x) {
                    None
                } else {
                    Some(Term::Es(Box::new(go(b, x, u, fv_u)?), y.clone(), Box::new(d2)))
                }
            }
        }
    }
    go(t, x, u, &fv_u)
}

/// Rename the binders of `t` so that none of them lies in `avoid`.
/// The result is alpha-equal to `t`.
pub fn freshen_binders(t: &Term, avoid: &BTreeSet<Name>) -> Term {
    fn go(t: &Term, avoid: &BTreeSet<Name>, supply: &mut FreshNames) -> Term {
        match t {
            Term::Var(_) => t.clone(),
            Term::Abs(x, b) => {
                if avoid.contains(x) {
                    let x2 = supply.fresh(x);
                    let b2 = rename_free(b, x, &x2);
                    Term::Abs(x2, Box::new(go(&b2, avoid, supply)))
                } else {
                    Term::Abs(x.clone(), Box::new(go(b, avoid, supply)))
                }
            }
            Term::App(f, a) => Term::App(
                Box::new(go(f, avoid, supply)),
                Box::new(go(a, avoid, supply)),
            ),
            Term::Es(b, x, d) => {
                let d2 = go(d, avoid, supply);
                if avoid.contains(x) {
                    let x2 = supply.fresh(x);
                    let b2 = rename_free(b, x, &x2);
                    Term::Es(Box::new(go(&b2, avoid, supply)), x2, Box::new(d2))
                } else {
                    Term::Es(Box::new(go(b, avoid, supply)), x.clone(), Box::new(d2))
                }
            }
        }
    }
    let mut supply = FreshNames::avoiding(t);
    supply.reserve(avoid.iter().cloned());
    go(t, avoid, &mut supply)
}

// ---------------------------------------------------------------------------
// Alpha canonicalization
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
enum CanonNode {
    Bound(u32),
    Free(Name),
    Abs(Box<CanonNode>),
    App(Box<CanonNode>, Box<CanonNode>),
    Es(Box<CanonNode>, Box<CanonNode>),
}

/// A term with binders replaced by position-determined indices: two terms
/// have equal canonical forms iff they are alpha-equivalent.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CanonicalTerm(CanonNode);

pub fn alpha_canon(t: &Term) -> CanonicalTerm {
    fn go(t: &Term, scope: &mut Vec<Name>) -> CanonNode {
        match t {
            Term::Var(x) => match scope.iter().rev().position(|y| y == x) {
                Some(i) => CanonNode::Bound(i as u32),
                None => CanonNode::Free(x.clone()),
            },
            Term::Abs(x, b) => {
                scope.push(x.clone());
                let b2 = go(b, scope);
                scope.pop();
                CanonNode::Abs(Box::new(b2))
            }
            Term::App(f, a) => CanonNode::App(Box::new(go(f, scope)), Box::new(go(a, scope))),
            Term::Es(b, x, d) => {
                let d2 = go(d, scope);
                scope.push(x.clone());
                let b2 = go(b, scope);
                scope.pop();
                CanonNode::Es(Box::new(b2), Box::new(d2))
            }
        }
    }
    CanonicalTerm(go(t, &mut Vec::new()))
}

pub fn alpha_eq(t: &Term, u: &Term) -> bool {
    alpha_canon(t) == alpha_canon(u)
}

// ---------------------------------------------------------------------------
// ES expansion and term sizes
// ---------------------------------------------------------------------------

/// Expand every ES into a beta-redex: `(t[x<-u])* = (\x.t*) u*`.
pub fn es_expand(t: &Term) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::Abs(x, b) => Term::Abs(x.clone(), Box::new(es_expand(b))),
        Term::App(f, a) => Term::App(Box::new(es_expand(f)), Box::new(es_expand(a))),
        Term::Es(b, x, d) => app(Term::Abs(x.clone(), Box::new(es_expand(b))), es_expand(d)),
    }
}

/// The open size `|t|_o` (applications out of abstractions) and the solvable
/// size `|t|_s` (applications plus head abstractions), returned together.
pub fn measure(t: &Term) -> (usize, usize) {
    (open_size(t), solvable_size(t))
}

pub fn open_size(t: &Term) -> usize {
    match t {
        Term::Var(_) | Term::Abs(_, _) => 0,
        Term::App(f, a) => open_size(f) + open_size(a) + 1,
        Term::Es(b, _, d) => open_size(b) + open_size(d),
    }
}

pub fn solvable_size(t: &Term) -> usize {
    match t {
        Term::Var(_) => 0,
        Term::Abs(_, b) => solvable_size(b) + 1,
        Term::App(f, a) => solvable_size(f) + open_size(a) + 1,
        Term::Es(b, _, d) => solvable_size(b) + open_size(d),
    }
}

// ---------------------------------------------------------------------------
// One-hole contexts
// ---------------------------------------------------------------------------

/// Context kinds, each with its own grammar:
///
/// ```text
/// Sub      L ::= <> | L[x<-t]
/// Open     O ::= <> | O t | t O | O[x<-t] | t[x<-O]
/// Full     F ::= O with \x.F allowed everywhere
/// Solving  S ::= O | \x.S | S t | S[x<-t]
/// Head     H ::= <> | \x.H | H t
/// Testing  T ::= <> | (\x.T) t | T t
/// ```
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ContextKind {
    Sub,
    Open,
    Full,
    Solving,
    Head,
    Testing,
}

/// A term-shaped tree with exactly one hole.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Context {
    Hole,
    Abs(Name, Box<Context>),
    AppL(Box<Context>, Term),
    AppR(Term, Box<Context>),
    EsBody(Box<Context>, Name, Term),
    EsDef(Term, Name, Box<Context>),
}

impl Context {
    /// Plug `t` into the hole. Plugging is literal tree grafting: binders of
    /// the context capture free variables of `t`, no renaming happens.
    pub fn plug(&self, t: &Term) -> Term {
        match self {
            Context::Hole => t.clone(),
            Context::Abs(x, c) => Term::Abs(x.clone(), Box::new(c.plug(t))),
            Context::AppL(c, u) => app(c.plug(t), u.clone()),
            Context::AppR(u, c) => app(u.clone(), c.plug(t)),
            Context::EsBody(c, x, u) => Term::Es(Box::new(c.plug(t)), x.clone(), Box::new(u.clone())),
            Context::EsDef(u, x, c) => Term::Es(Box::new(u.clone()), x.clone(), Box::new(c.plug(t))),
        }
    }

    /// The path from the root to the hole.
    pub fn hole_path(&self) -> Path {
        let mut path = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Context::Hole => return path,
                Context::Abs(_, c) => {
                    path.push(0);
                    cur = c;
                }
                Context::AppL(c, _) => {
                    path.push(0);
                    cur = c;
                }
                Context::AppR(_, c) => {
                    path.push(1);
                    cur = c;
                }
                Context::EsBody(c, _, _) => {
                    path.push(0);
                    cur = c;
                }
                Context::EsDef(_, _, c) => {
                    path.push(1);
                    cur = c;
                }
            }
        }
    }

    pub fn matches(&self, kind: ContextKind) -> bool {
        match kind {
            ContextKind::Sub => match self {
                Context::Hole => true,
                Context::EsBody(c, _, _) => c.matches(ContextKind::Sub),
                _ => false,
            },
            ContextKind::Open => match self {
                Context::Hole => true,
                Context::Abs(_, _) => false,
                Context::AppL(c, _) | Context::AppR(_, c) => c.matches(ContextKind::Open),
                Context::EsBody(c, _, _) | Context::EsDef(_, _, c) => c.matches(ContextKind::Open),
            },
            ContextKind::Full => true,
            ContextKind::Solving => {
                self.matches(ContextKind::Open)
                    || match self {
                        Context::Abs(_, c) => c.matches(ContextKind::Solving),
                        Context::AppL(c, _) => c.matches(ContextKind::Solving),
                        Context::EsBody(c, _, _) => c.matches(ContextKind::Solving),
                        _ => false,
                    }
            }
            ContextKind::Head => match self {
                Context::Hole => true,
                Context::Abs(_, c) => c.matches(ContextKind::Head),
                Context::AppL(c, _) => c.matches(ContextKind::Head),
                _ => false,
            },
            ContextKind::Testing => match self {
                Context::Hole => true,
                Context::AppL(c, _) => match &**c {
                    Context::Abs(_, inner) => inner.matches(ContextKind::Testing),
                    other => other.matches(ContextKind::Testing),
                },
                _ => false,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum PrintPos {
    Top,
    Fun,
    Arg,
    EsBody,
}

fn fmt_term(t: &Term, pos: PrintPos, out: &mut String) {
    match t {
        Term::Var(x) => out.push_str(x),
        Term::Abs(x, b) => {
            let parens = !matches!(pos, PrintPos::Top);
            if parens {
                out.push('(');
            }
            out.push('\\');
            out.push_str(x);
            out.push('.');
            fmt_term(b, PrintPos::Top, out);
            if parens {
                out.push(')');
            }
        }
        Term::App(f, a) => {
            let parens = matches!(pos, PrintPos::Arg | PrintPos::EsBody);
            if parens {
                out.push('(');
            }
            fmt_term(f, PrintPos::Fun, out);
            out.push(' ');
            fmt_term(a, PrintPos::Arg, out);
            if parens {
                out.push(')');
            }
        }
        Term::Es(b, x, d) => {
            fmt_term(b, PrintPos::EsBody, out);
            out.push('[');
            out.push_str(x);
            out.push_str("<-");
            fmt_term(d, PrintPos::Top, out);
            out.push(']');
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_term(self, PrintPos::Top, &mut s);
        f.write_str(&s)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Render by plugging a marker that cannot be parsed as a variable.
        let marker = Term::Var("<>".to_string());
        write!(f, "{}", self.plug(&marker))
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    /// When set, the token `<>` is accepted as the hole of a context.
    holes: bool,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, holes: bool) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            holes,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn at_lambda(&self) -> bool {
        matches!(self.peek(), Some('\\') | Some('λ'))
    }

    fn at_hole(&self) -> bool {
        self.holes && self.src[self.pos..].starts_with("<>")
    }

    fn parse_var(&mut self) -> Result<Name, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                self.bump();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '\'' {
                        self.bump();
                    } else {
                        break;
                    }
                }
                Ok(self.src[start..self.pos].to_string())
            }
            _ => self.err("expected a variable name"),
        }
    }

    fn parse_term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        if self.at_lambda() {
            self.parse_lambda()
        } else {
            self.parse_app()
        }
    }

    fn parse_lambda(&mut self) -> Result<Term, ParseError> {
        self.bump();
        let x = self.parse_var()?;
        self.skip_ws();
        self.expect('.')?;
        let body = self.parse_term()?;
        Ok(Term::Abs(x, Box::new(body)))
    }

    fn parse_app(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                None | Some(')') | Some(']') => break,
                Some('λ') | Some('\\') => {
                    // A lambda factor extends to the end of the application.
                    let arg = self.parse_lambda()?;
                    acc = app(acc, arg);
                    break;
                }
                Some(c) if c.is_ascii_alphabetic() || c == '(' || self.at_hole() => {
                    let arg = self.parse_factor()?;
                    acc = app(acc, arg);
                }
                Some(c) => return self.err(format!("unexpected character '{c}'")),
            }
        }
        Ok(acc)
    }

    fn parse_factor(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let mut acc = if self.at_hole() {
            self.pos += 2;
            Term::Var(HOLE_MARKER.to_string())
        } else if self.eat('(') {
            let t = self.parse_term()?;
            self.skip_ws();
            self.expect(')')?;
            t
        } else {
            Term::Var(self.parse_var()?)
        };
        loop {
            self.skip_ws();
            if self.eat('[') {
                let x = self.parse_var()?;
                self.skip_ws();
                if self.src[self.pos..].starts_with("<-") {
                    self.pos += 2;
                } else if self.src[self.pos..].starts_with('←') {
                    self.pos += '←'.len_utf8();
                } else {
                    return self.err("expected '<-' in explicit substitution");
                }
                let def = self.parse_term()?;
                self.skip_ws();
                self.expect(']')?;
                acc = Term::Es(Box::new(acc), x, Box::new(def));
            } else {
                break;
            }
        }
        Ok(acc)
    }
}

const HOLE_MARKER: &str = "\u{0}hole";

/// Parse a term from the textual grammar. Application is left-associative
/// and the postfix `[x<-u]` binds tighter than application.
pub fn parse(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, false);
    let t = p.parse_term()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return p.err("trailing input");
    }
    Ok(t)
}

/// Parse a one-hole context: the term grammar extended with the atom `<>`.
pub fn parse_context(src: &str) -> Result<Context, ParseError> {
    let mut p = Parser::new(src, true);
    let t = p.parse_term()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return p.err("trailing input");
    }
    fn to_ctx(t: &Term) -> Result<Option<Context>, usize> {
        match t {
            Term::Var(x) if x == HOLE_MARKER => Ok(Some(Context::Hole)),
            Term::Var(_) => Ok(None),
            Term::Abs(x, b) => Ok(to_ctx(b)?.map(|c| Context::Abs(x.clone(), Box::new(c)))),
            Term::App(f, a) => match (to_ctx(f)?, to_ctx(a)?) {
                (Some(c), None) => Ok(Some(Context::AppL(Box::new(c), (**a).clone()))),
                (None, Some(c)) => Ok(Some(Context::AppR((**f).clone(), Box::new(c)))),
                (None, None) => Ok(None),
                (Some(_), Some(_)) => Err(2),
            },
            Term::Es(b, x, d) => match (to_ctx(b)?, to_ctx(d)?) {
                (Some(c), None) => Ok(Some(Context::EsBody(Box::new(c), x.clone(), (**d).clone()))),
                (None, Some(c)) => Ok(Some(Context::EsDef((**b).clone(), x.clone(), Box::new(c)))),
                (None, None) => Ok(None),
                (Some(_), Some(_)) => Err(2),
            },
        }
    }
    match to_ctx(&t) {
        Ok(Some(c)) => Ok(c),
        Ok(None) => Err(ParseError {
            pos: 0,
            msg: "context has no hole".to_string(),
        }),
        Err(_) => Err(ParseError {
            pos: 0,
            msg: "context has more than one hole".to_string(),
        }),
    }
}
