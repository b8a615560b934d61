//! The call-by-value multi type language, its predicates, type contexts,
//! and the derivation checker with size accounting.
//!
//! ```text
//! linear types  A, B ::= X | M -o N
//! multi types   M, N ::= [A1, ..., An]      (a finite multiset, n >= 0)
//! ```
//!
//! Judgments are derived by five rules. Values are the only terms typed with
//! linear types (by `ax` and `lam`); the `many` rule, applicable only to
//! values, bundles linear typings into a multiset:
//!
//! ```text
//!  ax    x:[A] |- x : A
//!  lam   G, x:M |- t : N          =>  G |- \x.t : M -o N
//!  many  (Gi |- v : Ai)  i in I   =>  +Gi |- v : [Ai | i in I]
//!  @     G |- t : [M -o N], D |- u : M  =>  G+D |- t u : N
//!  es    G, x:M |- t : N, D |- u : M    =>  G+D |- t[x<-u] : N
//! ```
//!
//! Two sizes are tracked: `|D|` counts every rule occurrence except `many`,
//! and the multiplicative size `|D|_m` counts only `lam` and `@` rules.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::syntax::{Name, Path, Term};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum LinearType {
    /// The ground atom `X`.
    Atom,
    Arrow(MultiType, MultiType),
}

/// A finite multiset of linear types, kept as a canonically sorted list so
/// that structural equality is multiset equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct MultiType(Vec<LinearType>);

impl MultiType {
    pub fn empty() -> Self {
        MultiType(Vec::new())
    }

    pub fn singleton(a: LinearType) -> Self {
        MultiType(vec![a])
    }

    pub fn new(mut elems: Vec<LinearType>) -> Self {
        elems.sort();
        MultiType(elems)
    }

    /// The ground multi type `n[X]`.
    pub fn ground(n: usize) -> Self {
        MultiType(vec![LinearType::Atom; n])
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn elems(&self) -> &[LinearType] {
        &self.0
    }

    pub fn union(&self, other: &MultiType) -> MultiType {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        v.sort();
        MultiType(v)
    }

    /// Remove one multiset from another; `None` if it is not contained.
    pub fn difference(&self, other: &MultiType) -> Option<MultiType> {
        let mut v = self.0.clone();
        for a in &other.0 {
            let i = v.iter().position(|b| b == a)?;
            v.remove(i);
        }
        Some(MultiType(v))
    }
}

impl FromIterator<LinearType> for MultiType {
    fn from_iter<I: IntoIterator<Item = LinearType>>(iter: I) -> Self {
        MultiType::new(iter.into_iter().collect())
    }
}

// ---------------------------------------------------------------------------
// Type predicates
// ---------------------------------------------------------------------------

fn linear_inert(a: &LinearType) -> bool {
    match a {
        LinearType::Atom => true,
        LinearType::Arrow(l, r) => multi_ground(l) && multi_inert(r),
    }
}

fn multi_inert(m: &MultiType) -> bool {
    m.elems().iter().all(linear_inert)
}

fn multi_ground(m: &MultiType) -> bool {
    m.elems().iter().all(|a| matches!(a, LinearType::Atom))
}

fn linear_solvable(a: &LinearType) -> bool {
    match a {
        LinearType::Atom => true,
        LinearType::Arrow(_, r) => multi_solvable(r),
    }
}

fn multi_solvable(m: &MultiType) -> bool {
    !m.is_empty() && m.elems().iter().all(linear_solvable)
}

fn linear_unitary_solvable(a: &LinearType) -> bool {
    match a {
        LinearType::Atom => true,
        LinearType::Arrow(_, r) => multi_unitary_solvable(r),
    }
}

fn multi_unitary_solvable(m: &MultiType) -> bool {
    m.len() == 1 && linear_unitary_solvable(&m.elems()[0])
}

fn linear_inertly_solvable(a: &LinearType) -> bool {
    match a {
        LinearType::Atom => true,
        LinearType::Arrow(l, r) => multi_inert(l) && multi_inertly_solvable(r),
    }
}

fn multi_inertly_solvable(m: &MultiType) -> bool {
    !m.is_empty() && m.elems().iter().all(linear_inertly_solvable)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TypeFlags {
    pub ground: bool,
    pub inert: bool,
    pub solvable: bool,
    pub unitary_solvable: bool,
    pub inertly_solvable: bool,
    pub precisely_solvable: bool,
}

/// Decide all grammar memberships for a multi type.
pub fn type_flags(m: &MultiType) -> TypeFlags {
    let unitary = multi_unitary_solvable(m);
    let inertly = multi_inertly_solvable(m);
    TypeFlags {
        ground: multi_ground(m),
        inert: multi_inert(m),
        solvable: multi_solvable(m),
        unitary_solvable: unitary,
        inertly_solvable: inertly,
        precisely_solvable: unitary && inertly,
    }
}

// ---------------------------------------------------------------------------
// Type contexts
// ---------------------------------------------------------------------------

/// A finite map from names to multi types; absent means the empty multiset.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct TypeContext(BTreeMap<Name, MultiType>);

impl TypeContext {
    pub fn empty() -> Self {
        TypeContext::default()
    }

    pub fn single(x: &str, m: MultiType) -> Self {
        let mut ctx = TypeContext::empty();
        ctx.set(x, m);
        ctx
    }

    /// The multi type of `x` (the empty multiset when absent).
    pub fn get(&self, x: &str) -> MultiType {
        self.0.get(x).cloned().unwrap_or_default()
    }

    /// Bind `x` to `m`, dropping the entry when `m` is empty.
    pub fn set(&mut self, x: &str, m: MultiType) {
        if m.is_empty() {
            self.0.remove(x);
        } else {
            self.0.insert(x.to_string(), m);
        }
    }

    pub fn without(&self, x: &str) -> TypeContext {
        let mut c = self.clone();
        c.0.remove(x);
        c
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Name, &MultiType)> {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pointwise multiset sum.
    pub fn join(&self, other: &TypeContext) -> TypeContext {
        let mut out = self.clone();
        for (x, m) in &other.0 {
            let cur = out.get(x);
            out.set(x, cur.union(m));
        }
        out
    }

    /// Is every assigned multi type inert?
    pub fn is_inert(&self) -> bool {
        self.0.values().all(multi_inert)
    }
}

/// Pointwise multiset sum of two type contexts.
pub fn ctx_join(a: &TypeContext, b: &TypeContext) -> TypeContext {
    a.join(b)
}

// ---------------------------------------------------------------------------
// Derivations
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Rule {
    Ax,
    Lam,
    App,
    Es,
    Many,
}

impl Rule {
    pub fn json_name(self) -> &'static str {
        match self {
            Rule::Ax => "ax",
            Rule::Lam => "lambda",
            Rule::App => "app",
            Rule::Es => "es",
            Rule::Many => "many",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum JudgmentType {
    Linear(LinearType),
    Multi(MultiType),
}

impl JudgmentType {
    pub fn as_multi(&self) -> Option<&MultiType> {
        match self {
            JudgmentType::Multi(m) => Some(m),
            JudgmentType::Linear(_) => None,
        }
    }

    pub fn as_linear(&self) -> Option<&LinearType> {
        match self {
            JudgmentType::Linear(a) => Some(a),
            JudgmentType::Multi(_) => None,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Judgment {
    pub ctx: TypeContext,
    pub subject: Term,
    pub ty: JudgmentType,
}

/// An explicit typing tree: every node stores its full judgment, so the
/// checker can revalidate each inference locally and the quantitative
/// transformations can manipulate interior judgments.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub judgment: Judgment,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    /// `|D|`: the number of rule occurrences except `many`.
    pub fn size(&self) -> usize {
        let here = usize::from(self.rule != Rule::Many);
        here + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    /// `|D|_m`: the number of `lam` and `@` rule occurrences.
    pub fn msize(&self) -> usize {
        let here = usize::from(matches!(self.rule, Rule::Lam | Rule::App));
        here + self.premises.iter().map(Derivation::msize).sum::<usize>()
    }

    pub fn final_multi_type(&self) -> Option<&MultiType> {
        self.judgment.ty.as_multi()
    }
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("rule shape mismatch at {path:?}: {detail}")]
    RuleShapeMismatch { path: Path, detail: String },
    #[error("context sum mismatch at {path:?}")]
    ContextSumMismatch { path: Path },
    #[error("many rule applied to a non-value at {path:?}")]
    ManyOnNonValue { path: Path },
    #[error("premise subject mismatch at {path:?}")]
    SubjectMismatch { path: Path },
}

fn shape_err<T>(path: &Path, detail: impl Into<String>) -> Result<T, CheckError> {
    Err(CheckError::RuleShapeMismatch {
        path: path.clone(),
        detail: detail.into(),
    })
}

/// Revalidate every node of the derivation bottom-up and return the root
/// judgment together with the two sizes `(|D|, |D|_m)`.
pub fn check_derivation(d: &Derivation) -> Result<(Judgment, usize, usize), CheckError> {
    let mut path = Vec::new();
    check_node(d, &mut path)?;
    Ok((d.judgment.clone(), d.size(), d.msize()))
}

fn check_node(d: &Derivation, path: &mut Path) -> Result<(), CheckError> {
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        check_node(p, path)?;
        path.pop();
    }
    let j = &d.judgment;
    match d.rule {
        Rule::Ax => {
            if !d.premises.is_empty() {
                return shape_err(path, "ax has no premises");
            }
            let a = match j.ty.as_linear() {
                Some(a) => a,
                None => return shape_err(path, "ax concludes a linear judgment"),
            };
            let x = match &j.subject {
                Term::Var(x) => x,
                _ => return shape_err(path, "ax subject must be a variable"),
            };
            if j.ctx != TypeContext::single(x, MultiType::singleton(a.clone())) {
                return Err(CheckError::ContextSumMismatch { path: path.clone() });
            }
            Ok(())
        }
        Rule::Lam => {
            let [p] = d.premises.as_slice() else {
                return shape_err(path, "lam has exactly one premise");
            };
            let (x, body) = match &j.subject {
                Term::Abs(x, b) => (x, &**b),
                _ => return shape_err(path, "lam subject must be an abstraction"),
            };
            if p.judgment.subject != *body {
                return Err(CheckError::SubjectMismatch { path: path.clone() });
            }
            let n = match p.judgment.ty.as_multi() {
                Some(n) => n,
                None => return shape_err(path, "lam premise concludes a multi judgment"),
            };
            let m = p.judgment.ctx.get(x);
            match j.ty.as_linear() {
                Some(LinearType::Arrow(l, r)) if l == &m && r == n => {}
                _ => return shape_err(path, "lam conclusion must be the discharged arrow"),
            }
            if j.ctx != p.judgment.ctx.without(x) {
                return Err(CheckError::ContextSumMismatch { path: path.clone() });
            }
            Ok(())
        }
        Rule::Many => {
            if !j.subject.is_value() {
                return Err(CheckError::ManyOnNonValue { path: path.clone() });
            }
            let mut elems = Vec::new();
            let mut ctx = TypeContext::empty();
            for p in &d.premises {
                if p.judgment.subject != j.subject {
                    return Err(CheckError::SubjectMismatch { path: path.clone() });
                }
                let a = match p.judgment.ty.as_linear() {
                    Some(a) => a.clone(),
                    None => return shape_err(path, "many premises conclude linear judgments"),
                };
                elems.push(a);
                ctx = ctx.join(&p.judgment.ctx);
            }
            match j.ty.as_multi() {
                Some(m) if *m == MultiType::new(elems) => {}
                _ => return shape_err(path, "many conclusion must be the premise multiset"),
            }
            if j.ctx != ctx {
                return Err(CheckError::ContextSumMismatch { path: path.clone() });
            }
            Ok(())
        }
        Rule::App => {
            let [pf, pa] = d.premises.as_slice() else {
                return shape_err(path, "app has exactly two premises");
            };
            let (f, a) = match &j.subject {
                Term::App(f, a) => (&**f, &**a),
                _ => return shape_err(path, "app subject must be an application"),
            };
            if pf.judgment.subject != *f || pa.judgment.subject != *a {
                return Err(CheckError::SubjectMismatch { path: path.clone() });
            }
            let fun_ty = match pf.judgment.ty.as_multi() {
                Some(m) => m,
                None => return shape_err(path, "app function premise concludes a multi judgment"),
            };
            let (dom, cod) = match fun_ty.elems() {
                [LinearType::Arrow(dom, cod)] => (dom, cod),
                _ => return shape_err(path, "app function must be typed with a singleton arrow"),
            };
            match pa.judgment.ty.as_multi() {
                Some(m) if m == dom => {}
                _ => return shape_err(path, "app argument type must match the arrow domain"),
            }
            match j.ty.as_multi() {
                Some(m) if m == cod => {}
                _ => return shape_err(path, "app conclusion must be the arrow codomain"),
            }
            if j.ctx != pf.judgment.ctx.join(&pa.judgment.ctx) {
                return Err(CheckError::ContextSumMismatch { path: path.clone() });
            }
            Ok(())
        }
        Rule::Es => {
            let [pb, pd] = d.premises.as_slice() else {
                return shape_err(path, "es has exactly two premises");
            };
            let (b, x, def) = match &j.subject {
                Term::Es(b, x, def) => (&**b, x, &**def),
                _ => return shape_err(path, "es subject must be an explicit substitution"),
            };
            if pb.judgment.subject != *b || pd.judgment.subject != *def {
                return Err(CheckError::SubjectMismatch { path: path.clone() });
            }
            let n = match pb.judgment.ty.as_multi() {
                Some(n) => n,
                None => return shape_err(path, "es body premise concludes a multi judgment"),
            };
            let m = pb.judgment.ctx.get(x);
            match pd.judgment.ty.as_multi() {
                Some(dm) if dm == &m => {}
                _ => return shape_err(path, "es definition type must match the bound variable"),
            }
            match j.ty.as_multi() {
                Some(jm) if jm == n => {}
                _ => return shape_err(path, "es conclusion must be the body type"),
            }
            if j.ctx != pb.judgment.ctx.without(x).join(&pd.judgment.ctx) {
                return Err(CheckError::ContextSumMismatch { path: path.clone() });
            }
            Ok(())
        }
    }
}

/// `(inert, tight)` for a checking derivation: inert when the final context
/// assigns only inert multi types, tight when moreover the final type is a
/// ground multi type.
pub fn derivation_flags(d: &Derivation) -> Result<(bool, bool), CheckError> {
    let (j, _, _) = check_derivation(d)?;
    let inert = j.ctx.is_inert();
    let tight = inert
        && match &j.ty {
            JudgmentType::Multi(m) => multi_ground(m),
            JudgmentType::Linear(_) => false,
        };
    Ok((inert, tight))
}

// ---------------------------------------------------------------------------
// JSON round-trip
// ---------------------------------------------------------------------------

pub fn linear_type_to_json(a: &LinearType) -> Value {
    match a {
        LinearType::Atom => json!({"atom": "X"}),
        LinearType::Arrow(l, r) => json!({"arrow": {
            "left": multi_type_to_json(l),
            "right": multi_type_to_json(r),
        }}),
    }
}

pub fn multi_type_to_json(m: &MultiType) -> Value {
    Value::Array(m.elems().iter().map(linear_type_to_json).collect())
}

pub fn linear_type_from_json(v: &Value) -> Result<LinearType, String> {
    let obj = v.as_object().ok_or("linear type must be an object")?;
    if let Some(atom) = obj.get("atom") {
        if atom == "X" {
            return Ok(LinearType::Atom);
        }
        return Err(format!("unknown atom {atom}"));
    }
    if let Some(arrow) = obj.get("arrow") {
        let left = arrow.get("left").ok_or("arrow needs a left multiset")?;
        let right = arrow.get("right").ok_or("arrow needs a right multiset")?;
        return Ok(LinearType::Arrow(
            multi_type_from_json(left)?,
            multi_type_from_json(right)?,
        ));
    }
    Err("linear type must be an atom or an arrow".to_string())
}

pub fn multi_type_from_json(v: &Value) -> Result<MultiType, String> {
    let arr = v.as_array().ok_or("multi type must be an array")?;
    arr.iter().map(linear_type_from_json).collect()
}

fn ctx_to_json(ctx: &TypeContext) -> Value {
    Value::Object(
        ctx.entries()
            .map(|(x, m)| (x.clone(), multi_type_to_json(m)))
            .collect(),
    )
}

fn ctx_from_json(v: &Value) -> Result<TypeContext, String> {
    let obj = v.as_object().ok_or("context must be an object")?;
    let mut ctx = TypeContext::empty();
    for (x, m) in obj {
        ctx.set(x, multi_type_from_json(m)?);
    }
    Ok(ctx)
}

pub fn derivation_to_json(d: &Derivation) -> Value {
    json!({
        "rule": d.rule.json_name(),
        "judgment": {
            "ctx": ctx_to_json(&d.judgment.ctx),
            "term": d.judgment.subject.to_string(),
            "type": match &d.judgment.ty {
                JudgmentType::Linear(a) => linear_type_to_json(a),
                JudgmentType::Multi(m) => multi_type_to_json(m),
            },
        },
        "premises": d.premises.iter().map(derivation_to_json).collect::<Vec<_>>(),
    })
}

pub fn derivation_from_json(v: &Value) -> Result<Derivation, String> {
    let rule = match v.get("rule").and_then(Value::as_str) {
        Some("ax") => Rule::Ax,
        Some("lambda") => Rule::Lam,
        Some("app") => Rule::App,
        Some("es") => Rule::Es,
        Some("many") => Rule::Many,
        other => return Err(format!("unknown rule {other:?}")),
    };
    let j = v.get("judgment").ok_or("missing judgment")?;
    let ctx = ctx_from_json(j.get("ctx").ok_or("missing ctx")?)?;
    let term_src = j
        .get("term")
        .and_then(Value::as_str)
        .ok_or("missing term")?;
    let subject = crate::syntax::parse(term_src).map_err(|e| e.to_string())?;
    let ty_json = j.get("type").ok_or("missing type")?;
    let ty = if ty_json.is_array() {
        JudgmentType::Multi(multi_type_from_json(ty_json)?)
    } else {
        JudgmentType::Linear(linear_type_from_json(ty_json)?)
    };
    let premises = v
        .get("premises")
        .and_then(Value::as_array)
        .map(|ps| ps.iter().map(derivation_from_json).collect::<Result<_, _>>())
        .transpose()?
        .unwrap_or_default();
    Ok(Derivation {
        rule,
        judgment: Judgment { ctx, subject, ty },
        premises,
    })
}
