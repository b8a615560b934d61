//! Executable derivation transformers: splitting and merging of value
//! typings, the substitution and removal constructions, linear substitution,
//! subject reduction and expansion with exact size accounting, typability of
//! normal forms, and end-to-end inference by typing the normal form and
//! pulling the derivation back along the trace.
//!
//! Every operation both consumes and produces derivations that revalidate
//! under [`check_derivation`]; the checker stays independent of the
//! constructions here.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::classify::classify;
use crate::multitypes::{
    Derivation, Judgment, JudgmentType, LinearType, MultiType, Rule, TypeContext,
};
use crate::rewriting::{self, equiv_rewrites, reduce, StepKind, Strategy, Trace};
use crate::syntax::{
    alpha_eq, fresh_name, plain_subst, rename_free, freshen_binders, FreshNames, Name, Term,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeriveError {
    #[error("subject is not a value")]
    NonValueSubject,
    #[error("multiset split does not recompose the original type")]
    SplitMismatch,
    #[error("subjects are not alpha-equal")]
    SubjectMismatch,
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("term is not inert")]
    NotInert,
    #[error("term is not a fireball")]
    NotFireball,
    #[error("term is not a solved fireball")]
    NotSolvedFireball,
    #[error("variable does not occur exactly once in an open position")]
    MultiplicityViolation,
    #[error("not a valid step of the expected shape: {0}")]
    InvalidStep(String),
    #[error("malformed derivation: {0}")]
    Malformed(String),
}

type Result<T> = std::result::Result<T, DeriveError>;

fn mismatch<T>(msg: impl Into<String>) -> Result<T> {
    Err(DeriveError::TypeMismatch(msg.into()))
}

// ---------------------------------------------------------------------------
// Judgment-computing node builders
// ---------------------------------------------------------------------------

pub fn mk_ax(x: &str, a: LinearType) -> Derivation {
    Derivation {
        rule: Rule::Ax,
        judgment: Judgment {
            ctx: TypeContext::single(x, MultiType::singleton(a.clone())),
            subject: Term::Var(x.to_string()),
            ty: JudgmentType::Linear(a),
        },
        premises: vec![],
    }
}

pub fn mk_many(subject: Term, premises: Vec<Derivation>) -> Result<Derivation> {
    if !subject.is_value() {
        return Err(DeriveError::NonValueSubject);
    }
    let mut ctx = TypeContext::empty();
    let mut elems = Vec::new();
    for p in &premises {
        if p.judgment.subject != subject {
            return Err(DeriveError::SubjectMismatch);
        }
        match &p.judgment.ty {
            JudgmentType::Linear(a) => elems.push(a.clone()),
            JudgmentType::Multi(_) => {
                return Err(DeriveError::Malformed(
                    "many premises must conclude linear judgments".into(),
                ))
            }
        }
        ctx = ctx.join(&p.judgment.ctx);
    }
    Ok(Derivation {
        rule: Rule::Many,
        judgment: Judgment {
            ctx,
            subject,
            ty: JudgmentType::Multi(MultiType::new(elems)),
        },
        premises,
    })
}

pub fn mk_lam(x: &str, premise: Derivation) -> Result<Derivation> {
    let n = match &premise.judgment.ty {
        JudgmentType::Multi(n) => n.clone(),
        JudgmentType::Linear(_) => {
            return Err(DeriveError::Malformed(
                "lam premise must conclude a multi judgment".into(),
            ))
        }
    };
    let m = premise.judgment.ctx.get(x);
    let ctx = premise.judgment.ctx.without(x);
    let subject = Term::Abs(x.to_string(), Box::new(premise.judgment.subject.clone()));
    Ok(Derivation {
        rule: Rule::Lam,
        judgment: Judgment {
            ctx,
            subject,
            ty: JudgmentType::Linear(LinearType::Arrow(m, n)),
        },
        premises: vec![premise],
    })
}

pub fn mk_app(fun: Derivation, arg: Derivation) -> Result<Derivation> {
    let fun_ty = match &fun.judgment.ty {
        JudgmentType::Multi(m) => m,
        _ => return mismatch("application function must have a multi type"),
    };
    let (dom, cod) = match fun_ty.elems() {
        [LinearType::Arrow(dom, cod)] => (dom.clone(), cod.clone()),
        _ => return mismatch("application function must carry a singleton arrow"),
    };
    match &arg.judgment.ty {
        JudgmentType::Multi(m) if *m == dom => {}
        _ => return mismatch("argument type does not match the arrow domain"),
    }
    let subject = Term::App(
        Box::new(fun.judgment.subject.clone()),
        Box::new(arg.judgment.subject.clone()),
    );
    Ok(Derivation {
        rule: Rule::App,
        judgment: Judgment {
            ctx: fun.judgment.ctx.join(&arg.judgment.ctx),
            subject,
            ty: JudgmentType::Multi(cod),
        },
        premises: vec![fun, arg],
    })
}

pub fn mk_es(x: &str, body: Derivation, def: Derivation) -> Result<Derivation> {
    let n = match &body.judgment.ty {
        JudgmentType::Multi(n) => n.clone(),
        _ => return mismatch("es body must have a multi type"),
    };
    let m = body.judgment.ctx.get(x);
    match &def.judgment.ty {
        JudgmentType::Multi(dm) if *dm == m => {}
        _ => return mismatch("es definition type does not match the bound variable"),
    }
    let subject = Term::Es(
        Box::new(body.judgment.subject.clone()),
        x.to_string(),
        Box::new(def.judgment.subject.clone()),
    );
    Ok(Derivation {
        rule: Rule::Es,
        judgment: Judgment {
            ctx: body.judgment.ctx.without(x).join(&def.judgment.ctx),
            subject,
            ty: JudgmentType::Multi(n),
        },
        premises: vec![body, def],
    })
}

/// The canonical typing of a variable with an arbitrary multi type:
/// one axiom per element, bundled by `many`.
pub fn ax_bundle(x: &str, m: &MultiType) -> Derivation {
    let premises = m.elems().iter().map(|a| mk_ax(x, a.clone())).collect();
    mk_many(Term::Var(x.to_string()), premises).expect("variables are values")
}

// ---------------------------------------------------------------------------
// Alpha alignment of derivations
// ---------------------------------------------------------------------------

/// Rename the free occurrences of a variable throughout a derivation:
/// subjects, context entries, and premises, respecting shadowing.
fn rename_deriv(d: &Derivation, from: &str, to: &str) -> Derivation {
    let mut ctx = d.judgment.ctx.clone();
    let entry = ctx.get(from);
    if !entry.is_empty() {
        ctx.set(from, MultiType::empty());
        ctx.set(to, entry);
    }
    let subject = rename_free(&d.judgment.subject, from, to);
    let premises = match (&d.rule, &d.judgment.subject) {
        (Rule::Lam, Term::Abs(y, _)) if y == from => d.premises.clone(),
        (Rule::Es, Term::Es(_, y, _)) if y == from => {
            let mut ps = d.premises.clone();
            ps[1] = rename_deriv(&ps[1], from, to);
            ps
        }
        _ => d
            .premises
            .iter()
            .map(|p| rename_deriv(p, from, to))
            .collect(),
    };
    Derivation {
        rule: d.rule,
        judgment: Judgment {
            ctx,
            subject,
            ty: d.judgment.ty.clone(),
        },
        premises,
    }
}

/// Rename binders of a derivation so its subject becomes exactly `target`
/// (which must be alpha-equal to the current subject). The conclusion
/// context and type are unchanged.
pub fn alpha_align(d: &Derivation, target: &Term) -> Result<Derivation> {
    if d.judgment.subject == *target {
        return Ok(d.clone());
    }
    match (d.rule, &d.judgment.subject, target) {
        (Rule::Ax, Term::Var(x), Term::Var(y)) if x == y => Ok(d.clone()),
        (Rule::Many, _, _) => {
            let premises = d
                .premises
                .iter()
                .map(|p| alpha_align(p, target))
                .collect::<Result<Vec<_>>>()?;
            mk_many(target.clone(), premises)
        }
        (Rule::Lam, Term::Abs(x, _), Term::Abs(x2, b2)) => {
            let inner = if x == x2 {
                d.premises[0].clone()
            } else {
                rename_deriv(&d.premises[0], x, x2)
            };
            mk_lam(x2, alpha_align(&inner, b2)?)
        }
        (Rule::App, Term::App(_, _), Term::App(f2, a2)) => mk_app(
            alpha_align(&d.premises[0], f2)?,
            alpha_align(&d.premises[1], a2)?,
        ),
        (Rule::Es, Term::Es(_, x, _), Term::Es(b2, x2, d2)) => {
            let body = if x == x2 {
                d.premises[0].clone()
            } else {
                rename_deriv(&d.premises[0], x, x2)
            };
            mk_es(
                x2,
                alpha_align(&body, b2)?,
                alpha_align(&d.premises[1], d2)?,
            )
        }
        _ => Err(DeriveError::SubjectMismatch),
    }
}

// ---------------------------------------------------------------------------
// Splitting and merging of value typings
// ---------------------------------------------------------------------------

/// Split a value typing along a decomposition of its multiset: the premises
/// of the `many` node are partitioned so the two parts conclude `m1` and
/// `m2`. Contexts and both sizes are additive.
pub fn split_value(d: &Derivation, m1: &MultiType, m2: &MultiType) -> Result<(Derivation, Derivation)> {
    if d.rule != Rule::Many {
        return Err(DeriveError::NonValueSubject);
    }
    let m = match &d.judgment.ty {
        JudgmentType::Multi(m) => m,
        _ => return Err(DeriveError::Malformed("many concludes a multi judgment".into())),
    };
    if m1.union(m2) != *m {
        return Err(DeriveError::SplitMismatch);
    }
    let mut need: Vec<LinearType> = m1.elems().to_vec();
    let mut left = Vec::new();
    let mut right = Vec::new();
    for p in &d.premises {
        let a = p.judgment.ty.as_linear().ok_or_else(|| {
            DeriveError::Malformed("many premises conclude linear judgments".into())
        })?;
        if let Some(i) = need.iter().position(|b| b == a) {
            need.remove(i);
            left.push(p.clone());
        } else {
            right.push(p.clone());
        }
    }
    if !need.is_empty() {
        return Err(DeriveError::SplitMismatch);
    }
    Ok((
        mk_many(d.judgment.subject.clone(), left)?,
        mk_many(d.judgment.subject.clone(), right)?,
    ))
}

/// Merge two typings of alpha-equal values into one, concluding the multiset
/// union. Contexts join and both sizes are additive.
pub fn merge_value(d1: &Derivation, d2: &Derivation) -> Result<Derivation> {
    if d1.rule != Rule::Many || d2.rule != Rule::Many {
        return Err(DeriveError::NonValueSubject);
    }
    if !alpha_eq(&d1.judgment.subject, &d2.judgment.subject) {
        return Err(DeriveError::SubjectMismatch);
    }
    let d2 = alpha_align(d2, &d1.judgment.subject)?;
    let mut premises = d1.premises.clone();
    premises.extend(d2.premises);
    mk_many(d1.judgment.subject.clone(), premises)
}

/// The typing of a value with the empty multiset.
pub fn empty_value_typing(v: &Term) -> Result<Derivation> {
    mk_many(v.clone(), vec![])
}

// ---------------------------------------------------------------------------
// Substitution and removal
// ---------------------------------------------------------------------------

/// Split `psi` into pieces concluding the given multisets, in order.
fn split_many(psi: &Derivation, parts: &[MultiType]) -> Result<Vec<Derivation>> {
    let mut rest = psi.clone();
    let mut out = Vec::new();
    for (i, m) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            break;
        }
        let total = match &rest.judgment.ty {
            JudgmentType::Multi(t) => t.clone(),
            _ => return Err(DeriveError::Malformed("value typing expected".into())),
        };
        let remainder = total.difference(m).ok_or(DeriveError::SplitMismatch)?;
        let (piece, new_rest) = split_value(&rest, m, &remainder)?;
        out.push(piece);
        rest = new_rest;
    }
    if let Some(last) = parts.last() {
        match &rest.judgment.ty {
            JudgmentType::Multi(t) if t == last => {}
            _ => return Err(DeriveError::SplitMismatch),
        }
        out.push(rest);
    }
    Ok(out)
}

/// The substitution construction: from `phi` typing `t` under a context
/// assigning `n` to `x`, and `psi` typing a value `v` with `n`, build a
/// derivation of `t{x<-v}` under the joined context. The multiplicative
/// size is exactly additive, the general size at most additive.
pub fn subst_derivation(phi: &Derivation, x: &str, psi: &Derivation) -> Result<Derivation> {
    if !psi.judgment.subject.is_value() {
        return Err(DeriveError::NonValueSubject);
    }
    let n = phi.judgment.ctx.get(x);
    match &psi.judgment.ty {
        JudgmentType::Multi(m) if *m == n => {}
        _ => return mismatch("the type of the substituted value must match the variable"),
    }
    subst_rec(phi, x, psi)
}

fn subst_rec(phi: &Derivation, x: &str, psi: &Derivation) -> Result<Derivation> {
    let v = psi.judgment.subject.clone();
    let fv_v = v.free_vars();
    match (&phi.rule, &phi.judgment.subject.clone()) {
        (Rule::Many, Term::Var(y)) if y == x => Ok(psi.clone()),
        (Rule::Many, Term::Var(_)) => {
            // x does not occur: the substituted typing must be empty.
            if !psi.premises.is_empty() || !psi.judgment.ctx.is_empty() {
                return mismatch("unused variable requires the empty value typing");
            }
            Ok(phi.clone())
        }
        (Rule::Many, Term::Abs(y, b)) => {
            let (phi, y, b) = if y == x || fv_v.contains(y) {
                let mut avoid: BTreeSet<Name> = fv_v.clone();
                avoid.extend(phi.judgment.subject.all_names());
                avoid.insert(x.to_string());
                let y2 = fresh_name(y, &avoid);
                let b2 = rename_free(b, y, &y2);
                let target = Term::Abs(y2.clone(), Box::new(b2.clone()));
                (alpha_align(phi, &target)?, y2, b2)
            } else {
                (phi.clone(), y.clone(), (**b).clone())
            };
            let _ = b;
            let parts: Vec<MultiType> = phi
                .premises
                .iter()
                .map(|lam| lam.premises[0].judgment.ctx.get(x))
                .collect();
            if parts.is_empty() {
                // The variable is typed 0 here; psi must be empty.
                if !psi.premises.is_empty() || !psi.judgment.ctx.is_empty() {
                    return mismatch("empty abstraction typing requires the empty value typing");
                }
                let subject = crate::syntax::meta_subst(&phi.judgment.subject, x, &v);
                return mk_many(subject, vec![]);
            }
            let pieces = split_many(psi, &parts)?;
            let mut lams = Vec::new();
            for (lam, piece) in phi.premises.iter().zip(pieces) {
                let inner = subst_rec(&lam.premises[0], x, &piece)?;
                lams.push(mk_lam(&y, inner)?);
            }
            let subject = lams[0].judgment.subject.clone();
            mk_many(subject, lams)
        }
        (Rule::App, Term::App(_, _)) => {
            let pf = &phi.premises[0];
            let pa = &phi.premises[1];
            let pieces = split_many(psi, &[pf.judgment.ctx.get(x), pa.judgment.ctx.get(x)])?;
            mk_app(
                subst_rec(pf, x, &pieces[0])?,
                subst_rec(pa, x, &pieces[1])?,
            )
        }
        (Rule::Es, Term::Es(b, y, _)) => {
            let (phi, y) = if y == x || fv_v.contains(y) {
                let mut avoid: BTreeSet<Name> = fv_v.clone();
                avoid.extend(phi.judgment.subject.all_names());
                avoid.insert(x.to_string());
                let y2 = fresh_name(y, &avoid);
                let (b2, d2) = match &phi.judgment.subject {
                    Term::Es(b, _, d) => (rename_free(b, y, &y2), (**d).clone()),
                    _ => unreachable!(),
                };
                let target = Term::Es(Box::new(b2), y2.clone(), Box::new(d2));
                (alpha_align(phi, &target)?, y2)
            } else {
                let _ = b;
                (phi.clone(), y.clone())
            };
            let pb = &phi.premises[0];
            let pd = &phi.premises[1];
            let pieces = split_many(psi, &[pb.judgment.ctx.get(x), pd.judgment.ctx.get(x)])?;
            mk_es(
                &y,
                subst_rec(pb, x, &pieces[0])?,
                subst_rec(pd, x, &pieces[1])?,
            )
        }
        _ => Err(DeriveError::Malformed(
            "substitution expects a multi-judgment derivation".into(),
        )),
    }
}

/// The removal construction, inverse to substitution: from a derivation of
/// `t{x<-v}` and the decomposition `(t, x, v)` — which must reproduce the
/// subject syntactically — recover a typing of `t` and a typing of `v`.
/// The multiplicative size is exactly additive, the general size at most.
pub fn removal(phi: &Derivation, t: &Term, x: &str, v: &Term) -> Result<(Derivation, Derivation)> {
    if !v.is_value() {
        return Err(DeriveError::NonValueSubject);
    }
    match plain_subst(t, x, v) {
        Some(s) if s == phi.judgment.subject => {}
        _ => {
            return Err(DeriveError::InvalidStep(
                "decomposition does not reproduce the subject".into(),
            ))
        }
    }
    removal_rec(phi, t, x, v)
}

fn removal_rec(phi: &Derivation, t: &Term, x: &str, v: &Term) -> Result<(Derivation, Derivation)> {
    if !t.free_vars().contains(x) {
        // The variable does not occur: keep phi (with t as subject, which
        // is then syntactically equal) and type v with the empty multiset.
        return Ok((phi.clone(), empty_value_typing(v)?));
    }
    match t {
        Term::Var(y) if y == x => {
            let m = match &phi.judgment.ty {
                JudgmentType::Multi(m) => m.clone(),
                _ => return Err(DeriveError::Malformed("multi judgment expected".into())),
            };
            Ok((ax_bundle(x, &m), phi.clone()))
        }
        Term::Var(_) => unreachable!("covered by the occurrence check"),
        Term::Abs(y, b) => {
            if phi.rule != Rule::Many {
                return Err(DeriveError::Malformed("value typings end in many".into()));
            }
            if phi.premises.is_empty() {
                return Ok((mk_many(t.clone(), vec![])?, empty_value_typing(v)?));
            }
            let mut lams = Vec::new();
            let mut theta = empty_value_typing(v)?;
            for lam in &phi.premises {
                let (inner, th) = removal_rec(&lam.premises[0], b, x, v)?;
                lams.push(mk_lam(y, inner)?);
                theta = merge_value(&theta, &th)?;
            }
            Ok((mk_many(t.clone(), lams)?, theta))
        }
        Term::App(f, a) => {
            if phi.rule != Rule::App {
                return Err(DeriveError::Malformed("application typing expected".into()));
            }
            let (pf, tf) = removal_rec(&phi.premises[0], f, x, v)?;
            let (pa, ta) = removal_rec(&phi.premises[1], a, x, v)?;
            Ok((mk_app(pf, pa)?, merge_value(&tf, &ta)?))
        }
        Term::Es(b, y, d) => {
            if phi.rule != Rule::Es {
                return Err(DeriveError::Malformed("es typing expected".into()));
            }
            if y == x {
                // The binder shadows x in the body; only the definition was
                // substituted.
                let (pd, th) = removal_rec(&phi.premises[1], d, x, v)?;
                return Ok((mk_es(y, phi.premises[0].clone(), pd)?, th));
            }
            let (pb, tb) = removal_rec(&phi.premises[0], b, x, v)?;
            let (pd, td) = removal_rec(&phi.premises[1], d, x, v)?;
            Ok((mk_es(y, pb, pd)?, merge_value(&tb, &td)?))
        }
    }
}

// ---------------------------------------------------------------------------
// Linear substitution and removal
// ---------------------------------------------------------------------------

fn rename_binders_on_path(t: &Term, path: &[usize], avoid: &BTreeSet<Name>) -> Term {
    fn go(t: &Term, path: &[usize], avoid: &BTreeSet<Name>, supply: &mut FreshNames) -> Term {
        match path.split_first() {
            None => t.clone(),
            Some((&i, rest)) => match (t, i) {
                (Term::App(f, a), 0) => Term::App(Box::new(go(f, rest, avoid, supply)), a.clone()),
                (Term::App(f, a), 1) => Term::App(f.clone(), Box::new(go(a, rest, avoid, supply))),
                (Term::Es(b, y, d), 0) => {
                    if avoid.contains(y) {
                        let y2 = supply.fresh(y);
                        let b2 = rename_free(b, y, &y2);
                        Term::Es(Box::new(go(&b2, rest, avoid, supply)), y2, d.clone())
                    } else {
                        Term::Es(Box::new(go(b, rest, avoid, supply)), y.clone(), d.clone())
                    }
                }
                (Term::Es(b, y, d), 1) => Term::Es(
                    b.clone(),
                    y.clone(),
                    Box::new(go(d, rest, avoid, supply)),
                ),
                _ => panic!("path mismatch while renaming binders"),
            },
        }
    }
    let mut supply = FreshNames::avoiding(t);
    supply.reserve(avoid.iter().cloned());
    go(t, path, avoid, &mut supply)
}

/// Forward linear substitution: from a typing of `O<x>[x<-t]`, with `x`
/// occurring exactly once and in an open position, build a typing of `O<t>`
/// with the same final judgment.
pub fn linear_subst_forward(phi: &Derivation) -> Result<Derivation> {
    let (body, x, _def) = match &phi.judgment.subject {
        Term::Es(b, x, d) => ((**b).clone(), x.clone(), (**d).clone()),
        _ => return Err(DeriveError::InvalidStep("es-rooted derivation expected".into())),
    };
    if phi.rule != Rule::Es {
        return Err(DeriveError::Malformed("es typing expected".into()));
    }
    let occ = rewriting::open_linear_occurrence(&body, &x)
        .ok_or(DeriveError::MultiplicityViolation)?;
    let p_def = phi.premises[1].clone();
    let fv_def = p_def.judgment.subject.free_vars();
    let body2 = rename_binders_on_path(&body, &occ, &fv_def);
    let p_body = alpha_align(&phi.premises[0], &body2)?;
    lsf(&p_body, &occ, &p_def)
}

fn lsf(p_body: &Derivation, path: &[usize], p_def: &Derivation) -> Result<Derivation> {
    match path.split_first() {
        None => {
            match &p_body.judgment.subject {
                Term::Var(_) => {}
                _ => return Err(DeriveError::InvalidStep("occurrence is not a variable".into())),
            }
            Ok(p_def.clone())
        }
        Some((&i, rest)) => match (p_body.rule, i) {
            (Rule::App, 0) => mk_app(
                lsf(&p_body.premises[0], rest, p_def)?,
                p_body.premises[1].clone(),
            ),
            (Rule::App, 1) => mk_app(
                p_body.premises[0].clone(),
                lsf(&p_body.premises[1], rest, p_def)?,
            ),
            (Rule::Es, 0) => {
                let y = match &p_body.judgment.subject {
                    Term::Es(_, y, _) => y.clone(),
                    _ => unreachable!(),
                };
                mk_es(
                    &y,
                    lsf(&p_body.premises[0], rest, p_def)?,
                    p_body.premises[1].clone(),
                )
            }
            (Rule::Es, 1) => {
                let y = match &p_body.judgment.subject {
                    Term::Es(_, y, _) => y.clone(),
                    _ => unreachable!(),
                };
                mk_es(
                    &y,
                    p_body.premises[0].clone(),
                    lsf(&p_body.premises[1], rest, p_def)?,
                )
            }
            _ => Err(DeriveError::InvalidStep(
                "occurrence path crosses an abstraction".into(),
            )),
        },
    }
}

/// Backward linear removal: from a typing of `O<t>` and the path of the
/// subterm `t` in an open position, abstract it into a typing of
/// `O<x>[x<-t]` for the name `x`, which must not occur free in `O` nor as
/// a binder along the path (the moved subterm itself may mention `x`: it
/// ends up outside the new binder).
pub fn linear_subst_backward(phi: &Derivation, path: &[usize], x: &str) -> Result<Derivation> {
    let subject = &phi.judgment.subject;
    if subject.subterm(path).is_none() {
        return Err(DeriveError::InvalidStep("occurrence path missing".into()));
    }
    let outside = subject.replace_at(path, Term::Var("\u{1}hole".to_string()));
    if outside.free_vars().contains(x) {
        return Err(DeriveError::InvalidStep(
            "abstraction name occurs free around the occurrence".into(),
        ));
    }
    let mut cur = subject;
    for &i in path {
        if let (Term::Es(_, y, _), 0) = (cur, i) {
            if y == x {
                return Err(DeriveError::InvalidStep(
                    "abstraction name is bound on the occurrence path".into(),
                ));
            }
        }
        cur = cur.subterm(&[i]).expect("path checked above");
    }
    lsb(phi, path, x)
}

fn split_es_root(d: Derivation) -> Result<(Derivation, Name, Derivation)> {
    match (&d.rule, &d.judgment.subject) {
        (Rule::Es, Term::Es(_, y, _)) => {
            let y = y.clone();
            let mut ps = d.premises.into_iter();
            let body = ps.next().expect("es has two premises");
            let def = ps.next().expect("es has two premises");
            Ok((body, y, def))
        }
        _ => Err(DeriveError::Malformed("es-rooted derivation expected".into())),
    }
}

fn lsb(node: &Derivation, path: &[usize], x: &str) -> Result<Derivation> {
    match path.split_first() {
        None => {
            let m = match &node.judgment.ty {
                JudgmentType::Multi(m) => m.clone(),
                _ => return Err(DeriveError::Malformed("multi judgment expected".into())),
            };
            mk_es(x, ax_bundle(x, &m), node.clone())
        }
        Some((&i, rest)) => match (node.rule, i) {
            (Rule::App, 0) => {
                let (body, bx, def) = split_es_root(lsb(&node.premises[0], rest, x)?)?;
                mk_es(&bx, mk_app(body, node.premises[1].clone())?, def)
            }
            (Rule::App, 1) => {
                let (body, bx, def) = split_es_root(lsb(&node.premises[1], rest, x)?)?;
                mk_es(&bx, mk_app(node.premises[0].clone(), body)?, def)
            }
            (Rule::Es, 0) => {
                let y = match &node.judgment.subject {
                    Term::Es(_, y, _) => y.clone(),
                    _ => unreachable!(),
                };
                let inner = lsb(&node.premises[0], rest, x)?;
                let (body, bx, def) = split_es_root(inner)?;
                if def.judgment.subject.free_vars().contains(&y) {
                    return Err(DeriveError::InvalidStep(
                        "moved subterm depends on a binder of the context".into(),
                    ));
                }
                mk_es(&bx, mk_es(&y, body, node.premises[1].clone())?, def)
            }
            (Rule::Es, 1) => {
                let y = match &node.judgment.subject {
                    Term::Es(_, y, _) => y.clone(),
                    _ => unreachable!(),
                };
                let (body, bx, def) = split_es_root(lsb(&node.premises[1], rest, x)?)?;
                mk_es(&bx, mk_es(&y, node.premises[0].clone(), body)?, def)
            }
            _ => Err(DeriveError::InvalidStep(
                "occurrence path crosses an abstraction".into(),
            )),
        },
    }
}

// ---------------------------------------------------------------------------
// Subject reduction and expansion
// ---------------------------------------------------------------------------

/// Apply a node-level transformation at `path`, aligning the produced node
/// to the corresponding subterm of `target` and rebuilding the ancestors.
fn transform_at<F>(phi: &Derivation, path: &[usize], target: &Term, f: &F) -> Result<Derivation>
where
    F: Fn(&Derivation) -> Result<Derivation>,
{
    match path.split_first() {
        None => alpha_align(&f(phi)?, target),
        Some((&i, rest)) => {
            let sub_target = |j: usize| -> Result<&Term> {
                target.subterm(&[j]).ok_or_else(|| {
                    DeriveError::InvalidStep("redex path does not exist in the result".into())
                })
            };
            match (phi.rule, &phi.judgment.subject) {
                (Rule::App, Term::App(_, _)) => {
                    let mut ps = phi.premises.clone();
                    ps[i] = transform_at(&phi.premises[i], rest, sub_target(i)?, f)?;
                    let mut it = ps.into_iter();
                    mk_app(it.next().unwrap(), it.next().unwrap())
                }
                (Rule::Es, Term::Es(_, y, _)) => {
                    let y = y.clone();
                    let mut ps = phi.premises.clone();
                    ps[i] = transform_at(&phi.premises[i], rest, sub_target(i)?, f)?;
                    let mut it = ps.into_iter();
                    mk_es(&y, it.next().unwrap(), it.next().unwrap())
                }
                (Rule::Many, Term::Abs(y, _)) if i == 0 => {
                    let y = y.clone();
                    let body_target = sub_target(0)?;
                    let lams = phi
                        .premises
                        .iter()
                        .map(|lam| {
                            let inner = transform_at(&lam.premises[0], rest, body_target, f)?;
                            mk_lam(&y, inner)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    if lams.is_empty() {
                        mk_many(target.clone(), vec![])
                    } else {
                        mk_many(target.clone(), lams)
                    }
                }
                _ => Err(DeriveError::InvalidStep(
                    "redex path does not match the derivation shape".into(),
                )),
            }
        }
    }
}

/// Peel the chain of es nodes of a derivation, outermost first.
fn peel_es_chain(d: &Derivation) -> (Vec<(Name, Derivation)>, Derivation) {
    let mut chain = Vec::new();
    let mut cur = d.clone();
    while cur.rule == Rule::Es {
        let (body, y, def) = split_es_root(cur).expect("es node");
        chain.push((y, def));
        cur = body;
    }
    (chain, cur)
}

fn wrap_es_chain(core: Derivation, chain: &[(Name, Derivation)]) -> Result<Derivation> {
    let mut acc = core;
    for (y, def) in chain.iter().rev() {
        acc = mk_es(y, acc, def.clone())?;
    }
    Ok(acc)
}

fn local_supply(t: &Term, extra: &Term) -> FreshNames {
    let mut supply = FreshNames::avoiding(t);
    supply.reserve(extra.all_names());
    supply
}

fn reduce_mult_node(node: &Derivation) -> Result<Derivation> {
    let (p_fun, p_arg) = match (&node.rule, node.premises.as_slice()) {
        (Rule::App, [f, a]) => (f.clone(), a.clone()),
        _ => return Err(DeriveError::InvalidStep("multiplicative redex expects an application".into())),
    };
    // Rename the substitution-context binders away from the argument.
    let fv_arg = p_arg.judgment.subject.free_vars();
    let p_fun = {
        let subject = &p_fun.judgment.subject;
        if rewriting::spine_binders_collide(subject, &fv_arg) {
            let mut supply = local_supply(subject, &p_arg.judgment.subject);
            let renamed = rewriting::rename_spine(subject, &mut supply);
            alpha_align(&p_fun, &renamed)?
        } else {
            p_fun
        }
    };
    let (chain, core) = peel_es_chain(&p_fun);
    let lam = match (core.rule, core.premises.as_slice()) {
        (Rule::Many, [lam]) if lam.rule == Rule::Lam => lam.clone(),
        _ => {
            return Err(DeriveError::InvalidStep(
                "function must be an abstraction typed by a singleton bundle".into(),
            ))
        }
    };
    let binder = match &lam.judgment.subject {
        Term::Abs(x, _) => x.clone(),
        _ => unreachable!(),
    };
    let inner = mk_es(&binder, lam.premises[0].clone(), p_arg)?;
    wrap_es_chain(inner, &chain)
}

fn reduce_exp_node(node: &Derivation) -> Result<Derivation> {
    let (p_body, x, p_def) = match (&node.rule, &node.judgment.subject) {
        (Rule::Es, Term::Es(_, x, _)) => (
            node.premises[0].clone(),
            x.clone(),
            node.premises[1].clone(),
        ),
        _ => return Err(DeriveError::InvalidStep("exponential redex expects an es".into())),
    };
    let mut moved = p_body.judgment.subject.free_vars();
    moved.remove(&x);
    let p_def = {
        let subject = &p_def.judgment.subject;
        if rewriting::spine_binders_collide(subject, &moved) {
            let mut supply = local_supply(subject, &p_body.judgment.subject);
            let renamed = rewriting::rename_spine(subject, &mut supply);
            alpha_align(&p_def, &renamed)?
        } else {
            p_def
        }
    };
    let (chain, theta) = peel_es_chain(&p_def);
    if theta.rule != Rule::Many {
        return Err(DeriveError::InvalidStep(
            "definition core must be a value typing".into(),
        ));
    }
    let inner = subst_derivation(&p_body, &x, &theta)?;
    wrap_es_chain(inner, &chain)
}

fn reduce_glue_node(node: &Derivation) -> Result<Derivation> {
    linear_subst_forward(node)
}

/// Subject reduction: transform a typing of `t` along the recorded step to
/// a typing of the result with the same final context and type. A
/// multiplicative step removes one `lam` and one `@` (the multiplicative
/// size drops by exactly 2); an exponential step preserves it; glue and
/// structural steps preserve the judgment.
pub fn subject_reduce(
    phi: &Derivation,
    path: &[usize],
    kind: StepKind,
    after: &Term,
) -> Result<Derivation> {
    if kind == StepKind::BetaV {
        return Err(DeriveError::InvalidStep(
            "beta-value steps are decomposed, not typed directly".into(),
        ));
    }
    let f = |node: &Derivation| match kind {
        StepKind::Mult => reduce_mult_node(node),
        StepKind::ExpAbs | StepKind::ExpVar => reduce_exp_node(node),
        StepKind::Glue => reduce_glue_node(node),
        StepKind::BetaV => unreachable!(),
    };
    transform_at(phi, path, after, &f)
}

/// Subject transformation along one structural-equivalence axiom: find the
/// single-axiom rewrite of the subject that reaches `target` (up to alpha)
/// and reshuffle the corresponding es/@ nodes. The final judgment and both
/// sizes are unchanged. Since the equivalence is symmetric this serves as
/// both the reduction and the expansion direction.
pub fn subject_equiv(phi: &Derivation, target: &Term) -> Result<Derivation> {
    for (axiom, l2r, path, result) in equiv_rewrites(&phi.judgment.subject) {
        if alpha_eq(&result, target) {
            let f = move |node: &Derivation| apply_equiv_axiom(node, axiom, l2r);
            let out = transform_at(phi, &path, &result, &f)?;
            return alpha_align(&out, target);
        }
    }
    Err(DeriveError::InvalidStep(
        "terms are not one structural axiom apart".into(),
    ))
}

fn apply_equiv_axiom(
    node: &Derivation,
    axiom: rewriting::EquivAxiom,
    l2r: bool,
) -> Result<Derivation> {
    use rewriting::EquivAxiom::*;
    match (axiom, l2r) {
        (AppLeft, true) => {
            // (b[x<-u]) s  ->  (b s)[x<-u]
            let (p_es, p_arg) = (&node.premises[0], &node.premises[1]);
            let (body, x, def) = split_es_root(p_es.clone())?;
            mk_es(&x, mk_app(body, p_arg.clone())?, def)
        }
        (AppLeft, false) => {
            // (b s)[x<-u]  ->  (b[x<-u]) s
            let (p_app, x, def) = split_es_root(node.clone())?;
            let (p_fun, p_arg) = (p_app.premises[0].clone(), p_app.premises[1].clone());
            mk_app(mk_es(&x, p_fun, def)?, p_arg)
        }
        (AppRight, true) => {
            // s (b[x<-u])  ->  (s b)[x<-u]
            let (p_fun, p_es) = (&node.premises[0], &node.premises[1]);
            let (body, x, def) = split_es_root(p_es.clone())?;
            mk_es(&x, mk_app(p_fun.clone(), body)?, def)
        }
        (AppRight, false) => {
            // (s b)[x<-u]  ->  s (b[x<-u])
            let (p_app, x, def) = split_es_root(node.clone())?;
            let (p_fun, p_arg) = (p_app.premises[0].clone(), p_app.premises[1].clone());
            mk_app(p_fun, mk_es(&x, p_arg, def)?)
        }
        (Nest, true) => {
            // b[x<-u[y<-s]]  ->  b[x<-u][y<-s]
            let (p_body, x, p_def) = split_es_root(node.clone())?;
            let (p_u, y, p_s) = split_es_root(p_def)?;
            mk_es(&y, mk_es(&x, p_body, p_u)?, p_s)
        }
        (Nest, false) => {
            // b[x<-u][y<-s]  ->  b[x<-u[y<-s]]   (outer binder is y here)
            let (p_inner, y, p_s) = split_es_root(node.clone())?;
            let (p_body, x, p_u) = split_es_root(p_inner)?;
            mk_es(&x, p_body, mk_es(&y, p_u, p_s)?)
        }
        (Commute, _) => {
            // b[y<-q][x<-u]  ->  b[x<-u][y<-q]
            let (p_inner, x, p_u) = split_es_root(node.clone())?;
            let (p_body, y, p_q) = split_es_root(p_inner)?;
            mk_es(&y, mk_es(&x, p_body, p_u)?, p_q)
        }
    }
}

fn expand_mult_node(node: &Derivation, before_sub: &Term) -> Result<Derivation> {
    // before: L<\x.u> s       after (typed by node): L<u[x<-s]>
    let (fun, _arg) = match before_sub {
        Term::App(f, a) => ((**f).clone(), (**a).clone()),
        _ => return Err(DeriveError::InvalidStep("multiplicative source must be an application".into())),
    };
    let mut n = 0;
    {
        let mut cur = &fun;
        while let Term::Es(b, _, _) = cur {
            n += 1;
            cur = b;
        }
    }
    // Peel exactly the n context links of L, then the created es.
    let mut acc = node.clone();
    let mut outer_chain = Vec::new();
    for _ in 0..n {
        let (body, y, def) = split_es_root(acc)
            .map_err(|_| DeriveError::InvalidStep("result lacks the substitution context".into()))?;
        outer_chain.push((y, def));
        acc = body;
    }
    let (p_inner_body, x, p_inner_def) = split_es_root(acc)?;
    // The argument typing must not depend on the context binders.
    for (y, _) in &outer_chain {
        if !p_inner_def.judgment.ctx.get(y).is_empty() {
            return Err(DeriveError::InvalidStep(
                "argument typing depends on a context binder".into(),
            ));
        }
    }
    let lam = mk_lam(&x, p_inner_body)?;
    let many = mk_many(lam.judgment.subject.clone(), vec![lam])?;
    let fun_typing = wrap_es_chain(many, &outer_chain)?;
    mk_app(fun_typing, p_inner_def)
}

fn expand_exp_node(node: &Derivation, before_sub: &Term) -> Result<Derivation> {
    // before: u[x<-L<v>]      after (typed by node): L<u{x<-v}>
    let (u, x, def) = match before_sub {
        Term::Es(b, x, d) => ((**b).clone(), x.clone(), (**d).clone()),
        _ => return Err(DeriveError::InvalidStep("exponential source must be an es".into())),
    };
    // Recompute the firing with local renaming so the decomposition of the
    // result is syntactic.
    let mut moved = u.free_vars();
    moved.remove(&x);
    let def_r = if rewriting::spine_binders_collide(&def, &moved) {
        let mut supply = local_supply(&def, &u);
        rewriting::rename_spine(&def, &mut supply)
    } else {
        def.clone()
    };
    let (chain_terms, v) = rewriting::spine_parts(&def_r);
    if !v.is_value() {
        return Err(DeriveError::InvalidStep("definition core is not a value".into()));
    }
    let mut avoid = v.free_vars();
    avoid.insert(x.clone());
    let u_prepared = freshen_binders(&u, &avoid);
    let inner_term = plain_subst(&u_prepared, &x, &v)
        .ok_or_else(|| DeriveError::InvalidStep("capture in recomputed substitution".into()))?;
    let fired = rewriting::rebuild_spine(&chain_terms, inner_term.clone());
    let node = alpha_align(node, &fired)?;
    let mut acc = node;
    let mut chain = Vec::new();
    for _ in 0..chain_terms.len() {
        let (body, y, d) = split_es_root(acc)?;
        chain.push((y, d));
        acc = body;
    }
    let (psi, theta) = removal(&acc, &u_prepared, &x, &v)?;
    let def_typing = wrap_es_chain(theta, &chain)?;
    mk_es(&x, psi, def_typing)
}

fn expand_glue_node(node: &Derivation, before_sub: &Term) -> Result<Derivation> {
    let (body, x, def) = match before_sub {
        Term::Es(b, x, d) => ((**b).clone(), x.clone(), (**d).clone()),
        _ => return Err(DeriveError::InvalidStep("glue source must be an es".into())),
    };
    let occ = rewriting::open_linear_occurrence(&body, &x)
        .ok_or(DeriveError::MultiplicityViolation)?;
    // Recompute the fired subterm with local renaming and align to it.
    let fv_def = def.free_vars();
    let body_r = rename_binders_on_path(&body, &occ, &fv_def);
    let fired = body_r.replace_at(&occ, def.clone());
    let node = alpha_align(node, &fired)?;
    linear_subst_backward(&node, &occ, &x)
}

/// Subject expansion: pull a typing of the step result back to a typing of
/// the source with the same final context and type.
pub fn subject_expand(
    phi_after: &Derivation,
    before: &Term,
    path: &[usize],
    kind: StepKind,
) -> Result<Derivation> {
    if kind == StepKind::BetaV {
        return Err(DeriveError::InvalidStep(
            "beta-value steps are decomposed, not typed directly".into(),
        ));
    }
    let sub = before
        .subterm(path)
        .ok_or_else(|| DeriveError::InvalidStep("redex path missing in source".into()))?
        .clone();
    let f = |node: &Derivation| match kind {
        StepKind::Mult => expand_mult_node(node, &sub),
        StepKind::ExpAbs | StepKind::ExpVar => expand_exp_node(node, &sub),
        StepKind::Glue => expand_glue_node(node, &sub),
        StepKind::BetaV => unreachable!(),
    };
    transform_at(phi_after, path, before, &f)
}

// ---------------------------------------------------------------------------
// Typability of normal forms
// ---------------------------------------------------------------------------

/// Type an inert term with an arbitrary multi type. Arguments of
/// applications are typed with the empty multiset behind a `0 -o M` arrow.
/// Whenever `m` is inert the final context is inert.
pub fn type_inert_any(t: &Term, m: &MultiType) -> Result<Derivation> {
    if !classify(t).inert {
        return Err(DeriveError::NotInert);
    }
    match t {
        Term::Var(x) => Ok(ax_bundle(x, m)),
        Term::App(f, a) => {
            let arrow = MultiType::singleton(LinearType::Arrow(MultiType::empty(), m.clone()));
            let fun = type_inert_any(f, &arrow)?;
            let arg = type_fireball_tight(a)?;
            mk_app(fun, arg)
        }
        Term::Es(b, x, d) => {
            let body = type_inert_any(b, m)?;
            let n = body.judgment.ctx.get(x);
            let def = type_inert_any(d, &n)?;
            mk_es(x, body, def)
        }
        Term::Abs(_, _) => Err(DeriveError::NotInert),
    }
}

/// Type a fireball tightly: the final type is the empty multiset and the
/// final context is inert, so the multiplicative size equals the open size
/// of the fireball.
pub fn type_fireball_tight(t: &Term) -> Result<Derivation> {
    let c = classify(t);
    if !c.fireball {
        return Err(DeriveError::NotFireball);
    }
    if c.inert {
        return type_inert_any(t, &MultiType::empty());
    }
    match t {
        Term::Abs(_, _) => mk_many(t.clone(), vec![]),
        Term::Es(b, x, d) => {
            let body = type_fireball_tight(b)?;
            let n = body.judgment.ctx.get(x);
            let def = type_inert_any(d, &n)?;
            mk_es(x, body, def)
        }
        _ => Err(DeriveError::NotFireball),
    }
}

/// Type a solved fireball with an inert final context and a precisely
/// solvable final type, so the multiplicative size equals its solvable
/// size. Inert base cases use the singleton ground type.
pub fn type_solved_fireball(t: &Term) -> Result<Derivation> {
    let c = classify(t);
    if !c.solved_fireball {
        return Err(DeriveError::NotSolvedFireball);
    }
    if c.inert {
        return type_inert_any(t, &MultiType::ground(1));
    }
    match t {
        Term::Abs(x, b) => {
            let inner = type_solved_fireball(b)?;
            let lam = mk_lam(x, inner)?;
            mk_many(t.clone(), vec![lam])
        }
        Term::Es(b, x, d) => {
            let body = type_solved_fireball(b)?;
            let n = body.judgment.ctx.get(x);
            let def = type_inert_any(d, &n)?;
            mk_es(x, body, def)
        }
        _ => Err(DeriveError::NotSolvedFireball),
    }
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InferMode {
    Open,
    Solving,
}

#[derive(Clone, Debug)]
pub struct Inference {
    pub derivation: Derivation,
    pub trace: Trace,
}

/// Reduce under the chosen mode (substituting variables); when a normal
/// form is reached, type it (tightly for open, precisely solvably for
/// solving) and pull the derivation back along the trace by subject
/// expansion. Returns nothing when the reduction cycles or runs out of
/// fuel: absence of a derivation is evidence of untypability (on a cycle)
/// or unknown (on fuel exhaustion).
pub fn infer(t: &Term, mode: InferMode, fuel: usize) -> Option<Inference> {
    let strat = match mode {
        InferMode::Open => Strategy::open(),
        InferMode::Solving => Strategy::solving(),
    };
    let trace = reduce(t, strat, fuel, true);
    if trace.status != crate::rewriting::TraceStatus::NormalForm {
        return None;
    }
    let nf = trace.final_term().clone();
    let mut d = match mode {
        InferMode::Open => type_fireball_tight(&nf),
        InferMode::Solving => type_solved_fireball(&nf),
    }
    .expect("normal forms of the respective reductions are typable");
    let states: Vec<Term> = trace.states().into_iter().cloned().collect();
    for (i, step) in trace.steps.iter().enumerate().rev() {
        d = subject_expand(&d, &states[i], &step.path, step.kind)
            .expect("subject expansion along a recorded step");
    }
    Some(Inference {
        derivation: d,
        trace,
    })
}
