//! Root rules at a distance, their open/solving/full contextual closures,
//! plain beta-value reduction, the glue rule, structural equivalence, the
//! sigma embeddings, and fueled reduction with per-kind step accounting.
//!
//! The two root rules are matched through a substitution context `L`
//! (a list of ES around the relevant value or abstraction):
//!
//! ```text
//! L<\x.t> u   |-m  L<t[x<-u]>
//! t[x<-L<v>]  |-e  L<t{x<-v}>     (v a value; split into e_lambda / e_var)
//! ```
//!
//! Before firing, the binders of the matched `L` prefix are renamed so that
//! no free variable of the part moving under `L` is captured.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde_json::{json, Value};
use thiserror::Error;

use crate::syntax::{
    alpha_canon, alpha_eq, meta_subst, rename_free, FreshNames, Name, Path, Term,
};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Closure {
    Open,
    Solving,
    Full,
}

/// A reduction strategy: a contextual closure, whether the exponential rule
/// may substitute variables, and whether the glue rule participates. The
/// glue rule is meaningful with the full and open closures (its own redex
/// pattern is built from an open context).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Strategy {
    pub closure: Closure,
    pub substitute_variables: bool,
    pub glue: bool,
}

impl Strategy {
    pub const fn open() -> Self {
        Strategy {
            closure: Closure::Open,
            substitute_variables: true,
            glue: false,
        }
    }
    pub const fn open_lambda() -> Self {
        Strategy {
            closure: Closure::Open,
            substitute_variables: false,
            glue: false,
        }
    }
    pub const fn solving() -> Self {
        Strategy {
            closure: Closure::Solving,
            substitute_variables: true,
            glue: false,
        }
    }
    pub const fn solving_lambda() -> Self {
        Strategy {
            closure: Closure::Solving,
            substitute_variables: false,
            glue: false,
        }
    }
    pub const fn full() -> Self {
        Strategy {
            closure: Closure::Full,
            substitute_variables: true,
            glue: false,
        }
    }
    pub const fn full_lambda() -> Self {
        Strategy {
            closure: Closure::Full,
            substitute_variables: false,
            glue: false,
        }
    }
    pub const fn with_glue(mut self) -> Self {
        self.glue = true;
        self
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum StepKind {
    /// Beta at a distance: creates an ES without substituting.
    Mult,
    /// Fires an ES whose definition is an abstraction up to `L`.
    ExpAbs,
    /// Fires an ES whose definition is a variable up to `L`.
    ExpVar,
    /// Substitutes an application for a linear open occurrence.
    Glue,
    /// Plain beta-value on ES-free terms.
    BetaV,
}

impl StepKind {
    pub fn json_name(self) -> &'static str {
        match self {
            StepKind::Mult => "m",
            StepKind::ExpAbs => "e_lambda",
            StepKind::ExpVar => "e_var",
            StepKind::Glue => "glue",
            StepKind::BetaV => "beta_v",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct StepCounts {
    pub mult: usize,
    pub exp_abs: usize,
    pub exp_var: usize,
    pub glue: usize,
    pub beta_v: usize,
}

impl StepCounts {
    pub fn bump(&mut self, kind: StepKind) {
        match kind {
            StepKind::Mult => self.mult += 1,
            StepKind::ExpAbs => self.exp_abs += 1,
            StepKind::ExpVar => self.exp_var += 1,
            StepKind::Glue => self.glue += 1,
            StepKind::BetaV => self.beta_v += 1,
        }
    }

    /// Exponential steps of either flavor.
    pub fn exp(&self) -> usize {
        self.exp_abs + self.exp_var
    }

    pub fn total(&self) -> usize {
        self.mult + self.exp_abs + self.exp_var + self.glue + self.beta_v
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m": self.mult,
            "e_lambda": self.exp_abs,
            "e_var": self.exp_var,
            "glue": self.glue,
            "beta_v": self.beta_v,
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceStep {
    pub path: Path,
    pub kind: StepKind,
    pub term: Term,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TraceStatus {
    NormalForm,
    /// The alpha-canonical form of the current term was seen before, at the
    /// recorded state index (0 is the start term).
    Cycle(usize),
    FuelExhausted,
}

/// A recorded reduction sequence with per-kind step counts.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    pub start: Term,
    pub steps: Vec<TraceStep>,
    pub status: TraceStatus,
    pub counts: StepCounts,
}

impl Trace {
    pub fn final_term(&self) -> &Term {
        self.steps.last().map(|s| &s.term).unwrap_or(&self.start)
    }

    /// The sequence of states, starting with the start term.
    pub fn states(&self) -> Vec<&Term> {
        let mut v = vec![&self.start];
        v.extend(self.steps.iter().map(|s| &s.term));
        v
    }

    pub fn to_json(&self) -> Value {
        json!({
            "start": self.start.to_string(),
            "steps": self.steps.iter().map(|s| json!({
                "path": s.path,
                "kind": s.kind.json_name(),
                "term": s.term.to_string(),
            })).collect::<Vec<_>>(),
            "status": match self.status {
                TraceStatus::NormalForm => json!("normal_form"),
                TraceStatus::Cycle(i) => json!({"cycle": i}),
                TraceStatus::FuelExhausted => json!("fuel_exhausted"),
            },
            "counts": self.counts.to_json(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("input contains an explicit substitution")]
    EsInInput,
    #[error("beta-value reduction is defined for the open and full closures only")]
    UnsupportedClosure,
    #[error("the given pair is not a single step of the expected shape")]
    InvalidStep,
    #[error("no sigma redex at the root")]
    NoSigmaRedex,
}

// ---------------------------------------------------------------------------
// Redex search
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    OpenOnly,
    SolvingSpine,
    Everywhere,
}

#[derive(Clone, Copy, Default)]
struct RuleSet {
    mult: bool,
    exp_abs: bool,
    exp_var: bool,
    glue: bool,
    beta_v: bool,
}

impl RuleSet {
    fn of(strat: Strategy) -> Self {
        RuleSet {
            mult: true,
            exp_abs: true,
            exp_var: strat.substitute_variables,
            glue: strat.glue,
            beta_v: false,
        }
    }
}

fn root_mode(closure: Closure) -> Mode {
    match closure {
        Closure::Open => Mode::OpenOnly,
        Closure::Solving => Mode::SolvingSpine,
        Closure::Full => Mode::Everywhere,
    }
}

/// Walk the body spine of a chain of ES nodes down to its core.
fn spine_core(t: &Term) -> &Term {
    let mut cur = t;
    while let Term::Es(b, _, _) = cur {
        cur = b;
    }
    cur
}

/// The path of the unique free occurrence of `x` in `t`, provided that
/// occurrence is not under an abstraction (so the surrounding context is
/// open). `None` if `x` occurs zero or several times free, or under a
/// lambda.
pub fn open_linear_occurrence(t: &Term, x: &str) -> Option<Path> {
    fn go(t: &Term, x: &str, path: &mut Path, under_abs: bool, hits: &mut Vec<(Path, bool)>) {
        match t {
            Term::Var(y) => {
                if y == x {
                    hits.push((path.clone(), under_abs));
                }
            }
            Term::Abs(y, b) => {
                if y != x {
                    path.push(0);
                    go(b, x, path, true, hits);
                    path.pop();
                }
            }
            Term::App(f, a) => {
                path.push(0);
                go(f, x, path, under_abs, hits);
                path.pop();
                path.push(1);
                go(a, x, path, under_abs, hits);
                path.pop();
            }
            Term::Es(b, y, d) => {
                if y != x {
                    path.push(0);
                    go(b, x, path, under_abs, hits);
                    path.pop();
                }
                path.push(1);
                go(d, x, path, under_abs, hits);
                path.pop();
            }
        }
    }
    let mut hits = Vec::new();
    go(t, x, &mut Vec::new(), false, &mut hits);
    match hits.as_slice() {
        [(path, false)] => Some(path.clone()),
        _ => None,
    }
}

fn root_candidate(t: &Term, rules: RuleSet) -> Option<StepKind> {
    match t {
        Term::App(f, a) => {
            if rules.beta_v {
                if let Term::Abs(_, _) = **f {
                    if a.is_value() {
                        return Some(StepKind::BetaV);
                    }
                }
            }
            if rules.mult {
                if let Term::Abs(_, _) = spine_core(f) {
                    return Some(StepKind::Mult);
                }
            }
            None
        }
        Term::Es(b, x, d) => {
            match spine_core(d) {
                Term::Abs(_, _) if rules.exp_abs => return Some(StepKind::ExpAbs),
                Term::Var(_) if rules.exp_var => return Some(StepKind::ExpVar),
                _ => {}
            }
            if rules.glue && matches!(**d, Term::App(_, _)) && open_linear_occurrence(b, x).is_some()
            {
                return Some(StepKind::Glue);
            }
            None
        }
        _ => None,
    }
}

fn collect(
    t: &Term,
    rules: RuleSet,
    mode: Mode,
    path: &mut Path,
    out: &mut Vec<(Path, StepKind)>,
    first_only: bool,
) -> bool {
    if let Some(kind) = root_candidate(t, rules) {
        out.push((path.clone(), kind));
        if first_only {
            return true;
        }
    }
    match t {
        Term::Var(_) => false,
        Term::Abs(_, b) => {
            let inner = match mode {
                Mode::OpenOnly => return false,
                Mode::SolvingSpine => Mode::SolvingSpine,
                Mode::Everywhere => Mode::Everywhere,
            };
            path.push(0);
            let stop = collect(b, rules, inner, path, out, first_only);
            path.pop();
            stop
        }
        Term::App(f, a) => {
            let (fun_mode, arg_mode) = match mode {
                Mode::OpenOnly => (Mode::OpenOnly, Mode::OpenOnly),
                Mode::SolvingSpine => (Mode::SolvingSpine, Mode::OpenOnly),
                Mode::Everywhere => (Mode::Everywhere, Mode::Everywhere),
            };
            path.push(0);
            if collect(f, rules, fun_mode, path, out, first_only) {
                path.pop();
                return true;
            }
            path.pop();
            path.push(1);
            let stop = collect(a, rules, arg_mode, path, out, first_only);
            path.pop();
            stop
        }
        Term::Es(b, _, d) => {
            let (body_mode, def_mode) = match mode {
                Mode::OpenOnly => (Mode::OpenOnly, Mode::OpenOnly),
                Mode::SolvingSpine => (Mode::SolvingSpine, Mode::OpenOnly),
                Mode::Everywhere => (Mode::Everywhere, Mode::Everywhere),
            };
            path.push(0);
            if collect(b, rules, body_mode, path, out, first_only) {
                path.pop();
                return true;
            }
            path.pop();
            path.push(1);
            let stop = collect(d, rules, def_mode, path, out, first_only);
            path.pop();
            stop
        }
    }
}

fn first_redex_with(t: &Term, rules: RuleSet, mode: Mode) -> Option<(Path, StepKind)> {
    let mut out = Vec::new();
    collect(t, rules, mode, &mut Vec::new(), &mut out, true);
    out.into_iter().next()
}

fn first_redex(t: &Term, strat: Strategy) -> Option<(Path, StepKind)> {
    first_redex_with(t, RuleSet::of(strat), root_mode(strat.closure))
}

/// Every single step admitted by the strategy, with its redex path and kind.
pub fn all_steps(t: &Term, strat: Strategy) -> Vec<(Path, StepKind, Term)> {
    let mut out = Vec::new();
    collect(
        t,
        RuleSet::of(strat),
        root_mode(strat.closure),
        &mut Vec::new(),
        &mut out,
        false,
    );
    out.into_iter()
        .map(|(path, kind)| {
            let mut supply = FreshNames::avoiding(t);
            let term = fire_at(t, &path, kind, &mut supply);
            (path, kind, term)
        })
        .collect()
}

/// Is `t` normal for the strategy?
pub fn is_normal(t: &Term, strat: Strategy) -> bool {
    first_redex(t, strat).is_none()
}

// ---------------------------------------------------------------------------
// Firing
// ---------------------------------------------------------------------------

/// Decompose a chain of ES nodes into (binders with definitions, core),
/// outermost binding first.
pub(crate) fn spine_parts(t: &Term) -> (Vec<(Name, Term)>, Term) {
    let mut chain = Vec::new();
    let mut cur = t;
    while let Term::Es(b, x, d) = cur {
        chain.push((x.clone(), (**d).clone()));
        cur = b;
    }
    (chain, cur.clone())
}

pub(crate) fn rebuild_spine(chain: &[(Name, Term)], core: Term) -> Term {
    let mut acc = core;
    for (x, d) in chain.iter().rev() {
        acc = Term::Es(Box::new(acc), x.clone(), Box::new(d.clone()));
    }
    acc
}

/// Rename every binder of the ES spine of `t` to a fresh name.
pub(crate) fn rename_spine(t: &Term, supply: &mut FreshNames) -> Term {
    match t {
        Term::Es(b, x, d) => {
            let x2 = supply.fresh(x);
            let b2 = rename_free(b, x, &x2);
            Term::Es(Box::new(rename_spine(&b2, supply)), x2, (*d).clone())
        }
        _ => t.clone(),
    }
}

pub(crate) fn spine_binders_collide(t: &Term, avoid: &BTreeSet<Name>) -> bool {
    let mut cur = t;
    while let Term::Es(b, x, _) = cur {
        if avoid.contains(x) {
            return true;
        }
        cur = b;
    }
    false
}

/// Fire the redex of the given kind at `path`. The caller guarantees a redex
/// of that kind is present there; the fresh-name supply provides on-the-fly
/// alpha-renaming.
pub fn fire_at(t: &Term, path: &[usize], kind: StepKind, supply: &mut FreshNames) -> Term {
    let sub = t.subterm(path).expect("redex path exists");
    let fired = fire_root(sub, kind, supply);
    t.replace_at(path, fired)
}

fn fire_root(t: &Term, kind: StepKind, supply: &mut FreshNames) -> Term {
    match kind {
        StepKind::Mult => {
            let (f, a) = match t {
                Term::App(f, a) => (&**f, &**a),
                _ => panic!("multiplicative redex expected"),
            };
            let fv_arg = a.free_vars();
            let f = if spine_binders_collide(f, &fv_arg) {
                rename_spine(f, supply)
            } else {
                f.clone()
            };
            let (chain, core) = spine_parts(&f);
            let (x, body) = match core {
                Term::Abs(x, b) => (x, *b),
                _ => panic!("abstraction expected under the substitution context"),
            };
            rebuild_spine(&chain, Term::Es(Box::new(body), x, Box::new(a.clone())))
        }
        StepKind::ExpAbs | StepKind::ExpVar => {
            let (b, x, d) = match t {
                Term::Es(b, x, d) => (&**b, x, &**d),
                _ => panic!("exponential redex expected"),
            };
            let mut moved = b.free_vars();
            moved.remove(x);
            let d = if spine_binders_collide(d, &moved) {
                rename_spine(d, supply)
            } else {
                d.clone()
            };
            let (chain, v) = spine_parts(&d);
            debug_assert!(v.is_value());
            rebuild_spine(&chain, meta_subst(b, x, &v))
        }
        StepKind::Glue => {
            let (b, x, d) = match t {
                Term::Es(b, x, d) => (&**b, x, &**d),
                _ => panic!("glue redex expected"),
            };
            let occ = open_linear_occurrence(b, x).expect("glue occurrence");
            let fv_def = d.free_vars();
            // Rename any binder on the path that would capture the moved
            // definition. Only ES binders can occur there (the occurrence is
            // not under an abstraction).
            fn replace(
                t: &Term,
                path: &[usize],
                def: &Term,
                fv_def: &BTreeSet<Name>,
                supply: &mut FreshNames,
            ) -> Term {
                match path.split_first() {
                    None => def.clone(),
                    Some((&i, rest)) => match (t, i) {
                        (Term::App(f, a), 0) => Term::App(
                            Box::new(replace(f, rest, def, fv_def, supply)),
                            a.clone(),
                        ),
                        (Term::App(f, a), 1) => Term::App(
                            f.clone(),
                            Box::new(replace(a, rest, def, fv_def, supply)),
                        ),
                        (Term::Es(b, y, d2), 0) => {
                            if fv_def.contains(y) {
                                let y2 = supply.fresh(y);
                                let b2 = rename_free(b, y, &y2);
                                Term::Es(
                                    Box::new(replace(&b2, rest, def, fv_def, supply)),
                                    y2,
                                    d2.clone(),
                                )
                            } else {
                                Term::Es(
                                    Box::new(replace(b, rest, def, fv_def, supply)),
                                    y.clone(),
                                    d2.clone(),
                                )
                            }
                        }
                        (Term::Es(b, y, d2), 1) => Term::Es(
                            b.clone(),
                            y.clone(),
                            Box::new(replace(d2, rest, def, fv_def, supply)),
                        ),
                        _ => panic!("glue occurrence path mismatch"),
                    },
                }
            }
            replace(b, &occ, d, &fv_def, supply)
        }
        StepKind::BetaV => {
            let (f, a) = match t {
                Term::App(f, a) => (&**f, &**a),
                _ => panic!("beta-value redex expected"),
            };
            let (x, body) = match f {
                Term::Abs(x, b) => (x, &**b),
                _ => panic!("abstraction expected"),
            };
            meta_subst(body, x, a)
        }
    }
}

/// Fire the leftmost-outermost redex admitted by the strategy, if any.
pub fn step(t: &Term, strat: Strategy) -> Option<(Term, StepKind)> {
    let (path, kind) = first_redex(t, strat)?;
    let mut supply = FreshNames::avoiding(t);
    Some((fire_at(t, &path, kind, &mut supply), kind))
}

// ---------------------------------------------------------------------------
// Fueled reduction
// ---------------------------------------------------------------------------

fn run(
    start: &Term,
    rules: RuleSet,
    mode: Mode,
    fuel: usize,
    detect_cycles: bool,
) -> Trace {
    let mut supply = FreshNames::avoiding(start);
    let mut seen: HashMap<crate::syntax::CanonicalTerm, usize> = HashMap::new();
    if detect_cycles {
        seen.insert(alpha_canon(start), 0);
    }
    let mut steps: Vec<TraceStep> = Vec::new();
    let mut counts = StepCounts::default();
    let mut cur = start.clone();
    for i in 0..fuel {
        let Some((path, kind)) = first_redex_with(&cur, rules, mode) else {
            return Trace {
                start: start.clone(),
                steps,
                status: TraceStatus::NormalForm,
                counts,
            };
        };
        cur = fire_at(&cur, &path, kind, &mut supply);
        counts.bump(kind);
        steps.push(TraceStep {
            path,
            kind,
            term: cur.clone(),
        });
        if detect_cycles {
            let canon = alpha_canon(&cur);
            if let Some(&first) = seen.get(&canon) {
                return Trace {
                    start: start.clone(),
                    steps,
                    status: TraceStatus::Cycle(first),
                    counts,
                };
            }
            seen.insert(canon, i + 1);
        }
    }
    Trace {
        start: start.clone(),
        steps,
        status: TraceStatus::FuelExhausted,
        counts,
    }
}

/// Iterate [`step`] with the given fuel. With `detect_cycles`, the status is
/// `Cycle` as soon as the alpha-canonical form of the current term repeats.
pub fn reduce(t: &Term, strat: Strategy, fuel: usize, detect_cycles: bool) -> Trace {
    run(
        t,
        RuleSet::of(strat),
        root_mode(strat.closure),
        fuel,
        detect_cycles,
    )
}

/// Plain beta-value reduction of an ES-free term, under the open or full
/// closure. Cycles are always detected.
pub fn betav_reduce(t: &Term, closure: Closure, fuel: usize) -> Result<Trace, RewriteError> {
    if !t.is_es_free() {
        return Err(RewriteError::EsInInput);
    }
    let mode = match closure {
        Closure::Open => Mode::OpenOnly,
        Closure::Full => Mode::Everywhere,
        Closure::Solving => return Err(RewriteError::UnsupportedClosure),
    };
    let rules = RuleSet {
        beta_v: true,
        ..RuleSet::default()
    };
    Ok(run(t, rules, mode, fuel, true))
}

/// All single beta-value steps of an ES-free term under the open closure.
pub fn all_betav_steps(t: &Term, closure: Closure) -> Vec<(Path, Term)> {
    let mode = match closure {
        Closure::Open => Mode::OpenOnly,
        Closure::Full => Mode::Everywhere,
        Closure::Solving => return Vec::new(),
    };
    let rules = RuleSet {
        beta_v: true,
        ..RuleSet::default()
    };
    let mut out = Vec::new();
    collect(t, rules, mode, &mut Vec::new(), &mut out, false);
    out.into_iter()
        .map(|(path, kind)| {
            let mut supply = FreshNames::avoiding(t);
            let term = fire_at(t, &path, kind, &mut supply);
            (path, term)
        })
        .collect()
}

/// Given a single open beta-value step `t -> t'`, return the intermediate
/// term witnessing its decomposition into a multiplicative step followed by
/// an exponential step.
pub fn simulate_betav_step(t: &Term, t_after: &Term) -> Result<Term, RewriteError> {
    for (path, fired) in all_betav_steps(t, Closure::Open) {
        if alpha_eq(&fired, t_after) {
            let mut supply = FreshNames::avoiding(t);
            let mid = fire_at(t, &path, StepKind::Mult, &mut supply);
            // The created ES fires as an exponential step at the same path.
            let sub = mid.subterm(&path).expect("es created by the m step");
            let kind = match spine_core(match sub {
                Term::Es(_, _, d) => d,
                _ => return Err(RewriteError::InvalidStep),
            }) {
                Term::Abs(_, _) => StepKind::ExpAbs,
                Term::Var(_) => StepKind::ExpVar,
                _ => return Err(RewriteError::InvalidStep),
            };
            let mut supply = FreshNames::avoiding(&mid);
            let closed = fire_at(&mid, &path, kind, &mut supply);
            if alpha_eq(&closed, t_after) {
                return Ok(mid);
            }
        }
    }
    Err(RewriteError::InvalidStep)
}

/// Fire the leftmost glue redex under full contexts, if any.
pub fn glue_step(t: &Term) -> Option<Term> {
    let rules = RuleSet {
        glue: true,
        ..RuleSet::default()
    };
    let (path, kind) = first_redex_with(t, rules, Mode::Everywhere)?;
    let mut supply = FreshNames::avoiding(t);
    Some(fire_at(t, &path, kind, &mut supply))
}

/// All single glue steps under full contexts.
pub fn all_glue_steps(t: &Term) -> Vec<(Path, Term)> {
    let rules = RuleSet {
        glue: true,
        ..RuleSet::default()
    };
    let mut out = Vec::new();
    collect(t, rules, Mode::Everywhere, &mut Vec::new(), &mut out, false);
    out.into_iter()
        .map(|(path, kind)| {
            let mut supply = FreshNames::avoiding(t);
            (path.clone(), fire_at(t, &path, kind, &mut supply))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Structural equivalence
// ---------------------------------------------------------------------------

/// The four root axioms of structural equivalence. Each repositions an ES
/// and preserves the multiset of term constructors.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EquivAxiom {
    /// `t[x<-u] s  ==  (t s)[x<-u]`   when x not free in s
    AppLeft,
    /// `t s[x<-u]  ==  (t s)[x<-u]`   when x not free in t
    AppRight,
    /// `t[x<-u[y<-s]]  ==  t[x<-u][y<-s]`   when y not free in t
    Nest,
    /// `t[y<-s][x<-u]  ==  t[x<-u][y<-s]`   when y not free in u, x not in s
    Commute,
}

/// Single-axiom rewrites available at the root of `t`, in both orientations.
fn root_equiv_rewrites(t: &Term) -> Vec<(EquivAxiom, bool, Term)> {
    use Term::*;
    let mut out = Vec::new();
    match t {
        App(f, a) => {
            if let Es(b, x, u) = &**f {
                if !a.free_vars().contains(x) {
                    out.push((
                        EquivAxiom::AppLeft,
                        true,
                        Es(
                            Box::new(App(b.clone(), a.clone())),
                            x.clone(),
                            u.clone(),
                        ),
                    ));
                }
            }
            if let Es(b, x, u) = &**a {
                if !f.free_vars().contains(x) {
                    out.push((
                        EquivAxiom::AppRight,
                        true,
                        Es(
                            Box::new(App(f.clone(), b.clone())),
                            x.clone(),
                            u.clone(),
                        ),
                    ));
                }
            }
        }
        Es(b, x, d) => {
            if let App(p, q) = &**b {
                if !q.free_vars().contains(x) {
                    out.push((
                        EquivAxiom::AppLeft,
                        false,
                        App(
                            Box::new(Es(p.clone(), x.clone(), Box::new((**d).clone()))),
                            q.clone(),
                        ),
                    ));
                }
                if !p.free_vars().contains(x) {
                    out.push((
                        EquivAxiom::AppRight,
                        false,
                        App(
                            p.clone(),
                            Box::new(Es(q.clone(), x.clone(), Box::new((**d).clone()))),
                        ),
                    ));
                }
            }
            if let Es(db, y, dd) = &**d {
                if !b.free_vars().contains(y) {
                    out.push((
                        EquivAxiom::Nest,
                        true,
                        Es(
                            Box::new(Es(b.clone(), x.clone(), db.clone())),
                            y.clone(),
                            dd.clone(),
                        ),
                    ));
                }
            }
            if let Es(bb, y, q) = &**b {
                // t[y<-q][x<-d] == t[x<-d][y<-q]
                if x != y && !q.free_vars().contains(x) && !d.free_vars().contains(y) {
                    out.push((
                        EquivAxiom::Commute,
                        true,
                        Es(
                            Box::new(Es(bb.clone(), x.clone(), Box::new((**d).clone()))),
                            y.clone(),
                            q.clone(),
                        ),
                    ));
                }
                // t[y<-q][x<-d] == t[y<-q[x<-d]]  (Nest right-to-left)
                if !bb.free_vars().contains(x) {
                    out.push((
                        EquivAxiom::Nest,
                        false,
                        Es(
                            bb.clone(),
                            y.clone(),
                            Box::new(Es(q.clone(), x.clone(), Box::new((**d).clone()))),
                        ),
                    ));
                }
            }
        }
        _ => {}
    }
    out
}

/// All single-axiom rewrites of `t`, closed under all contexts.
pub fn equiv_rewrites(t: &Term) -> Vec<(EquivAxiom, bool, Path, Term)> {
    fn go(root: &Term, t: &Term, path: &mut Path, out: &mut Vec<(EquivAxiom, bool, Path, Term)>) {
        for (ax, l2r, fired) in root_equiv_rewrites(t) {
            out.push((ax, l2r, path.clone(), root.replace_at(path, fired)));
        }
        match t {
            Term::Var(_) => {}
            Term::Abs(_, b) => {
                path.push(0);
                go(root, b, path, out);
                path.pop();
            }
            Term::App(f, a) => {
                path.push(0);
                go(root, f, path, out);
                path.pop();
                path.push(1);
                go(root, a, path, out);
                path.pop();
            }
            Term::Es(b, _, d) => {
                path.push(0);
                go(root, b, path, out);
                path.pop();
                path.push(1);
                go(root, d, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(t, t, &mut Vec::new(), &mut out);
    out
}

/// Rename all binders of `t` apart, away from its free variables, so the
/// axioms' freshness side conditions never fail for spurious name-clash
/// reasons during class exploration.
fn barendregt(t: &Term) -> Term {
    fn go(t: &Term, supply: &mut FreshNames) -> Term {
        match t {
            Term::Var(_) => t.clone(),
            Term::Abs(x, b) => {
                let x2 = supply.fresh(x);
                let b2 = rename_free(b, x, &x2);
                Term::Abs(x2, Box::new(go(&b2, supply)))
            }
            Term::App(f, a) => Term::App(Box::new(go(f, supply)), Box::new(go(a, supply))),
            Term::Es(b, x, d) => {
                let d2 = go(d, supply);
                let x2 = supply.fresh(x);
                let b2 = rename_free(b, x, &x2);
                Term::Es(Box::new(go(&b2, supply)), x2, Box::new(d2))
            }
        }
    }
    let mut supply = FreshNames::avoiding(t);
    go(t, &mut supply)
}

/// The structural equivalence class of `t`, explored by breadth-first
/// search over single-axiom rewrites with an alpha-canonical visited set.
/// Every axiom preserves the number and kinds of nodes, so the class is
/// finite and the search terminates.
pub fn equiv_class(t: &Term) -> Vec<Term> {
    let start = barendregt(t);
    let mut visited = BTreeSet::new();
    visited.insert(alpha_canon(&start));
    let mut queue = VecDeque::from([start.clone()]);
    let mut class = vec![start];
    while let Some(cur) = queue.pop_front() {
        for (_, _, _, next) in equiv_rewrites(&cur) {
            let canon = alpha_canon(&next);
            if visited.insert(canon) {
                class.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    class
}

/// Decide structural equivalence of two terms.
pub fn struct_equiv(t: &Term, u: &Term) -> bool {
    if alpha_eq(t, u) {
        return true;
    }
    // Every axiom preserves the node count and the free variables.
    if t.node_count() != u.node_count() || t.free_vars() != u.free_vars() {
        return false;
    }
    let target = alpha_canon(&barendregt(u));
    let start = barendregt(t);
    let mut visited = BTreeSet::new();
    visited.insert(alpha_canon(&start));
    let mut queue = VecDeque::from([start]);
    while let Some(cur) = queue.pop_front() {
        for (_, _, _, next) in equiv_rewrites(&cur) {
            let canon = alpha_canon(&next);
            if canon == target {
                return true;
            }
            if visited.insert(canon) {
                queue.push_back(next);
            }
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Sigma embedding
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SigmaRule {
    /// `((\x.t) u) s  ->  (\x.t s) u`
    Sigma1,
    /// `v ((\x.s) u)  ->  (\x.v s) u`   (v a value)
    Sigma3,
}

/// Check that a sigma step at the root is captured by a multiplicative step
/// on each side plus structural equivalence: fire the sigma rule, fire the
/// multiplicative root rule on both the redex and its sigma-reduct, and
/// compare the results up to structural equivalence.
pub fn sigma_embed_check(t: &Term, rule: SigmaRule) -> Result<bool, RewriteError> {
    let mut supply = FreshNames::avoiding(t);
    match rule {
        SigmaRule::Sigma1 => {
            let (inner, s) = match t {
                Term::App(inner, s) => (&**inner, &**s),
                _ => return Err(RewriteError::NoSigmaRedex),
            };
            let (x, b, u) = match inner {
                Term::App(f, u) => match &**f {
                    Term::Abs(x, b) => (x.clone(), (**b).clone(), (**u).clone()),
                    _ => return Err(RewriteError::NoSigmaRedex),
                },
                _ => return Err(RewriteError::NoSigmaRedex),
            };
            // Freshen the binder when it would capture in `t s`.
            let (x, b) = if s.free_vars().contains(&x) {
                let x2 = supply.fresh(&x);
                let b2 = rename_free(&b, &x, &x2);
                (x2, b2)
            } else {
                (x, b)
            };
            // t[x<-u] s  from the redex, (t s)[x<-u] from the sigma reduct.
            let left = Term::App(
                Box::new(Term::Es(Box::new(b.clone()), x.clone(), Box::new(u.clone()))),
                Box::new(s.clone()),
            );
            let right = Term::Es(
                Box::new(Term::App(Box::new(b), Box::new(s.clone()))),
                x,
                Box::new(u),
            );
            Ok(struct_equiv(&left, &right))
        }
        SigmaRule::Sigma3 => {
            let (v, inner) = match t {
                Term::App(v, inner) => (&**v, &**inner),
                _ => return Err(RewriteError::NoSigmaRedex),
            };
            if !v.is_value() {
                return Err(RewriteError::NoSigmaRedex);
            }
            let (x, b, u) = match inner {
                Term::App(f, u) => match &**f {
                    Term::Abs(x, b) => (x.clone(), (**b).clone(), (**u).clone()),
                    _ => return Err(RewriteError::NoSigmaRedex),
                },
                _ => return Err(RewriteError::NoSigmaRedex),
            };
            let (x, b) = if v.free_vars().contains(&x) {
                let x2 = supply.fresh(&x);
                let b2 = rename_free(&b, &x, &x2);
                (x2, b2)
            } else {
                (x, b)
            };
            // v (s[x<-u])  from the redex, (v s)[x<-u] from the sigma reduct.
            let left = Term::App(
                Box::new(v.clone()),
                Box::new(Term::Es(Box::new(b.clone()), x.clone(), Box::new(u.clone()))),
            );
            let right = Term::Es(
                Box::new(Term::App(Box::new(v.clone()), Box::new(b))),
                x,
                Box::new(u),
            );
            Ok(struct_equiv(&left, &right))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{abs, app, delta, es, omega, parse, var};

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn solving_steps_under_head_abstraction() {
        // \x.((\z.z)(\z.z)) fires m then e_lambda under solving closures,
        // but is open-normal.
        let i = abs("z", var("z"));
        let t = abs("x", app(i.clone(), i));
        let (u, k) = step(&t, Strategy::solving_lambda()).unwrap();
        assert_eq!(k, StepKind::Mult);
        assert!(alpha_eq(&u, &abs("x", es(var("z"), "z", abs("z", var("z"))))));
        let (u2, k2) = step(&u, Strategy::solving_lambda()).unwrap();
        assert_eq!(k2, StepKind::ExpAbs);
        assert!(alpha_eq(&u2, &abs("x", abs("z", var("z")))));
        assert!(step(&t, Strategy::open()).is_none());
        assert!(step(&t, Strategy::open_lambda()).is_none());
    }

    #[test]
    fn exp_var_only_with_variable_substitution() {
        let t = es(var("x"), "x", var("y"));
        let (u, k) = step(&t, Strategy::open()).unwrap();
        assert_eq!(k, StepKind::ExpVar);
        assert_eq!(u, var("y"));
        assert!(step(&t, Strategy::open_lambda()).is_none());
    }

    #[test]
    fn on_the_fly_renaming_in_mult() {
        // (\x.y)[y<-t] y  |-m  z[x<-y][z<-t]
        let t = app(es(abs("x", var("y")), "y", var("t")), var("y"));
        let (u, k) = step(&t, Strategy::open()).unwrap();
        assert_eq!(k, StepKind::Mult);
        let expected = es(es(var("z"), "x", var("y")), "z", var("t"));
        assert!(alpha_eq(&u, &expected), "got {u}");
    }

    #[test]
    fn omega_cycles_with_a_two_step_loop() {
        let trace = reduce(&omega(), Strategy::open(), 10, true);
        assert_eq!(trace.status, TraceStatus::Cycle(0));
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(trace.steps[0].kind, StepKind::Mult);
        assert_eq!(trace.steps[1].kind, StepKind::ExpAbs);
        assert!(alpha_eq(&trace.steps[1].term, &omega()));
    }

    #[test]
    fn proper_extension_terms_diverge() {
        // (\x.DELTA)(y y) DELTA reaches (DELTA DELTA)[x<-y y] and cycles.
        let t = app(app(abs("x", delta()), app(var("y"), var("y"))), delta());
        let trace = reduce(&t, Strategy::open(), 50, true);
        assert!(matches!(trace.status, TraceStatus::Cycle(_)));
        let target = es(omega(), "x", app(var("y"), var("y")));
        assert!(
            trace.states().iter().any(|s| alpha_eq(s, &target)),
            "trace never reaches (DELTA DELTA)[x<-y y]"
        );
    }

    #[test]
    fn abstractions_are_open_normal() {
        let t = abs("x", omega());
        let trace = reduce(&t, Strategy::open(), 100, true);
        assert_eq!(trace.status, TraceStatus::NormalForm);
        assert!(trace.steps.is_empty());
    }

    #[test]
    fn betav_examples() {
        let t = app(abs("x", var("x")), var("y"));
        let trace = betav_reduce(&t, Closure::Open, 10).unwrap();
        assert_eq!(trace.status, TraceStatus::NormalForm);
        assert_eq!(trace.steps.len(), 1);
        assert_eq!(trace.final_term(), &var("y"));

        // (\x.DELTA)(y y) DELTA is beta-value-normal: premature normal form.
        let t = app(app(abs("x", delta()), app(var("y"), var("y"))), delta());
        let trace = betav_reduce(&t, Closure::Full, 10).unwrap();
        assert_eq!(trace.status, TraceStatus::NormalForm);
        assert!(trace.steps.is_empty());

        // (\x.DELTA DELTA)(y y) loops in place.
        let t = app(abs("x", omega()), app(var("y"), var("y")));
        let trace = betav_reduce(&t, Closure::Full, 10).unwrap();
        assert!(matches!(trace.status, TraceStatus::Cycle(_)));

        assert_eq!(
            betav_reduce(&es(var("x"), "x", var("y")), Closure::Open, 10),
            Err(RewriteError::EsInInput)
        );
    }

    #[test]
    fn simulate_betav_decomposition() {
        let t = app(abs("x", var("x")), var("y"));
        let mid = simulate_betav_step(&t, &var("y")).unwrap();
        assert!(alpha_eq(&mid, &es(var("x"), "x", var("y"))));

        let t = app(delta(), abs("z", var("z")));
        let after = app(abs("z", var("z")), abs("z", var("z")));
        let mid = simulate_betav_step(&t, &after).unwrap();
        assert!(alpha_eq(
            &mid,
            &es(app(var("x"), var("x")), "x", abs("z", var("z")))
        ));

        assert_eq!(
            simulate_betav_step(&var("y"), &var("y")),
            Err(RewriteError::InvalidStep)
        );
    }

    #[test]
    fn struct_equiv_examples() {
        let t = p("z[x<-z z][y<-w w]");
        let u = p("z[y<-w w][x<-z z]");
        assert!(struct_equiv(&t, &u));
        assert!(struct_equiv(&t, &t));
        // The class never changes the number of ES nodes.
        assert!(!struct_equiv(&p("x[x<-y]"), &p("y")));
        // Repositioning across an application.
        assert!(struct_equiv(&p("x[x<-u] s"), &p("(x s)[x<-u]")));
        assert!(!struct_equiv(&p("x[x<-u] x"), &p("(x x)[x<-u]")));
    }

    #[test]
    fn struct_equiv_handles_name_clashes() {
        // (x[x<-u]) x requires renaming the bound x before the axiom fires;
        // the result is alpha-distinct but the classes still agree.
        let t = p("(y[z<-u]) z");
        let u = p("(y w)[q<-u]");
        assert!(!struct_equiv(&t, &u));
        let t = app(es(var("y"), "z", var("u")), var("z"));
        let expected = es(app(var("y"), var("z")), "z'", var("u"));
        assert!(struct_equiv(&t, &expected));
    }

    #[test]
    fn sigma_checks() {
        assert_eq!(
            sigma_embed_check(&p("((\\x.y) z) w"), SigmaRule::Sigma1),
            Ok(true)
        );
        assert_eq!(
            sigma_embed_check(&p("v ((\\x.s) u)"), SigmaRule::Sigma3),
            Ok(true)
        );
        assert_eq!(
            sigma_embed_check(&p("y z"), SigmaRule::Sigma1),
            Err(RewriteError::NoSigmaRedex)
        );
        // Argument of sigma3 must have a value on the left.
        assert_eq!(
            sigma_embed_check(&p("(v v) ((\\x.s) u)"), SigmaRule::Sigma3),
            Err(RewriteError::NoSigmaRedex)
        );
    }

    #[test]
    fn glue_examples() {
        // (z x)[x<-u w] -> z (u w)
        let t = p("(z x)[x<-u w]");
        assert_eq!(glue_step(&t), Some(p("z (u w)")));
        // Definition must be an application.
        assert_eq!(glue_step(&p("x[x<-\\y.y]")), None);
        // The occurrence must not be under an abstraction.
        assert_eq!(glue_step(&p("(\\y.x)[x<-u w]")), None);
        // The occurrence must be linear.
        assert_eq!(glue_step(&p("(x x)[x<-u w]")), None);
    }

    #[test]
    fn counts_agree_with_the_step_list() {
        let t = app(app(abs("x", app(var("x"), var("x"))), abs("z", var("z"))), var("w"));
        let trace = reduce(&t, Strategy::open(), 100, true);
        let mut recount = StepCounts::default();
        for s in &trace.steps {
            recount.bump(s.kind);
        }
        assert_eq!(recount, trace.counts);
        assert_eq!(trace.counts.total(), trace.steps.len());
    }

    #[test]
    fn trace_json_shape() {
        let t = p("(\\x.x) y");
        let trace = reduce(&t, Strategy::open(), 10, true);
        let j = trace.to_json();
        assert_eq!(j["status"], "normal_form");
        assert_eq!(j["counts"]["m"], 1);
        assert_eq!(j["counts"]["e_var"], 1);
        assert_eq!(j["steps"][0]["kind"], "m");
        assert_eq!(j["steps"][0]["path"], serde_json::json!([]));
    }
}
