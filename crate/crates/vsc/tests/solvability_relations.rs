//! Relational properties of the two deciders: the implication between them,
//! stability under substitution and reduction, agreement with beta-value
//! probes on ES-free terms, and judgment preservation across glue steps.

use vsc::derive::{infer, subject_expand, subject_reduce, InferMode};
use vsc::gen::enumerate_terms;
use vsc::multitypes::check_derivation;
use vsc::rewriting::{all_glue_steps, all_steps, betav_reduce, Closure, StepKind, Strategy, TraceStatus};
use vsc::solvability::{scrutable, solvable};
use vsc::syntax::{abs, alpha_eq, app, identity, meta_subst, var, Context, Term};

const FUEL: usize = 500;

fn universe() -> Vec<Term> {
    enumerate_terms(6, &["a"])
}

#[test]
fn solvable_implies_scrutable() {
    for t in universe() {
        let v = solvable(&t, FUEL);
        let s = scrutable(&t, FUEL);
        assert!(v.is_definite() && s.is_definite(), "undecided: {t}");
        if v.is_yes() {
            assert!(s.is_yes(), "solvable but inscrutable: {t}");
        }
    }
}

/// If some substitution instance is solvable (resp. scrutable), so is the
/// term itself.
#[test]
fn verdicts_stable_under_substitution_removal() {
    let substituends: Vec<Term> = vec![
        identity(),
        var("c"),
        app(var("c"), var("c")),
        abs("q", app(var("q"), var("q"))),
    ];
    let mut checked = 0usize;
    for t in enumerate_terms(5, &["a"]) {
        if !t.free_vars().contains("a") {
            continue;
        }
        type Decider = fn(&Term, usize) -> vsc::solvability::Verdict;
        let deciders: [(Decider, &str); 2] = [(solvable, "solvable"), (scrutable, "scrutable")];
        for u in &substituends {
            let instance = meta_subst(&t, "a", u);
            for (decide, name) in deciders {
                let inst = decide(&instance, FUEL);
                let orig = decide(&t, FUEL);
                assert!(inst.is_definite() && orig.is_definite(), "undecided: {t}");
                if inst.is_yes() {
                    assert!(orig.is_yes(), "{name}({instance}) holds but {name}({t}) fails");
                }
                checked += 1;
            }
        }
    }
    println!("substitution stability: {checked} instances");
    assert!(checked > 100);
}

/// Negative verdicts are stable along every full-reduction step.
#[test]
fn negative_verdicts_stable_under_reduction() {
    let mut checked = 0usize;
    for t in universe() {
        let steps = all_steps(&t, Strategy::full());
        if steps.is_empty() {
            continue;
        }
        let t_solvable = solvable(&t, FUEL);
        let t_scrutable = scrutable(&t, FUEL);
        for (_, _, u) in steps {
            if t_solvable.is_no() {
                assert!(solvable(&u, FUEL).is_no(), "unsolvable {t} steps to solvable {u}");
            }
            if t_scrutable.is_no() {
                assert!(scrutable(&u, FUEL).is_no(), "inscrutable {t} steps to scrutable {u}");
            }
            checked += 1;
        }
    }
    println!("reduction stability: {checked} steps");
    assert!(checked > 100);
}

fn head_contexts(args: &[Term], depth: usize) -> Vec<Context> {
    let mut out = vec![Context::Hole];
    if depth == 0 {
        return out;
    }
    for inner in head_contexts(args, depth - 1) {
        if matches!(inner, Context::Hole) && depth > 1 {
            continue; // avoid duplicating shallow contexts at every depth
        }
        out.push(Context::Abs("a".to_string(), Box::new(inner.clone())));
        for arg in args {
            out.push(Context::AppL(Box::new(inner.clone()), arg.clone()));
        }
    }
    out
}

fn testing_contexts(args: &[Term], depth: usize) -> Vec<Context> {
    let mut out = vec![Context::Hole];
    if depth == 0 {
        return out;
    }
    for inner in testing_contexts(args, depth - 1) {
        if matches!(inner, Context::Hole) && depth > 1 {
            continue;
        }
        for arg in args {
            out.push(Context::AppL(Box::new(inner.clone()), arg.clone()));
            out.push(Context::AppL(
                Box::new(Context::Abs("a".to_string(), Box::new(inner.clone()))),
                arg.clone(),
            ));
        }
    }
    out
}

/// Beta-value probes on ES-free terms: a probe that sends the plugged term
/// to a value (resp. the identity) forces the corresponding verdict. The
/// probe enumeration is bounded, so a successful probe against a negative
/// verdict is a hard failure, while probe-confirmed positives are counted
/// as evidence.
#[test]
fn beta_value_probes_agree_with_verdicts() {
    let args = [identity(), abs("q", app(var("q"), var("q")))];
    let testing = testing_contexts(&args, 3);
    let heads = head_contexts(&args, 3);
    let mut confirmed_scrutable = 0usize;
    let mut confirmed_solvable = 0usize;
    for t in enumerate_terms(5, &["a"]).into_iter().filter(Term::is_es_free) {
        let s = scrutable(&t, FUEL);
        let v = solvable(&t, FUEL);
        let probe_value = testing.iter().any(|ctx| {
            let plugged = ctx.plug(&t);
            if !plugged.is_es_free() {
                return false;
            }
            let run = betav_reduce(&plugged, Closure::Full, FUEL).unwrap();
            run.status == TraceStatus::NormalForm && run.final_term().is_value()
        });
        let probe_identity = heads.iter().any(|ctx| {
            let plugged = ctx.plug(&t);
            let run = betav_reduce(&plugged, Closure::Full, FUEL).unwrap();
            run.status == TraceStatus::NormalForm && alpha_eq(run.final_term(), &identity())
        });
        if probe_value {
            assert!(s.is_yes(), "a probe reaches a value but {t} is inscrutable");
            confirmed_scrutable += 1;
        }
        if probe_identity {
            assert!(v.is_yes(), "a probe reaches the identity but {t} is unsolvable");
            confirmed_solvable += 1;
        }
    }
    println!("probes: {confirmed_scrutable} scrutable, {confirmed_solvable} solvable confirmations");
    assert!(confirmed_scrutable > 30, "too little scrutability evidence");
    assert!(confirmed_solvable > 5, "too little solvability evidence");
}

/// Glue steps preserve the final judgment in both directions.
#[test]
fn glue_steps_preserve_judgments() {
    let mut checked = 0usize;
    // Seed open contexts around a linear occurrence with application
    // definitions, on top of whatever the universe contains.
    let mut terms = universe();
    let holes = ["<>", "z <>", "<> z", "<>[q<-z]", "z[q<-<>]", "(z <>) w", "<>[q<-z w]"];
    let defs = ["c c'", "(\\q.q) c", "c (\\q.q)", "(c c') w"];
    for hole in holes {
        let ctx = vsc::syntax::parse_context(hole).unwrap();
        for def in defs {
            let def = vsc::syntax::parse(def).unwrap();
            terms.push(Term::Es(
                Box::new(ctx.plug(&var("x"))),
                "x".to_string(),
                Box::new(def),
            ));
        }
    }
    for t in terms {
        for (path, next) in all_glue_steps(&t) {
            let Some(inf) = infer(&next, InferMode::Open, FUEL) else {
                continue;
            };
            let after = inf.derivation;
            let before = subject_expand(&after, &t, &path, StepKind::Glue).unwrap();
            check_derivation(&before).unwrap();
            assert_eq!(before.judgment.subject, t);
            assert_eq!(before.judgment.ctx, after.judgment.ctx);
            assert_eq!(before.judgment.ty, after.judgment.ty);

            let again = subject_reduce(&before, &path, StepKind::Glue, &next).unwrap();
            check_derivation(&again).unwrap();
            assert_eq!(again.judgment.ctx, after.judgment.ctx);
            assert_eq!(again.judgment.ty, after.judgment.ty);
            checked += 1;
        }
    }
    println!("glue judgments: {checked} steps");
    assert!(checked > 30, "only {checked} glue steps typed");
}
