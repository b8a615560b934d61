//! Acceptance suite: one test per criterion, property-based at desk scale.
//! Run with `cargo test -p vsc --test acceptance -- --nocapture` to see one
//! pass line per criterion.

use std::collections::HashMap;

use vsc::classify::classify;
use vsc::derive::{
    infer, merge_value, removal, split_value, subject_equiv, subject_expand, subject_reduce,
    subst_derivation, InferMode,
};
use vsc::gen::enumerate_terms;
use vsc::multitypes::{check_derivation, derivation_flags, type_flags, MultiType};
use vsc::rewriting::{
    all_betav_steps, all_glue_steps, all_steps, betav_reduce, equiv_class, reduce,
    sigma_embed_check, simulate_betav_step, struct_equiv, Closure, SigmaRule, StepKind, Strategy,
    TraceStatus,
};
use vsc::solvability::{scrutable, solvable};
use vsc::syntax::{
    alpha_canon, alpha_eq, es_expand, open_size, parse, plain_subst, solvable_size,
    CanonicalTerm, Term,
};

const UNIVERSE_FUEL: usize = 200;

fn universe() -> Vec<Term> {
    // Closed terms and terms over one free variable, up to 8 nodes.
    enumerate_terms(8, &["a"])
}

fn small_universe() -> Vec<Term> {
    enumerate_terms(6, &["a"])
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
struct Counts {
    m: usize,
    e: usize,
}

impl Counts {
    fn bump(mut self, kind: StepKind) -> Self {
        match kind {
            StepKind::Mult => self.m += 1,
            StepKind::ExpAbs | StepKind::ExpVar => self.e += 1,
            _ => panic!("unexpected step kind in a core reduction"),
        }
        self
    }
}

/// Explore every maximal reduction sequence from `t` via the reduction DAG,
/// asserting along the way that the final term, the length, and the
/// per-kind counts do not depend on the choice of redex.
///
/// Per-kind counting splits the steps into multiplicative and exponential
/// ones. The finer abstraction/variable split of the exponential rule is
/// not path-invariant: an abstraction substituted for the very variable an
/// exponential-variable redex would substitute converts that redex's kind,
/// as in (x[z<-x])[x<-\y.y], whose maximal sequences fire either two
/// abstraction steps or one variable step and one abstraction step.
fn explore_all_sequences(
    t: &Term,
    strat: Strategy,
    memo: &mut HashMap<CanonicalTerm, (CanonicalTerm, usize, Counts)>,
    depth: usize,
) -> (CanonicalTerm, usize, Counts) {
    assert!(depth < 2000, "reduction DAG unexpectedly deep for {t}");
    let key = alpha_canon(t);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let steps = all_steps(t, strat);
    let result = if steps.is_empty() {
        (key.clone(), 0, Counts::default())
    } else {
        let mut agreed: Option<(CanonicalTerm, usize, Counts)> = None;
        for (_path, kind, next) in steps {
            let (nf, len, counts) = explore_all_sequences(&next, strat, memo, depth + 1);
            let candidate = (nf, len + 1, counts.bump(kind));
            match &agreed {
                None => agreed = Some(candidate),
                Some(prev) => assert_eq!(
                    *prev, candidate,
                    "sequences from {t} disagree on (normal form, length, counts)"
                ),
            }
        }
        agreed.unwrap()
    };
    memo.insert(key, result.clone());
    result
}

#[test]
fn acceptance_01_diamond_and_random_descent() {
    let terms = universe();
    let mut checked_open = 0usize;
    let mut checked_solving = 0usize;
    for strat in [Strategy::open(), Strategy::solving()] {
        let mut memo = HashMap::new();
        for t in &terms {
            let trace = reduce(t, strat, UNIVERSE_FUEL, true);
            if trace.status != TraceStatus::NormalForm {
                continue;
            }
            let (nf, len, counts) = explore_all_sequences(t, strat, &mut memo, 0);
            // The deterministic trace is one of the maximal sequences.
            assert_eq!(nf, alpha_canon(trace.final_term()));
            assert_eq!(len, trace.steps.len());
            assert_eq!(
                (counts.m, counts.e),
                (trace.counts.mult, trace.counts.exp())
            );
            if strat.closure == Closure::Open {
                checked_open += 1;
            } else {
                checked_solving += 1;
            }
        }
    }
    assert!(checked_open > 5000, "universe too small: {checked_open}");
    println!(
        "acceptance 01 diamond/random descent: PASS \
         ({checked_open} open, {checked_solving} solving normalizing terms)"
    );
}

#[test]
fn acceptance_02_normal_form_grammars() {
    let terms = universe();
    for t in &terms {
        let c = classify(t);
        let open_normal = all_steps(t, Strategy::open_lambda()).is_empty();
        let solving_normal = all_steps(t, Strategy::solving_lambda()).is_empty();
        let full_normal = all_steps(t, Strategy::full_lambda()).is_empty();
        assert_eq!(c.fireball, open_normal, "fireball mismatch for {t}");
        assert_eq!(c.solved_fireball, solving_normal, "solved mismatch for {t}");
        assert_eq!(c.full_fireball, full_normal, "full mismatch for {t}");
    }
    println!(
        "acceptance 02 normal-form grammars: PASS ({} terms, zero mismatches)",
        terms.len()
    );
}

#[test]
fn acceptance_03_postponement_of_variable_steps() {
    let terms = universe();
    let mut checked = 0usize;
    for (with_vars, without_vars) in [
        (Strategy::open(), Strategy::open_lambda()),
        (Strategy::solving(), Strategy::solving_lambda()),
    ] {
        for t in &terms {
            let full = reduce(t, with_vars, UNIVERSE_FUEL, true);
            if full.status != TraceStatus::NormalForm {
                continue;
            }
            let lam = reduce(t, without_vars, 2 * UNIVERSE_FUEL, false);
            assert_eq!(
                lam.status,
                TraceStatus::NormalForm,
                "restricted reduction must terminate on {t}"
            );
            // From the restricted normal form, only variable steps remain.
            let suffix = reduce(lam.final_term(), with_vars, 2 * UNIVERSE_FUEL, false);
            assert_eq!(suffix.status, TraceStatus::NormalForm);
            assert!(
                suffix.steps.iter().all(|s| s.kind == StepKind::ExpVar),
                "suffix of {t} is not made of variable steps"
            );
            assert_eq!(
                full.counts.mult, lam.counts.mult,
                "multiplicative counts differ for {t}"
            );
            assert!(alpha_eq(full.final_term(), suffix.final_term()));
            checked += 1;
        }
    }
    println!("acceptance 03 postponement: PASS ({checked} traces compared)");
}

#[test]
fn acceptance_04_plotkin_simulation_and_lifting() {
    let terms = universe();
    let mut simulated = 0usize;
    let mut lifted = 0usize;
    for t in terms.iter().filter(|t| t.is_es_free()) {
        // Every single open beta-value step decomposes as m then e.
        for (path, next) in all_betav_steps(t, Closure::Open) {
            let mid = simulate_betav_step(t, &next)
                .unwrap_or_else(|e| panic!("no decomposition for {t} -> {next}: {e}"));
            let m_steps = all_steps(t, Strategy::open());
            assert!(
                m_steps
                    .iter()
                    .any(|(p, k, u)| *k == StepKind::Mult && p == &path && alpha_eq(u, &mid)),
                "intermediate term of {t} is not one multiplicative step away"
            );
            simulated += 1;
        }
        // Lifting: an open run ending in a value is matched by beta-value.
        let open_run = reduce(t, Strategy::open(), UNIVERSE_FUEL, true);
        if open_run.status == TraceStatus::NormalForm && open_run.final_term().is_value() {
            let bv = betav_reduce(t, Closure::Open, 2 * UNIVERSE_FUEL).unwrap();
            assert_eq!(bv.status, TraceStatus::NormalForm, "beta-value diverges on {t}");
            let v = bv.final_term();
            assert!(v.is_es_free(), "beta-value normal form has an es: {v}");
            assert!(alpha_eq(v, open_run.final_term()));
            lifted += 1;
        }
    }
    assert!(simulated > 300);
    println!(
        "acceptance 04 simulation/lifting: PASS ({simulated} decompositions, {lifted} lifted runs)"
    );
}

#[test]
fn acceptance_05_open_quantitative_law() {
    let terms = universe();
    let mut checked = 0usize;
    for t in &terms {
        let Some(inf) = infer(t, InferMode::Open, UNIVERSE_FUEL) else {
            continue;
        };
        let d = &inf.derivation;
        check_derivation(d).unwrap();
        assert_eq!(&d.judgment.subject, t);
        let (inert, tight) = derivation_flags(d).unwrap();
        assert!(inert && tight, "inference must be tight for {t}");
        let nf = inf.trace.final_term();
        assert_eq!(
            2 * inf.trace.counts.mult + open_size(nf),
            d.msize(),
            "open law fails for {t}"
        );
        checked += 1;
    }
    // Spot value: (\x.x x) I has multiplicative size 4 = 2*2 + 0.
    let t = parse("(\\x.x x) (\\z.z)").unwrap();
    let inf = infer(&t, InferMode::Open, 100).unwrap();
    assert_eq!(inf.derivation.msize(), 4);
    assert_eq!(inf.trace.counts.mult, 2);
    assert_eq!(open_size(inf.trace.final_term()), 0);
    assert!(checked > 5000);
    println!("acceptance 05 open quantitative law: PASS ({checked} terms, spot value 4 ok)");
}

#[test]
fn acceptance_06_solving_quantitative_law() {
    let terms = universe();
    let mut checked = 0usize;
    for t in &terms {
        let Some(inf) = infer(t, InferMode::Solving, UNIVERSE_FUEL) else {
            continue;
        };
        let d = &inf.derivation;
        check_derivation(d).unwrap();
        assert_eq!(&d.judgment.subject, t);
        assert!(d.judgment.ctx.is_inert(), "context must be inert for {t}");
        let flags = type_flags(d.judgment.ty.as_multi().expect("multi conclusion"));
        assert!(flags.precisely_solvable, "type must be precisely solvable for {t}");
        let nf = inf.trace.final_term();
        assert_eq!(
            2 * inf.trace.counts.mult + solvable_size(nf),
            d.msize(),
            "solving law fails for {t}"
        );
        checked += 1;
    }
    // Spot value: \x.((\z.z)(\z.z)) has multiplicative size 4 = 2*1 + 2.
    let t = parse("\\x.((\\z.z)(\\z.z))").unwrap();
    let inf = infer(&t, InferMode::Solving, 100).unwrap();
    assert_eq!(inf.derivation.msize(), 4);
    assert_eq!(inf.trace.counts.mult, 1);
    assert_eq!(solvable_size(inf.trace.final_term()), 2);
    assert!(checked > 4000);
    println!("acceptance 06 solving quantitative law: PASS ({checked} terms, spot value 4 ok)");
}

#[test]
fn acceptance_07_transformer_size_ledgers() {
    // Deterministic linear congruential sampling over decompositions.
    let mut seed = 0x9e3779b97f4a7c15u64;
    let mut next = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (seed >> 33) as usize
    };
    let bodies: Vec<Term> = enumerate_terms(6, &["x", "a"])
        .into_iter()
        .filter(|t| t.free_vars().contains("x"))
        .collect();
    let values: Vec<Term> = enumerate_terms(4, &["a"])
        .into_iter()
        .filter(|t| t.is_value())
        .collect();
    assert!(!bodies.is_empty() && !values.is_empty());

    let mut ledgered = 0usize;
    let mut splits = 0usize;
    let mut attempts = 0usize;
    while ledgered < 1000 && attempts < 2_000_000 {
        attempts += 1;
        let t = &bodies[next() % bodies.len()];
        let v = &values[next() % values.len()];
        let Some(subject) = plain_subst(t, "x", v) else {
            continue;
        };
        let Some(inf) = infer(&subject, InferMode::Open, 100) else {
            continue;
        };
        let phi = inf.derivation;
        // Removal: |phi|_m = |psi|_m + |theta|_m and |phi| <= |psi| + |theta|.
        let (psi, theta) = removal(&phi, t, "x", v).expect("removal applies");
        check_derivation(&psi).unwrap();
        check_derivation(&theta).unwrap();
        assert_eq!(phi.msize(), psi.msize() + theta.msize());
        assert!(phi.size() <= psi.size() + theta.size());
        // Substitution back: exact multiplicative bookkeeping.
        let back = subst_derivation(&psi, "x", &theta).expect("substitution applies");
        assert_eq!(back.judgment, phi.judgment);
        assert_eq!(back.msize(), psi.msize() + theta.msize());
        assert!(back.size() <= psi.size() + theta.size());

        // Split/merge on the value typing produced by removal.
        let m = theta
            .judgment
            .ty
            .as_multi()
            .expect("value typings conclude multisets")
            .clone();
        if !m.is_empty() {
            let k = next() % (m.len() + 1);
            let m1 = MultiType::new(m.elems()[..k].to_vec());
            let m2 = MultiType::new(m.elems()[k..].to_vec());
            let (d1, d2) = split_value(&theta, &m1, &m2).expect("split applies");
            assert_eq!(d1.msize() + d2.msize(), theta.msize());
            assert_eq!(d1.size() + d2.size(), theta.size());
            let merged = merge_value(&d1, &d2).expect("merge applies");
            assert_eq!(merged.judgment, theta.judgment);
            splits += 1;
        }
        ledgered += 1;
    }
    assert_eq!(ledgered, 1000, "not enough derivations sampled");
    println!("acceptance 07 transformer size ledgers: PASS (1000 samples, {splits} splits)");
}

#[test]
fn acceptance_08_subject_reduction_sizes() {
    let terms = universe();
    let mut open_steps = 0usize;
    let mut solving_steps = 0usize;
    for t in &terms {
        if let Some(inf) = infer(t, InferMode::Open, UNIVERSE_FUEL) {
            let mut d = inf.derivation;
            for step in &inf.trace.steps {
                let next = subject_reduce(&d, &step.path, step.kind, &step.term).unwrap();
                check_derivation(&next).unwrap();
                assert_eq!(next.judgment.ctx, d.judgment.ctx);
                assert_eq!(next.judgment.ty, d.judgment.ty);
                match step.kind {
                    StepKind::Mult => {
                        assert_eq!(next.msize(), d.msize() - 2);
                        assert_eq!(next.size(), d.size() - 1);
                    }
                    StepKind::ExpAbs | StepKind::ExpVar => {
                        assert_eq!(next.msize(), d.msize());
                        assert!(next.size() < d.size());
                    }
                    _ => unreachable!(),
                }
                d = next;
                open_steps += 1;
            }
        }
        if let Some(inf) = infer(t, InferMode::Solving, UNIVERSE_FUEL) {
            // The inferred type is precisely solvable, hence unitary: every
            // solving multiplicative step drops the size by exactly two.
            let mut d = inf.derivation;
            for step in &inf.trace.steps {
                let next = subject_reduce(&d, &step.path, step.kind, &step.term).unwrap();
                assert_eq!(next.judgment.ctx, d.judgment.ctx);
                assert_eq!(next.judgment.ty, d.judgment.ty);
                match step.kind {
                    StepKind::Mult => {
                        assert_eq!(next.msize(), d.msize() - 2);
                        assert_eq!(next.size(), d.size() - 1);
                    }
                    StepKind::ExpAbs | StepKind::ExpVar => {
                        assert_eq!(next.msize(), d.msize());
                        assert!(next.size() < d.size());
                    }
                    _ => unreachable!(),
                }
                d = next;
                solving_steps += 1;
            }
        }
    }
    assert!(open_steps > 2000);
    println!(
        "acceptance 08 subject reduction sizes: PASS ({open_steps} open, {solving_steps} solving steps)"
    );
}

#[test]
fn acceptance_09_solvability_corpus() {
    let fuel = 1000;
    let cases = [
        ("(\\x.x x)(\\x.x x)", false, false),
        ("\\x.(\\y.y y)(\\y.y y)", true, false),
        ("x (\\x.(\\y.y y)(\\y.y y))", true, true),
        ("x ((\\y.y y)(\\y.y y))", false, false),
        ("((\\x.\\z.z z) (y y)) (\\z.z z)", false, false),
        ("(\\q.q)[x<-\\y.(\\z.z z)(\\z.z z)]", true, true),
        ("\\y.(\\z.z z)(\\z.z z)", true, false),
    ];
    for (src, expect_scrutable, expect_solvable) in cases {
        let t = parse(src).unwrap();
        let s = scrutable(&t, fuel);
        let v = solvable(&t, fuel);
        assert!(s.is_definite(), "scrutability undecided for {src}");
        assert!(v.is_definite(), "solvability undecided for {src}");
        assert_eq!(s.is_yes(), expect_scrutable, "scrutable({src})");
        assert_eq!(v.is_yes(), expect_solvable, "solvable({src})");
    }
    println!("acceptance 09 solvability corpus: PASS ({} named terms)", cases.len());
}

#[test]
fn acceptance_10_adequacy() {
    let terms = universe();
    let mut undecided = 0usize;
    let mut agreements = 0usize;
    for t in &terms {
        for (mode, strat) in [
            (InferMode::Open, Strategy::open()),
            (InferMode::Solving, Strategy::solving()),
        ] {
            let status = reduce(t, strat, UNIVERSE_FUEL, true).status;
            if status == TraceStatus::FuelExhausted {
                undecided += 1;
                continue;
            }
            let typable = infer(t, mode, UNIVERSE_FUEL).is_some();
            assert_eq!(
                typable,
                status == TraceStatus::NormalForm,
                "adequacy mismatch for {t}"
            );
            agreements += 1;
        }
    }
    assert_eq!(undecided, 0, "all universe terms should be fuel-decided");
    println!("acceptance 10 adequacy: PASS ({agreements} fuel-decided checks)");
}

#[test]
fn acceptance_11_equivalence_and_glue() {
    let terms = small_universe();

    // Strong bisimulation of the structural equivalence, for the core
    // kinds and for glue.
    let mut bisim_checked = 0usize;
    for t in &terms {
        let class = equiv_class(t);
        if class.len() < 2 {
            continue;
        }
        for u in &class {
            for (_, kind, t_next) in all_steps(t, Strategy::full()) {
                let matched = all_steps(u, Strategy::full())
                    .into_iter()
                    .any(|(_, k, u_next)| k == kind && struct_equiv(&t_next, &u_next));
                assert!(matched, "bisimulation fails: {t} == {u}, step to {t_next}");
                bisim_checked += 1;
            }
            for (_, t_next) in all_glue_steps(t) {
                let matched = all_glue_steps(u)
                    .into_iter()
                    .any(|(_, u_next)| struct_equiv(&t_next, &u_next));
                assert!(matched, "glue bisimulation fails: {t} == {u}");
                bisim_checked += 1;
            }
        }
    }
    assert!(bisim_checked > 100);

    // Sigma embeddings, on instances built from all small components plus
    // every matching term of the universe.
    let mut sigma_checked = 0usize;
    let pieces = enumerate_terms(3, &["a", "x"]);
    for body in &pieces {
        for arg in &pieces {
            for outer in &pieces {
                let redex = Term::App(
                    Box::new(Term::Abs("x".to_string(), Box::new(body.clone()))),
                    Box::new(arg.clone()),
                );
                let s1 = Term::App(Box::new(redex.clone()), Box::new(outer.clone()));
                assert_eq!(
                    sigma_embed_check(&s1, SigmaRule::Sigma1),
                    Ok(true),
                    "sigma1 embedding fails for {s1}"
                );
                sigma_checked += 1;
                if outer.is_value() {
                    let s3 = Term::App(Box::new(outer.clone()), Box::new(redex));
                    assert_eq!(
                        sigma_embed_check(&s3, SigmaRule::Sigma3),
                        Ok(true),
                        "sigma3 embedding fails for {s3}"
                    );
                    sigma_checked += 1;
                }
            }
        }
    }
    for t in &terms {
        if let Term::App(f, _) = t {
            if let Term::App(g, _) = &**f {
                if matches!(&**g, Term::Abs(_, _)) {
                    assert_eq!(sigma_embed_check(t, SigmaRule::Sigma1), Ok(true));
                    sigma_checked += 1;
                }
            }
        }
        if let Term::App(v, arg) = t {
            if v.is_value() {
                if let Term::App(g, _) = &**arg {
                    if matches!(&**g, Term::Abs(_, _)) {
                        assert_eq!(sigma_embed_check(t, SigmaRule::Sigma3), Ok(true));
                        sigma_checked += 1;
                    }
                }
            }
        }
    }
    assert!(sigma_checked > 1000);

    // Verdicts are invariant under expansion of every es into a beta redex.
    let fuel = 2000;
    for t in &terms {
        let expanded = es_expand(t);
        for (f, g) in [
            (scrutable(t, fuel), scrutable(&expanded, fuel)),
            (solvable(t, fuel), solvable(&expanded, fuel)),
        ] {
            assert!(f.is_definite() && g.is_definite(), "undecided for {t}");
            assert_eq!(f.is_yes(), g.is_yes(), "es expansion changes the verdict of {t}");
        }
    }

    // Glue irrelevance. Termination is unaffected under the full closure;
    // under the open closure, where multiplicative counts are path-invariant,
    // interleaved glue steps postpone without changing the count. A glue
    // step whose definition stops being an application after the swap
    // leaves an exponential-variable residual instead of a glue one.
    let mut postponed = 0usize;
    for t in &terms {
        let plain_full = reduce(t, Strategy::full(), 300, true);
        let glued_full = reduce(t, Strategy::full().with_glue(), 300, true);
        assert_ne!(plain_full.status, TraceStatus::FuelExhausted, "undecided: {t}");
        assert_ne!(glued_full.status, TraceStatus::FuelExhausted, "undecided: {t}");
        assert_eq!(
            plain_full.status == TraceStatus::NormalForm,
            glued_full.status == TraceStatus::NormalForm,
            "glue changes full termination of {t}"
        );

        let open = Strategy::open();
        let open_glue = Strategy::open().with_glue();
        let plain = reduce(t, open, 300, true);
        let glued = reduce(t, open_glue, 300, true);
        assert_eq!(
            plain.status == TraceStatus::NormalForm,
            glued.status == TraceStatus::NormalForm,
            "glue changes open termination of {t}"
        );
        if glued.status != TraceStatus::NormalForm || glued.counts.glue == 0 {
            continue;
        }
        assert_eq!(plain.counts.mult, glued.counts.mult, "glue changes the m-count of {t}");
        // Bubble every glue step to the end by swapping it with the next
        // non-glue step; each swap must exist.
        let mut states: Vec<Term> = glued.states().into_iter().cloned().collect();
        let mut kinds: Vec<StepKind> = glued.steps.iter().map(|s| s.kind).collect();
        while let Some(i) = (0..kinds.len().saturating_sub(1))
            .find(|&i| kinds[i] == StepKind::Glue && kinds[i + 1] != StepKind::Glue)
        {
            let a_kind = kinds[i + 1];
            let mut swapped = false;
            'outer: for (_, k, mid) in all_steps(&states[i], open) {
                if k != a_kind {
                    continue;
                }
                // The postponed glue step either stays a glue step or, when
                // its definition is no longer an application, becomes an
                // exponential-variable step.
                for (_, k2, end) in all_steps(&mid, open_glue) {
                    if matches!(k2, StepKind::Glue | StepKind::ExpVar)
                        && alpha_eq(&end, &states[i + 2])
                    {
                        states[i + 1] = mid;
                        kinds[i] = a_kind;
                        kinds[i + 1] = k2;
                        swapped = true;
                        break 'outer;
                    }
                }
            }
            assert!(swapped, "glue step does not postpone in {t}");
        }
        // All glue steps trail at the end; the multiplicative count and the
        // endpoints are untouched.
        let boundary = kinds.iter().position(|k| *k == StepKind::Glue).unwrap_or(kinds.len());
        assert!(kinds[boundary..].iter().all(|k| *k == StepKind::Glue));
        assert_eq!(
            kinds.iter().filter(|k| **k == StepKind::Mult).count(),
            glued.counts.mult
        );
        assert!(alpha_eq(states.last().unwrap(), glued.final_term()));
        postponed += 1;
    }
    assert!(postponed > 0, "no glue interleavings exercised");
    println!(
        "acceptance 11 equivalence/glue: PASS \
         ({bisim_checked} bisimulation steps, {sigma_checked} sigma instances, {postponed} postponements)"
    );
}

#[test]
fn acceptance_12_sigma3_regression() {
    // The sigma3 instance w ((\x.w') (z y)) and its reduct (\x.w w') (z y):
    // both sides receive derivations with the same final judgment by
    // pushing through the m step, the structural axiom, and expanding the
    // reduct's own m step.
    let t = parse("w ((\\x.w') (z y))").unwrap();
    let t_reduct = parse("(\\x.w w') (z y)").unwrap();
    assert_eq!(sigma_embed_check(&t, SigmaRule::Sigma3), Ok(true));

    let inf = infer(&t, InferMode::Open, 100).expect("the instance normalizes openly");
    let phi0 = inf.derivation;
    check_derivation(&phi0).unwrap();

    // The multiplicative step fires inside the argument.
    let step = &inf.trace.steps[0];
    assert_eq!(step.kind, StepKind::Mult);
    let phi1 = subject_reduce(&phi0, &step.path, step.kind, &step.term).unwrap();
    check_derivation(&phi1).unwrap();

    // Reposition the created es across the application.
    let mid = parse("(w w')[x<-z y]").unwrap();
    let phi2 = subject_equiv(&phi1, &mid).unwrap();
    check_derivation(&phi2).unwrap();

    // Expand along the reduct's root multiplicative step.
    let phi3 = subject_expand(&phi2, &t_reduct, &[], StepKind::Mult).unwrap();
    check_derivation(&phi3).unwrap();
    assert_eq!(phi3.judgment.subject, t_reduct);
    assert_eq!(phi3.judgment.ctx, phi0.judgment.ctx);
    assert_eq!(phi3.judgment.ty, phi0.judgment.ty);

    // The reduct is also directly inferable with the same law.
    let inf2 = infer(&t_reduct, InferMode::Open, 100).unwrap();
    assert_eq!(
        2 * inf2.trace.counts.mult + open_size(inf2.trace.final_term()),
        inf2.derivation.msize()
    );
    println!("acceptance 12 sigma3 regression: PASS (judgment preserved across m and the axiom)");
}
