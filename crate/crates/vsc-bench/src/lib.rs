//! Shared term families for the benchmarks.

use vsc::syntax::{abs, app, identity, var, Term};

/// `I (I (... (I y)))` with `n` applications: a linear chain of
/// multiplicative and exponential steps.
pub fn identity_chain(n: usize) -> Term {
    let mut t = var("y");
    for _ in 0..n {
        t = app(identity(), t);
    }
    t
}

/// Church numeral applied to the identity: `\f.\x.f (f ... (f x))` closed
/// by values, a heavier inference workload.
pub fn church_apply(n: usize) -> Term {
    let mut body = var("x");
    for _ in 0..n {
        body = app(var("f"), body);
    }
    let numeral = abs("f", abs("x", body));
    app(app(numeral, identity()), identity())
}

/// A chain of independent explicit substitutions around a head variable:
/// its structural-equivalence class grows with the reorderings.
pub fn es_chain(n: usize) -> Term {
    let mut t = var("h");
    for i in 0..n {
        t = vsc::syntax::es(t, &format!("q{i}"), app(var(&format!("u{i}")), var(&format!("w{i}"))));
    }
    t
}
