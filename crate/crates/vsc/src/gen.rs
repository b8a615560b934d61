//! Exhaustive enumeration of small terms, used by the property and
//! acceptance suites. Terms are generated up to alpha-equivalence: binders
//! receive canonical names determined by their depth, and leaves range over
//! the bound names in scope plus a fixed set of free names.

use std::collections::HashMap;

use crate::syntax::Term;

/// All terms whose total node count (variables included) is at most
/// `max_nodes`, with free variables among `free_names`. The result contains
/// exactly one representative per alpha class.
pub fn enumerate_terms(max_nodes: usize, free_names: &[&str]) -> Vec<Term> {
    let mut cache: HashMap<(usize, usize), Vec<Term>> = HashMap::new();
    let mut out = Vec::new();
    for n in 1..=max_nodes {
        out.extend(exact(n, 0, free_names, &mut cache));
    }
    out
}

fn binder_name(depth: usize) -> String {
    format!("b{depth}")
}

fn exact(
    n: usize,
    depth: usize,
    free_names: &[&str],
    cache: &mut HashMap<(usize, usize), Vec<Term>>,
) -> Vec<Term> {
    if n == 0 {
        return Vec::new();
    }
    if let Some(hit) = cache.get(&(n, depth)) {
        return hit.clone();
    }
    let mut out = Vec::new();
    if n == 1 {
        for d in 0..depth {
            out.push(Term::Var(binder_name(d)));
        }
        for f in free_names {
            out.push(Term::Var(f.to_string()));
        }
    } else {
        // Abstraction.
        for body in exact(n - 1, depth + 1, free_names, cache) {
            out.push(Term::Abs(binder_name(depth), Box::new(body)));
        }
        // Application and explicit substitution.
        for left in 1..n - 1 {
            let right = n - 1 - left;
            for f in exact(left, depth, free_names, cache) {
                for a in exact(right, depth, free_names, cache) {
                    out.push(Term::App(Box::new(f.clone()), Box::new(a.clone())));
                }
            }
            for b in exact(left, depth + 1, free_names, cache) {
                for d in exact(right, depth, free_names, cache) {
                    out.push(Term::Es(
                        Box::new(b.clone()),
                        binder_name(depth),
                        Box::new(d.clone()),
                    ));
                }
            }
        }
    }
    cache.insert((n, depth), out.clone());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::alpha_canon;
    use std::collections::BTreeSet;

    #[test]
    fn enumeration_is_alpha_canonical_and_well_scoped() {
        let terms = enumerate_terms(5, &["a"]);
        let mut seen = BTreeSet::new();
        for t in &terms {
            assert!(t.node_count() <= 5);
            for v in t.free_vars() {
                assert_eq!(v, "a", "unexpected free variable {v} in {t}");
            }
            assert!(seen.insert(alpha_canon(t)), "duplicate alpha class: {t}");
        }
    }

    #[test]
    fn closed_terms_need_a_binder() {
        let closed = enumerate_terms(3, &[]);
        assert!(closed.iter().all(|t| t.free_vars().is_empty()));
        // \b0.b0 is the single closed 2-node term.
        assert_eq!(
            closed.iter().filter(|t| t.node_count() == 2).count(),
            1
        );
    }

    #[test]
    fn counts_grow() {
        let small = enumerate_terms(4, &["a"]).len();
        let bigger = enumerate_terms(6, &["a"]).len();
        assert!(small > 10);
        assert!(bigger > small * 4);
    }
}
