//! Fuel- and cycle-backed semi-deciders for scrutability and solvability,
//! witness-context constructions, and witness verification.
//!
//! A term is scrutable when some testing context sends it to a value, which
//! holds exactly when its open reduction terminates; it is solvable when
//! some head context sends it to the identity, which holds exactly when its
//! solving reduction terminates. Both deciders run the corresponding
//! reduction with cycle detection, turning divergence into a definite
//! negative answer whenever the reduction loops.

use thiserror::Error;

use crate::classify::classify;
use crate::rewriting::{reduce, Strategy, Trace, TraceStatus};
use crate::syntax::{alpha_eq, fresh_name, identity, Context, ContextKind, Term};

/// Three-valued outcome of a termination-backed decision procedure. A
/// negative answer always carries a concrete refutation trace: for the
/// deciders a cycle, for witness checking a cycle or a normal form that
/// misses the target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes(Trace),
    No(Trace),
    Unknown(usize),
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::Yes(_))
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Verdict::No(_))
    }

    pub fn is_definite(&self) -> bool {
        !matches!(self, Verdict::Unknown(_))
    }

    pub fn json_name(&self) -> &'static str {
        match self {
            Verdict::Yes(_) => "yes",
            Verdict::No(_) => "no",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolvabilityError {
    #[error("context is not a head context")]
    NotHeadContext,
    #[error("context is not a testing context")]
    NotTestingContext,
}

fn verdict_of(trace: Trace, fuel: usize) -> Verdict {
    match trace.status {
        TraceStatus::NormalForm => Verdict::Yes(trace),
        TraceStatus::Cycle(_) => Verdict::No(trace),
        TraceStatus::FuelExhausted => Verdict::Unknown(fuel),
    }
}

/// Scrutability, decided by termination of the open reduction.
pub fn scrutable(t: &Term, fuel: usize) -> Verdict {
    verdict_of(reduce(t, Strategy::open(), fuel, true), fuel)
}

/// Solvability, decided by termination of the solving reduction.
pub fn solvable(t: &Term, fuel: usize) -> Verdict {
    verdict_of(reduce(t, Strategy::solving(), fuel, true), fuel)
}

/// From a head context realizing the identity definition of solvability,
/// build the contexts realizing the other definitions: `H_fe` sends the
/// plugged term to an arbitrary full normal form `u` (applying to `\x.u`
/// and then to the identity), and `H_in` sends it to an inert term
/// (applying to a fresh variable).
pub fn derive_witnesses(h: &Context, u: &Term) -> Result<(Context, Context), SolvabilityError> {
    if !h.matches(ContextKind::Head) {
        return Err(SolvabilityError::NotHeadContext);
    }
    let mut avoid = u.free_vars();
    avoid.extend(u.all_names());
    let x = fresh_name("x", &avoid);
    let lam_u = Term::Abs(x, Box::new(u.clone()));
    let h_fe = Context::AppL(
        Box::new(Context::AppL(Box::new(h.clone()), lam_u)),
        identity(),
    );
    let fresh_var = Term::Var(fresh_name("w", &avoid));
    let h_in = Context::AppL(Box::new(h.clone()), fresh_var);
    Ok((h_fe, h_in))
}

/// Targets for witness verification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WitnessTarget {
    /// The normal form is alpha-equal to the identity.
    Identity,
    /// The normal form is an inert term.
    Inert,
    /// The normal form is a value.
    Value,
    /// The normal form is alpha-equal to the given term.
    Given(Term),
}

/// Plug `t` into the candidate context, run the full reduction, and check
/// the target predicate on the normal form. Head contexts are required,
/// except for the value target which asks for a testing context.
pub fn verify_witness(
    h: &Context,
    t: &Term,
    target: &WitnessTarget,
    fuel: usize,
) -> Result<Verdict, SolvabilityError> {
    match target {
        WitnessTarget::Value => {
            if !h.matches(ContextKind::Testing) {
                return Err(SolvabilityError::NotTestingContext);
            }
        }
        _ => {
            if !h.matches(ContextKind::Head) {
                return Err(SolvabilityError::NotHeadContext);
            }
        }
    }
    let plugged = h.plug(t);
    let trace = reduce(&plugged, Strategy::full(), fuel, true);
    match trace.status {
        TraceStatus::NormalForm => {
            let nf = trace.final_term();
            let hit = match target {
                WitnessTarget::Identity => alpha_eq(nf, &identity()),
                WitnessTarget::Inert => classify(nf).inert,
                WitnessTarget::Value => nf.is_value(),
                WitnessTarget::Given(u) => alpha_eq(nf, u),
            };
            Ok(if hit {
                Verdict::Yes(trace)
            } else {
                Verdict::No(trace)
            })
        }
        TraceStatus::Cycle(_) => Ok(Verdict::No(trace)),
        TraceStatus::FuelExhausted => Ok(Verdict::Unknown(fuel)),
    }
}
