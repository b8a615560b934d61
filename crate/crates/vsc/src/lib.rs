//! A workbench for the value substitution calculus: lambda terms with
//! explicit substitutions, reduction at a distance under open, solving and
//! full closures with per-kind step accounting, and a call-by-value multi
//! type engine that checks, transforms and infers derivations together with
//! the exact size laws relating derivations to reduction lengths and normal
//! form sizes.

pub mod classify;
pub mod derive;
pub mod gen;
pub mod multitypes;
pub mod rewriting;
pub mod solvability;
pub mod syntax;

pub use classify::{classify, NormalFormClass};
pub use multitypes::{
    check_derivation, derivation_flags, type_flags, Derivation, Judgment, JudgmentType,
    LinearType, MultiType, Rule, TypeContext, TypeFlags,
};
pub use rewriting::{
    reduce, step, struct_equiv, Closure, StepCounts, StepKind, Strategy, Trace, TraceStatus,
    TraceStep,
};
pub use solvability::{scrutable, solvable, Verdict};
pub use syntax::{
    alpha_canon, alpha_eq, es_expand, measure, meta_subst, parse, CanonicalTerm, Context,
    ContextKind, Name, ParseError, Term,
};
