//! Recognizers for the normal-form grammars of the three reductions.
//!
//! ```text
//! inert           i  ::= x | i f | i[x<-i']
//! fireball        f  ::= v | i | f[x<-i]
//! full value      vf ::= x | \x.ff
//! full inert      if ::= x | if ff | if[x<-if']
//! full fireball   ff ::= vf | if | ff[x<-if]
//! solved fireball fs ::= i | \x.fs | fs[x<-i]
//! ```
//!
//! Variables are both values and inert terms, so the flags are reported as a
//! set rather than a single tag.

use crate::syntax::Term;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct NormalFormClass {
    pub value: bool,
    pub inert: bool,
    pub fireball: bool,
    pub full_inert: bool,
    pub full_fireball: bool,
    pub solved_fireball: bool,
}

struct Flags {
    value: bool,
    inert: bool,
    fireball: bool,
    full_inert: bool,
    full_fireball: bool,
    solved: bool,
}

fn flags(t: &Term) -> Flags {
    match t {
        Term::Var(_) => Flags {
            value: true,
            inert: true,
            fireball: true,
            full_inert: true,
            full_fireball: true,
            solved: true,
        },
        Term::Abs(_, b) => {
            let fb = flags(b);
            Flags {
                value: true,
                inert: false,
                fireball: true,
                full_inert: false,
                full_fireball: fb.full_fireball,
                solved: fb.solved,
            }
        }
        Term::App(f, a) => {
            let ff = flags(f);
            let fa = flags(a);
            let inert = ff.inert && fa.fireball;
            let full_inert = ff.full_inert && fa.full_fireball;
            Flags {
                value: false,
                inert,
                fireball: inert,
                full_inert,
                full_fireball: full_inert,
                solved: inert,
            }
        }
        Term::Es(b, _, d) => {
            let fb = flags(b);
            let fd = flags(d);
            Flags {
                value: false,
                inert: fb.inert && fd.inert,
                fireball: fb.fireball && fd.inert,
                full_inert: fb.full_inert && fd.full_inert,
                full_fireball: fb.full_fireball && fd.full_inert,
                solved: fb.solved && fd.inert,
            }
        }
    }
}

/// Decide every normal-form grammar by one structural recursion.
pub fn classify(t: &Term) -> NormalFormClass {
    let f = flags(t);
    NormalFormClass {
        value: f.value,
        inert: f.inert,
        fireball: f.fireball,
        full_inert: f.full_inert,
        full_fireball: f.full_fireball,
        solved_fireball: f.solved,
    }
}
