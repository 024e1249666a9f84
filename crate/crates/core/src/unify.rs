//! Syntactic unification with occurs check, and one-sided matching.

use std::collections::BTreeMap;

use crate::subst::Subst;
use crate::term::{Term, Var};

/// Most general unifier of `s` and `t`, or `None` if they do not unify.
///
/// When two variables meet, the right-hand one is bound to the left-hand
/// one, so unifying a goal against a clause head keeps the goal's variables.
pub fn unify(s: &Term, t: &Term) -> Option<Subst> {
    unify_with(s, t, |_| true)
}

pub fn unifiable(s: &Term, t: &Term) -> bool {
    unify(s, t).is_some()
}

/// Unification in which only variables accepted by `bindable` may be bound;
/// all other variables behave like constants.
pub fn unify_with(s: &Term, t: &Term, bindable: impl Fn(&Var) -> bool) -> Option<Subst> {
    let mut sigma = Subst::identity();
    if extend(&mut sigma, s, t, &bindable) {
        Some(sigma)
    } else {
        None
    }
}

/// Pairwise unification of two equally long sequences.
pub fn unify_all(ss: &[Term], ts: &[Term]) -> Option<Subst> {
    if ss.len() != ts.len() {
        return None;
    }
    let mut sigma = Subst::identity();
    for (s, t) in ss.iter().zip(ts) {
        if !extend(&mut sigma, s, t, &|_| true) {
            return None;
        }
    }
    Some(sigma)
}

/// Extends the solved form `sigma` by a unifier of `s sigma` and `t sigma`.
pub(crate) fn extend(
    sigma: &mut Subst,
    s: &Term,
    t: &Term,
    bindable: &impl Fn(&Var) -> bool,
) -> bool {
    let mut work = vec![(s.clone(), t.clone())];
    while let Some((a, b)) = work.pop() {
        let a = sigma.apply(&a);
        let b = sigma.apply(&b);
        if a == b {
            continue;
        }
        match (&a, &b) {
            (_, Term::Var(w)) if bindable(w) => {
                if a.contains_var(w) {
                    return false;
                }
                sigma.bind(w.clone(), a.clone());
            }
            (Term::Var(v), _) if bindable(v) => {
                if b.contains_var(v) {
                    return false;
                }
                sigma.bind(v.clone(), b.clone());
            }
            (Term::Compound(f), Term::Compound(g)) => {
                if f.functor() != g.functor() || f.arity() != g.arity() {
                    return false;
                }
                for (x, y) in f.args().iter().zip(g.args()).rev() {
                    work.push((x.clone(), y.clone()));
                }
            }
            _ => return false,
        }
    }
    true
}

/// A matcher `mu` with `pattern mu = target`, binding only pattern variables.
pub fn match_term(pattern: &Term, target: &Term) -> Option<Subst> {
    let mut map = BTreeMap::new();
    if match_into(&mut map, pattern, target) {
        Some(Subst::from_pairs(map))
    } else {
        None
    }
}

/// Extends a partial matcher; bindings are simultaneous, so pattern and
/// target may share variables.
pub fn match_into(map: &mut BTreeMap<Var, Term>, pattern: &Term, target: &Term) -> bool {
    match (pattern, target) {
        (Term::Var(v), _) => match map.get(v) {
            Some(bound) => bound == target,
            None => {
                map.insert(v.clone(), target.clone());
                true
            }
        },
        (Term::Compound(f), Term::Compound(g)) => {
            f.functor() == g.functor()
                && f.arity() == g.arity()
                && f.args().iter().zip(g.args()).all(|(p, t)| match_into(map, p, t))
        }
        (Term::Cut(m), Term::Cut(n)) => m == n,
        _ => false,
    }
}

/// True if `a` and `b` are equal up to an injective variable renaming.
pub fn is_variant(a: &Term, b: &Term) -> bool {
    is_variant_seq(std::slice::from_ref(a), std::slice::from_ref(b))
}

pub fn is_variant_seq(a: &[Term], b: &[Term]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = BTreeMap::new();
    let mut back = BTreeMap::new();
    a.iter().zip(b).all(|(x, y)| {
        match_into(&mut fwd, x, y) && match_into(&mut back, y, x)
    }) && fwd.values().all(Term::is_var)
}
