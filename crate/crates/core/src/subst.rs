//! Substitutions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{Term, Var};

/// A finite map from variables to terms. Unifiers are produced in solved
/// form (no domain variable occurs in a range term); matchers and renamings
/// need not be.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subst {
    map: BTreeMap<Var, Term>,
}

impl Subst {
    pub fn identity() -> Subst {
        Subst::default()
    }

    /// Builds a simultaneous substitution. Trivial bindings `X/X` are dropped.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Term)>) -> Subst {
        let map: BTreeMap<Var, Term> =
            pairs.into_iter().filter(|(v, t)| !matches!(t, Term::Var(w) if w == v)).collect();
        Subst { map }
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    pub fn range_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for t in self.map.values() {
            t.visit_vars(&mut |v| {
                out.insert(v.clone());
            });
        }
        out
    }

    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        t.map_vars(&mut |v| self.map.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
    }

    pub fn apply_all(&self, ts: &[Term]) -> Vec<Term> {
        ts.iter().map(|t| self.apply(t)).collect()
    }

    pub fn apply_var(&self, v: &Var) -> Term {
        self.map.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone()))
    }

    /// `self` followed by `other`: `t.compose(self, other) = (t self) other`.
    pub fn compose(&self, other: &Subst) -> Subst {
        let mut map = BTreeMap::new();
        for (v, t) in &self.map {
            let t2 = other.apply(t);
            if !matches!(&t2, Term::Var(w) if w == v) {
                map.insert(v.clone(), t2);
            }
        }
        for (v, t) in &other.map {
            if !self.map.contains_key(v) {
                map.insert(v.clone(), t.clone());
            }
        }
        // Not idempotent when `other` maps into the domain of `self`; the
        // result is still the correct sequential composition.
        Subst { map }
    }

    /// Keeps only the bindings of variables in `keep`.
    pub fn restrict(&self, keep: &BTreeSet<Var>) -> Subst {
        Subst {
            map: self
                .map
                .iter()
                .filter(|(v, _)| keep.contains(*v))
                .map(|(v, t)| (v.clone(), t.clone()))
                .collect(),
        }
    }

    pub fn restrict_to(&self, keep: impl IntoIterator<Item = Var>) -> Subst {
        self.restrict(&keep.into_iter().collect())
    }

    /// Adds `v/t` to a solved form, applying the new binding to the existing
    /// range. The caller guarantees `v` is unbound and does not occur in `t`
    /// after `t` has been put through `self`.
    pub(crate) fn bind(&mut self, v: Var, t: Term) {
        let single = Subst { map: BTreeMap::from([(v.clone(), t.clone())]) };
        for rhs in self.map.values_mut() {
            if rhs.contains_var(&v) {
                *rhs = single.apply(rhs);
            }
        }
        self.map.insert(v, t);
    }

    pub fn is_idempotent(&self) -> bool {
        let dom: BTreeSet<&Var> = self.map.keys().collect();
        self.map.values().all(|t| {
            let mut ok = true;
            t.visit_vars(&mut |v| ok &= !dom.contains(v));
            ok
        })
    }

    /// True if the substitution maps its domain injectively onto variables.
    pub fn is_renaming(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.map.values().all(|t| match t {
            Term::Var(v) => seen.insert(v.clone()),
            _ => false,
        })
    }
}

impl FromIterator<(Var, Term)> for Subst {
    fn from_iter<I: IntoIterator<Item = (Var, Term)>>(iter: I) -> Self {
        Subst::from_pairs(iter)
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.map.is_empty() {
            return write!(f, "id");
        }
        write!(f, "{{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}/{t}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Var {
        Var::named("X")
    }
    fn y() -> Var {
        Var::named("Y")
    }
    fn zero() -> Term {
        Term::constant("0")
    }

    #[test]
    fn apply_and_identity() {
        let s = Subst::from_pairs([(x(), zero())]);
        let t = Term::app("s", vec![Term::Var(x())]);
        assert_eq!(s.apply(&t).to_string(), "s(0)");
        assert_eq!(Subst::identity().apply(&t), t);
        let s = Subst::from_pairs([(Var::abstract_var(1), Term::app("s", vec![Term::abstract_var(2)]))]);
        assert_eq!(s.apply(&Term::app("p", vec![Term::abstract_var(1)])).to_string(), "p(s(T2))");
    }

    #[test]
    fn compose_applies_left_then_right() {
        let t1 = Var::abstract_var(1);
        let t2 = Var::abstract_var(2);
        let a = Subst::from_pairs([(t1.clone(), Term::app("f", vec![Term::Var(t2.clone())]))]);
        let b = Subst::from_pairs([(t2, Term::constant("a"))]);
        let p = Term::app("p", vec![Term::Var(t1)]);
        assert_eq!(a.compose(&b).apply(&p).to_string(), "p(f(a))");
        assert_eq!(Subst::identity().compose(&a), a);
    }

    #[test]
    fn restrict_drops_bindings() {
        let s = Subst::from_pairs([(x(), zero()), (y(), Term::constant("1"))]);
        assert_eq!(s.restrict_to([x()]).to_string(), "{X/0}");
        assert!(s.restrict(&BTreeSet::new()).is_identity());
    }

    #[test]
    fn restrict_to_ground_part() {
        let t1 = Var::abstract_var(1);
        let s = Subst::from_pairs([
            (t1.clone(), Term::app("s", vec![Term::abstract_var(2)])),
            (x(), Term::abstract_var(2)),
        ]);
        assert_eq!(s.restrict_to([t1]).to_string(), "{T1/s(T2)}");
    }

    #[test]
    fn compose_cancels_cycle_back() {
        let a = Subst::from_pairs([(x(), Term::Var(y()))]);
        let b = Subst::from_pairs([(y(), Term::Var(x()))]);
        let c = a.compose(&b);
        assert!(c.is_idempotent());
        let t = Term::app("f", vec![Term::Var(x()), Term::Var(y())]);
        assert_eq!(c.apply(&t), b.apply(&a.apply(&t)));
    }
}
