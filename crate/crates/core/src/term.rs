//! First-order terms over concrete and abstract variables, with labeled cuts.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Which namespace a variable lives in. Concrete variables are ordinary
/// logic variables; abstract variables stand for arbitrary (possibly
/// constrained) terms in an abstract state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Concrete,
    Abstract,
}

/// A variable. Two variables are equal iff sort, name and generation index
/// all agree, so renaming apart only has to bump the index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    sort: Sort,
    name: Arc<str>,
    index: u32,
}

/// Index reserved for the variables of a knowledge-base pair once they are
/// renamed apart. Nothing else allocates it.
pub(crate) const PAIR_LOCAL_INDEX: u32 = u32::MAX;

impl Var {
    /// A source-level concrete variable such as `X`.
    pub fn named(name: &str) -> Var {
        Var { sort: Sort::Concrete, name: Arc::from(name), index: 0 }
    }

    /// The `generation`-th renamed copy of a concrete variable.
    pub fn renamed(base: &Var, generation: u32) -> Var {
        Var { sort: Sort::Concrete, name: base.name.clone(), index: generation }
    }

    /// The abstract variable `T<n>`.
    pub fn abstract_var(n: u32) -> Var {
        Var { sort: Sort::Abstract, name: Arc::from("T"), index: n }
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn is_abstract(&self) -> bool {
        self.sort == Sort::Abstract
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    pub(crate) fn is_pair_local(&self) -> bool {
        self.sort == Sort::Concrete && self.index == PAIR_LOCAL_INDEX
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.sort, self.index) {
            (Sort::Abstract, n) => write!(f, "T{n}"),
            (Sort::Concrete, 0) => write!(f, "{}", self.name),
            (Sort::Concrete, PAIR_LOCAL_INDEX) => write!(f, "{}", self.name),
            (Sort::Concrete, n) => write!(f, "{}_{n}", self.name),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TermError {
    #[error("cut may not occur as an argument of `{functor}`")]
    CutInArgument { functor: String },
}

/// A function application `f(t1, ..., tn)`; constants have no arguments.
/// Arguments never contain cuts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Compound {
    functor: Arc<str>,
    args: Vec<Term>,
}

impl Compound {
    pub fn functor(&self) -> &str {
        &self.functor
    }

    pub fn functor_arc(&self) -> &Arc<str> {
        &self.functor
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Compound(Compound),
    /// `!` before labeling, `!_m` afterwards.
    Cut(Option<u32>),
}

impl Term {
    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    /// Shorthand for a source-level concrete variable.
    pub fn named_var(name: &str) -> Term {
        Term::Var(Var::named(name))
    }

    pub fn abstract_var(n: u32) -> Term {
        Term::Var(Var::abstract_var(n))
    }

    pub fn constant(name: &str) -> Term {
        Term::Compound(Compound { functor: Arc::from(name), args: Vec::new() })
    }

    pub fn compound(functor: &str, args: Vec<Term>) -> Result<Term, TermError> {
        Term::compound_arc(Arc::from(functor), args)
    }

    pub fn compound_arc(functor: Arc<str>, args: Vec<Term>) -> Result<Term, TermError> {
        if args.iter().any(Term::contains_cut) {
            return Err(TermError::CutInArgument { functor: functor.to_string() });
        }
        Ok(Term::Compound(Compound { functor, args }))
    }

    /// Builds a compound whose arguments are known to be cut-free.
    ///
    /// Panics if an argument contains a cut.
    pub fn app(functor: &str, args: Vec<Term>) -> Term {
        Term::compound(functor, args).expect("cut-free arguments")
    }

    /// Rebuilds a compound with new arguments; callers guarantee they are cut-free.
    pub(crate) fn rebuild(functor: &Arc<str>, args: Vec<Term>) -> Term {
        debug_assert!(!args.iter().any(Term::contains_cut));
        Term::Compound(Compound { functor: functor.clone(), args })
    }

    pub fn cut() -> Term {
        Term::Cut(None)
    }

    pub fn labeled_cut(mark: u32) -> Term {
        Term::Cut(Some(mark))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_cut(&self) -> bool {
        matches!(self, Term::Cut(_))
    }

    pub fn as_compound(&self) -> Option<&Compound> {
        match self {
            Term::Compound(c) => Some(c),
            _ => None,
        }
    }

    /// Predicate indicator for compound terms.
    pub fn predicate(&self) -> Option<(&str, usize)> {
        self.as_compound().map(|c| (c.functor(), c.arity()))
    }

    fn contains_cut(&self) -> bool {
        match self {
            Term::Cut(_) => true,
            Term::Var(_) => false,
            Term::Compound(c) => c.args.iter().any(Term::contains_cut),
        }
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Compound(c) => c.args.iter().any(|a| a.contains_var(v)),
            Term::Cut(_) => false,
        }
    }

    /// Variables in left-to-right order of first occurrence.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(c) => c.args.iter().for_each(|a| a.collect_vars(out)),
            Term::Cut(_) => {}
        }
    }

    pub fn var_set(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut |v| {
            out.insert(v.clone());
        });
        out
    }

    pub fn visit_vars(&self, f: &mut impl FnMut(&Var)) {
        match self {
            Term::Var(v) => f(v),
            Term::Compound(c) => c.args.iter().for_each(|a| a.visit_vars(f)),
            Term::Cut(_) => {}
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Compound(c) => c.args.iter().all(Term::is_ground),
            Term::Cut(_) => true,
        }
    }

    /// Nesting depth; variables and constants have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Term::Compound(c) => 1 + c.args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 1,
        }
    }

    /// Renames every variable through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Term) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Compound(c) => {
                Term::rebuild(&c.functor, c.args.iter().map(|a| a.map_vars(f)).collect())
            }
            Term::Cut(m) => Term::Cut(*m),
        }
    }
}

/// Variables of a sequence of terms, in order of first occurrence.
pub fn vars_of<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Vec<Var> {
    let mut out = Vec::new();
    for t in terms {
        t.collect_vars(&mut out);
    }
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Cut(None) => write!(f, "!"),
            Term::Cut(Some(m)) => write!(f, "!_{m}"),
            Term::Compound(c) => {
                write!(f, "{}", c.functor)?;
                if !c.args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in c.args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

/// Writes `t1, t2, ...`, or `□` for the empty goal.
pub fn fmt_goal(f: &mut fmt::Formatter<'_>, goal: &[Term]) -> fmt::Result {
    if goal.is_empty() {
        return write!(f, "□");
    }
    for (i, t) in goal.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}
