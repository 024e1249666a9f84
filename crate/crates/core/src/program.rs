//! Clauses and programs.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::{fmt_goal, Term};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("clause head must be a compound term, found `{0}`")]
    BadHead(String),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    head: Term,
    body: Vec<Term>,
    index: usize,
}

impl Clause {
    pub fn new(head: Term, body: Vec<Term>, index: usize) -> Result<Clause, ProgramError> {
        if head.as_compound().is_none() {
            return Err(ProgramError::BadHead(head.to_string()));
        }
        Ok(Clause { head, body, index })
    }

    pub fn head(&self) -> &Term {
        &self.head
    }

    pub fn body(&self) -> &[Term] {
        &self.body
    }

    /// 1-based position in the program.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn has_cut(&self) -> bool {
        self.body.iter().any(Term::is_cut)
    }

    pub fn predicate(&self) -> (&str, usize) {
        self.head.predicate().expect("head is compound")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            fmt_goal(f, &self.body)?;
        }
        write!(f, ".")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Program {
    clauses: Vec<Clause>,
}

impl Program {
    /// Renumbers the clauses 1..n in the given order.
    pub fn new(clauses: impl IntoIterator<Item = (Term, Vec<Term>)>) -> Result<Program, ProgramError> {
        let clauses = clauses
            .into_iter()
            .enumerate()
            .map(|(i, (h, b))| Clause::new(h, b, i + 1))
            .collect::<Result<_, _>>()?;
        Ok(Program { clauses })
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Clause with the given 1-based index.
    pub fn clause(&self, index: usize) -> Option<&Clause> {
        index.checked_sub(1).and_then(|i| self.clauses.get(i))
    }

    /// Clauses for the predicate of `t`, in program order.
    pub fn slice(&self, t: &Term) -> Vec<&Clause> {
        match t.predicate() {
            Some(p) => self.clauses.iter().filter(|c| c.predicate() == p).collect(),
            None => Vec::new(),
        }
    }

    pub fn predicates(&self) -> BTreeSet<(String, usize)> {
        self.clauses.iter().map(|c| (c.predicate().0.to_string(), c.predicate().1)).collect()
    }

    /// Every functor occurring in the program, including predicate symbols.
    pub fn functors(&self) -> BTreeSet<(String, usize)> {
        fn walk(t: &Term, out: &mut BTreeSet<(String, usize)>) {
            if let Term::Compound(c) = t {
                out.insert((c.functor().to_string(), c.arity()));
                c.args().iter().for_each(|a| walk(a, out));
            }
        }
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            walk(&c.head, &mut out);
            c.body.iter().for_each(|t| walk(t, &mut out));
        }
        out
    }

    /// Function symbols occurring in argument positions.
    pub fn term_functors(&self) -> BTreeSet<(String, usize)> {
        fn walk(t: &Term, out: &mut BTreeSet<(String, usize)>) {
            if let Term::Compound(c) = t {
                out.insert((c.functor().to_string(), c.arity()));
                c.args().iter().for_each(|a| walk(a, out));
            }
        }
        let mut out = BTreeSet::new();
        let mut atom = |t: &Term| {
            if let Term::Compound(c) = t {
                c.args().iter().for_each(|a| walk(a, &mut out));
            }
        };
        for c in &self.clauses {
            atom(&c.head);
            c.body.iter().for_each(&mut atom);
        }
        out
    }
}

/// Replaces every unlabeled top-level cut of `body` by `!_m`.
pub fn relabel_cuts(body: &[Term], mark: u32) -> Vec<Term> {
    body.iter()
        .map(|t| match t {
            Term::Cut(None) => Term::labeled_cut(mark),
            other => other.clone(),
        })
        .collect()
}
