//! Backtracking sequences of goals, labeled goals and scope markers.

use std::collections::BTreeSet;
use std::fmt;

use crate::parser::{parse_abstract_goal, parse_goal, ParseError};
use crate::subst::Subst;
use crate::term::{fmt_goal, vars_of, Term, Var};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Goal(Vec<Term>),
    /// `(t, q)^i_m`: the goal is to be resolved with clause `i`; cuts in the
    /// clause body will get mark `m`.
    Labeled { goal: Vec<Term>, clause: usize, mark: u32 },
    Marker(u32),
}

impl Element {
    pub fn terms(&self) -> &[Term] {
        match self {
            Element::Goal(g) | Element::Labeled { goal: g, .. } => g,
            Element::Marker(_) => &[],
        }
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Element {
        match self {
            Element::Goal(g) => Element::Goal(g.iter().map(f).collect()),
            Element::Labeled { goal, clause, mark } => Element::Labeled {
                goal: goal.iter().map(f).collect(),
                clause: *clause,
                mark: *mark,
            },
            Element::Marker(m) => Element::Marker(*m),
        }
    }

    pub fn apply(&self, s: &Subst) -> Element {
        self.map_terms(|t| s.apply(t))
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Goal(g) => fmt_goal(f, g),
            Element::Labeled { goal, clause, mark } => {
                if goal.len() == 1 {
                    write!(f, "{}", goal[0])?;
                } else {
                    write!(f, "(")?;
                    fmt_goal(f, goal)?;
                    write!(f, ")")?;
                }
                write!(f, "^{clause}_{mark}")
            }
            Element::Marker(m) => write!(f, "?_{m}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    elements: Vec<Element>,
}

impl State {
    pub fn new(elements: Vec<Element>) -> State {
        State { elements }
    }

    pub fn empty() -> State {
        State::default()
    }

    pub fn goal(goal: Vec<Term>) -> State {
        State { elements: vec![Element::Goal(goal)] }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<Element> {
        self.elements
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn first(&self) -> Option<&Element> {
        self.elements.first()
    }

    pub fn rest(&self) -> &[Element] {
        self.elements.get(1..).unwrap_or(&[])
    }

    pub fn apply(&self, s: &Subst) -> State {
        State { elements: self.elements.iter().map(|e| e.apply(s)).collect() }
    }

    /// Variables in left-to-right order of first occurrence.
    pub fn vars(&self) -> Vec<Var> {
        vars_of(self.elements.iter().flat_map(|e| e.terms()))
    }

    pub fn var_set(&self) -> BTreeSet<Var> {
        self.vars().into_iter().collect()
    }

    /// Marks of all `?_m` in the state.
    pub fn markers(&self) -> BTreeSet<u32> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Marker(m) => Some(*m),
                _ => None,
            })
            .collect()
    }

    /// Every mark occurring anywhere: labels, cuts and markers.
    pub fn all_marks(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        for e in &self.elements {
            match e {
                Element::Marker(m) => {
                    out.insert(*m);
                }
                Element::Labeled { mark, .. } => {
                    out.insert(*mark);
                }
                Element::Goal(_) => {}
            }
            for t in e.terms() {
                if let Term::Cut(Some(m)) = t {
                    out.insert(*m);
                }
            }
        }
        out
    }

    /// Reads a state written as in [`fmt::Display`], e.g.
    /// `p(T1)^1_1 | p(T1)^2_1 | ?_1`. `T<n>` are abstract variables.
    pub fn parse_abstract(src: &str) -> Result<State, ParseError> {
        State::parse_with(src, parse_abstract_goal)
    }

    /// Like [`State::parse_abstract`] but every variable is concrete.
    pub fn parse(src: &str) -> Result<State, ParseError> {
        State::parse_with(src, |s| {
            if s.contains("!_") {
                parse_abstract_goal(s)
            } else {
                parse_goal(s)
            }
        })
    }

    fn parse_with(
        src: &str,
        goal: impl Fn(&str) -> Result<Vec<Term>, ParseError>,
    ) -> Result<State, ParseError> {
        let src = src.trim();
        if src == "ε" || src.is_empty() {
            return Ok(State::empty());
        }
        let mut elements = Vec::new();
        for part in src.split('|').map(str::trim) {
            if let Some(m) = part.strip_prefix("?_").and_then(|d| d.parse().ok()) {
                elements.push(Element::Marker(m));
                continue;
            }
            if part == "□" {
                elements.push(Element::Goal(Vec::new()));
                continue;
            }
            if let Some((body, label)) = part.rsplit_once('^') {
                if let Some((i, m)) = label.split_once('_') {
                    if let (Ok(clause), Ok(mark)) = (i.parse(), m.parse()) {
                        let body = body
                            .strip_prefix('(')
                            .and_then(|b| b.strip_suffix(')'))
                            .filter(|b| b.contains(','))
                            .unwrap_or(body);
                        elements.push(Element::Labeled { goal: goal(body)?, clause, mark });
                        continue;
                    }
                }
            }
            elements.push(Element::Goal(goal(part)?));
        }
        Ok(State { elements })
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elements.is_empty() {
            return write!(f, "ε");
        }
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn print_and_parse() {
        for s in [
            "failure(a)^4_2 | ?_2 | ?_1",
            "!_1, failure(a) | div(0, 0, Z)^2_1 | div(0, 0, Z)^3_1 | ?_1",
            "(sub(T5, T6, T8), div(T8, T6, T7))^9_1 | ?_1",
            "□ | p",
            "ε",
        ] {
            assert_eq!(State::parse_abstract(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn marks() {
        let s = State::parse_abstract("!_2 | !_1 | ?_2 | p").unwrap();
        assert_eq!(s.markers(), BTreeSet::from([2]));
        assert_eq!(s.all_marks(), BTreeSet::from([1, 2]));
    }
}
