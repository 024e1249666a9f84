//! Extraction of a cut-free definite program from a proper termination graph.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::abstract_machine::AbstractRule;
use crate::graph::TerminationGraph;
use crate::parser::{print_program, Mode, QuerySpec};
use crate::program::Program;
use crate::state::Element;
use crate::subst::Subst;
use crate::term::{Term, Var};
use crate::unify::is_variant_seq;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("graph is not proper: variable-headed leaves {0:?}")]
    NotProper(Vec<String>),
    #[error("root state `{0}` is not of the form p(T1, ..., Tm)")]
    NonCanonicalRoot(String),
}

/// Node ids `n1 ... nk` of a clause path.
pub type ClausePath = Vec<usize>;

fn is_start(g: &TerminationGraph, n: usize) -> bool {
    n == g.root || is_split_or_instance_successor(g, n)
}

/// `n` is `Succ(1, m)` for some Instance or Split node `m`.
fn is_split_or_instance_successor(g: &TerminationGraph, n: usize) -> bool {
    g.edges.iter().any(|e| {
        e.to == n && e.position == 1 && matches!(e.rule, AbstractRule::Instance | AbstractRule::Split)
    })
}

fn is_end(g: &TerminationGraph, n: usize) -> bool {
    matches!(g.rule_at(n), Some(AbstractRule::Suc | AbstractRule::Instance))
        || is_split_or_instance_successor(g, n)
}

/// All clause paths, ordered by start node and then depth-first.
pub fn clause_paths(g: &TerminationGraph) -> Vec<ClausePath> {
    let mut out = Vec::new();
    for start in g.nodes.iter().map(|n| n.id).filter(|&n| is_start(g, n)) {
        if g.rule_at(start) == Some(AbstractRule::Instance) {
            continue;
        }
        let mut stack = vec![vec![start]];
        while let Some(path) = stack.pop() {
            let last = *path.last().expect("non-empty");
            let mut next = Vec::new();
            for e in g.out_edges(last) {
                if e.rule == AbstractRule::Instance {
                    continue;
                }
                let mut p = path.clone();
                p.push(e.to);
                next.push(p);
            }
            for p in next.into_iter().rev() {
                let n = *p.last().expect("non-empty");
                let interior_ok =
                    g.rule_at(n) != Some(AbstractRule::Instance) && !is_split_or_instance_successor(g, n);
                if is_end(g, n) {
                    out.push(p.clone());
                }
                if interior_ok {
                    stack.push(p);
                }
            }
        }
    }
    // Depth-first order per start, with ends recorded on the way down.
    out.sort_by_key(|p| (p[0], p.clone()));
    out
}

fn first_atom(state: &crate::state::State) -> Option<(String, usize)> {
    state
        .elements()
        .iter()
        .flat_map(Element::terms)
        .find_map(|t| t.predicate().map(|(f, n)| (f.to_string(), n)))
}

/// `Ren(n)`; `None` stands for `□`.
pub fn ren(g: &TerminationGraph, n: usize) -> Option<Term> {
    match g.rule_at(n) {
        Some(AbstractRule::Suc) => None,
        Some(AbstractRule::Instance) => {
            let e = g.out_edges(n)[0];
            let mu = e.subst.clone().unwrap_or_default();
            ren(g, e.to).map(|t| mu.apply(&t))
        }
        _ => {
            let node = g.node(n);
            let base = first_atom(&node.state.state).map(|(f, _)| f).unwrap_or_else(|| "p".into());
            let args = node.state.state.vars().into_iter().map(Term::Var).collect();
            Some(Term::app(&format!("{base}_{}", node.label), args))
        }
    }
}

fn eval_mark(g: &TerminationGraph, n: usize) -> Option<u32> {
    match g.node(n).state.state.first() {
        Some(Element::Labeled { mark, .. }) => Some(*mark),
        _ => None,
    }
}

/// `σ_{π,∞}`: edge substitutions collected from the end of the path, where
/// an Eval edge contributes fully only if its mark is below every mark
/// collected so far and otherwise only on its ground variables.
pub fn path_subst(path: &[usize], g: &TerminationGraph) -> Subst {
    let mut d = u32::MAX;
    let mut pieces = Vec::new();
    for w in path.windows(2).rev() {
        let (from, to) = (w[0], w[1]);
        let Some(e) = g.out_edges(from).into_iter().find(|e| e.to == to) else { continue };
        let label = e.subst.clone().unwrap_or_default();
        match (e.rule, e.position) {
            (AbstractRule::Eval, 1) => {
                let m = eval_mark(g, from).expect("Eval expands a labeled goal");
                if d > m {
                    pieces.push(label);
                    d = m;
                } else {
                    pieces.push(label.restrict(&g.node(from).state.kb.ground));
                }
            }
            (AbstractRule::Split, 2) => pieces.push(label),
            _ => {}
        }
    }
    pieces.into_iter().rev().fold(Subst::identity(), |acc, s| acc.compose(&s))
}

/// `I_π`: one atom for each Split node the path leaves through its right
/// child.
pub fn intermediate_atoms(path: &[usize], g: &TerminationGraph) -> Vec<Term> {
    let mut out = Vec::new();
    for j in 0..path.len().saturating_sub(1) {
        let n = path[j];
        if g.rule_at(n) == Some(AbstractRule::Split) && g.succ(n, 2) == Some(path[j + 1]) {
            let left = g.succ(n, 1).expect("Split has a left child");
            let sigma = path_subst(&path[j..], g);
            if let Some(t) = ren(g, left) {
                out.push(sigma.apply(&t));
            }
        }
    }
    out
}

/// `Clause(π)` as head and body.
pub fn clause_of(path: &[usize], g: &TerminationGraph) -> (Term, Vec<Term>) {
    let sigma = path_subst(path, g);
    let head = sigma.apply(&ren(g, path[0]).expect("start nodes are not Suc nodes"));
    let mut body = intermediate_atoms(path, g);
    if let Some(t) = ren(g, *path.last().expect("non-empty")) {
        body.push(t);
    }
    (head, body)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthesizedProgram {
    pub program: Program,
    pub query: QuerySpec,
}

impl fmt::Display for SynthesizedProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "%query: {}", self.query)?;
        write!(f, "{}", print_program(&self.program))
    }
}

fn concrete(t: &Term) -> Term {
    t.map_vars(&mut |v| {
        if v.is_abstract() {
            Term::Var(Var::named(&v.to_string()))
        } else {
            Term::Var(v.clone())
        }
    })
}

/// `P_G` and `Q_G`. Clauses that are variants of an earlier one are dropped.
pub fn synthesize(g: &TerminationGraph) -> Result<SynthesizedProgram, SynthError> {
    let bad = g.variable_leaves();
    if !bad.is_empty() {
        return Err(SynthError::NotProper(bad.into_iter().map(|n| g.node(n).label.clone()).collect()));
    }
    let root = &g.node(g.root).state;
    let canonical = match root.state.elements() {
        [Element::Goal(goal)] if goal.len() == 1 => goal[0].as_compound().is_some_and(|c| {
            c.args().iter().enumerate().all(|(i, a)| *a == Term::abstract_var(i as u32 + 1))
        }),
        _ => false,
    };
    if !canonical {
        return Err(SynthError::NonCanonicalRoot(root.to_string()));
    }
    let head = ren(g, g.root).expect("root is not a Suc node");
    let (name, arity) = head.predicate().map(|(f, n)| (f.to_string(), n)).expect("atom");
    let moding = (1..=arity as u32)
        .map(|i| if root.kb.ground.contains(&Var::abstract_var(i)) { Mode::Ground } else { Mode::Any })
        .collect();

    let mut clauses: Vec<Vec<Term>> = Vec::new();
    for path in clause_paths(g) {
        let (h, body) = clause_of(&path, g);
        let mut c = vec![concrete(&h)];
        c.extend(body.iter().map(concrete));
        if !clauses.iter().any(|d| is_variant_seq(d, &c)) {
            clauses.push(c);
        }
    }
    let program = Program::new(clauses.into_iter().map(|mut c| {
        let h = c.remove(0);
        (h, c)
    }))
    .expect("heads are atoms");
    Ok(SynthesizedProgram { program, query: QuerySpec::new(&name, moding) })
}

/// Predicate symbols that occur in `p`.
pub fn predicate_names(p: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for c in p.clauses() {
        for t in std::iter::once(c.head()).chain(c.body()) {
            if let Some((f, _)) = t.predicate() {
                out.insert(f.to_string());
            }
        }
    }
    out
}
