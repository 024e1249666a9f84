//! Termination graphs: construction, validation and rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::abstract_machine::{
    active_cuts, active_marks, applicable_backtrack, instance_matcher, normalize, AbstractMachine,
    AbstractRule, AbstractState, KnowledgeBase, RuleChoice,
};
use crate::parser::QuerySpec;
use crate::program::Program;
use crate::state::{Element, State};
use crate::subst::Subst;
use crate::term::{Term, Var};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum InstanceScope {
    /// Only nodes on the path from the root.
    #[default]
    Ancestors,
    /// Ancestors and every node already expanded by a non-Instance rule.
    AllNodes,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitPolicy {
    /// Split single-element goals with at least two atoms.
    #[default]
    Eager,
    Never,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildConfig {
    pub max_nodes: usize,
    /// Smallest backtracking sequence considered for Parallel.
    pub parallel_threshold: usize,
    pub split_policy: SplitPolicy,
    pub instance_scope: InstanceScope,
}

impl Default for BuildConfig {
    fn default() -> BuildConfig {
        BuildConfig {
            max_nodes: 10_000,
            parallel_threshold: 2,
            split_policy: SplitPolicy::Eager,
            instance_scope: InstanceScope::Ancestors,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BuildError {
    #[error("no finite termination graph within {0} nodes")]
    BudgetExhausted(usize),
    #[error("max_nodes must be positive")]
    ZeroBudget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: usize,
    pub label: String,
    pub state: AbstractState,
    /// Tree parent; `None` for the root.
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub rule: AbstractRule,
    pub subst: Option<Subst>,
    /// 1-based child position.
    pub position: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminationGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub root: usize,
    pub proper: bool,
}

/// Labels in creation order: a, b, ..., z, aa, ab, ...
pub fn node_label(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// `p(T1, ..., Tm)` with the moded-ground arguments in `G`.
pub fn root_state(q: &QuerySpec) -> AbstractState {
    let args: Vec<Term> = (1..=q.arity() as u32).map(Term::abstract_var).collect();
    let ground = q.ground_positions().into_iter().map(|i| Var::abstract_var(i as u32));
    AbstractState::new(State::goal(vec![Term::app(&q.predicate, args)]), KnowledgeBase::new(ground))
}

fn recursive_predicates(program: &Program) -> BTreeSet<(String, usize)> {
    let mut calls: BTreeMap<(String, usize), BTreeSet<(String, usize)>> = BTreeMap::new();
    for c in program.clauses() {
        let (f, n) = c.predicate();
        let entry = calls.entry((f.to_string(), n)).or_default();
        for b in c.body() {
            if let Some((g, m)) = b.predicate() {
                entry.insert((g.to_string(), m));
            }
        }
    }
    let mut out = BTreeSet::new();
    for p in calls.keys() {
        let mut seen = BTreeSet::new();
        let mut todo: Vec<&(String, usize)> = calls[p].iter().collect();
        while let Some(q) = todo.pop() {
            if q == p {
                out.insert(p.clone());
                break;
            }
            if seen.insert(q) {
                todo.extend(calls.get(q).into_iter().flatten());
            }
        }
    }
    out
}

enum Decision {
    Leaf,
    Instance(usize, Subst),
    Rule(RuleChoice),
}

struct Builder<'p> {
    machine: AbstractMachine<'p>,
    cfg: BuildConfig,
    recursive: BTreeSet<(String, usize)>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    expanded: Vec<Option<AbstractRule>>,
}

impl Builder<'_> {
    fn add_node(&mut self, state: AbstractState, parent: Option<usize>) -> Result<usize, BuildError> {
        if self.nodes.len() >= self.cfg.max_nodes {
            return Err(BuildError::BudgetExhausted(self.cfg.max_nodes));
        }
        let id = self.nodes.len();
        self.machine.reserve(&state);
        self.nodes.push(Node { id, label: node_label(id), state, parent });
        self.expanded.push(None);
        Ok(id)
    }

    fn candidates(&self, id: usize) -> Vec<usize> {
        let mut anc = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            anc.push(p);
            cur = self.nodes[p].parent;
        }
        if self.cfg.instance_scope == InstanceScope::AllNodes {
            anc.extend((0..self.nodes.len()).filter(|&n| {
                n != id && matches!(self.expanded[n], Some(r) if r != AbstractRule::Instance)
            }));
        }
        let mut anc: Vec<usize> = anc.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        anc.sort();
        anc
    }

    fn decide(&self, id: usize) -> Decision {
        let a = &self.nodes[id].state;
        let program = self.machine.program;
        if a.is_leaf() {
            return Decision::Leaf;
        }
        match a.state.first().expect("non-empty") {
            Element::Goal(g) if g.is_empty() => return Decision::Rule(RuleChoice::Suc),
            Element::Marker(_) => return Decision::Rule(RuleChoice::Fail),
            Element::Goal(g) if g[0].is_cut() => return Decision::Rule(RuleChoice::Cut),
            Element::Labeled { .. } if applicable_backtrack(a, program) => {
                return Decision::Rule(RuleChoice::Backtrack)
            }
            _ => {}
        }
        for c in self.candidates(id) {
            if let Some(mu) = instance_matcher(a, &self.nodes[c].state) {
                return Decision::Instance(c, mu);
            }
        }
        let elems = a.state.elements();
        let split_ok = self.cfg.split_policy == SplitPolicy::Eager;
        if let Element::Goal(g) = &elems[0] {
            if split_ok && g.len() >= 2 {
                if elems.len() == 1 {
                    return Decision::Rule(RuleChoice::Split);
                }
                if let Some(k) = (1..elems.len()).find(|&k| {
                    active_cuts(&elems[..k], program).is_disjoint(&active_marks(&elems[k..]))
                }) {
                    return Decision::Rule(RuleChoice::Parallel(k));
                }
            }
            return Decision::Rule(RuleChoice::Case);
        }
        if let Some(k) = self.parallel_point(elems) {
            return Decision::Rule(RuleChoice::Parallel(k));
        }
        Decision::Rule(RuleChoice::Eval)
    }

    /// Shortest prefix that keeps each of its active cuts' markers inside
    /// itself, for sequences headed by a recursive predicate.
    fn parallel_point(&self, elems: &[Element]) -> Option<usize> {
        if elems.len() < self.cfg.parallel_threshold.max(2) {
            return None;
        }
        let Element::Labeled { goal, .. } = &elems[0] else { return None };
        let (f, n) = goal[0].predicate()?;
        if !self.recursive.contains(&(f.to_string(), n)) {
            return None;
        }
        let program = self.machine.program;
        (1..elems.len()).find(|&k| {
            let cuts = active_cuts(&elems[..k], program);
            let lossless = cuts.iter().all(|m| elems[..k].contains(&Element::Marker(*m)));
            lossless && cuts.is_disjoint(&active_marks(&elems[k..]))
        })
    }
}

/// Builds a termination graph for the moded query `q`.
pub fn build(program: &Program, q: &QuerySpec, cfg: &BuildConfig) -> Result<TerminationGraph, BuildError> {
    build_from(program, root_state(q), cfg)
}

/// Builds a termination graph whose root is the given abstract state.
pub fn build_from(
    program: &Program,
    root: AbstractState,
    cfg: &BuildConfig,
) -> Result<TerminationGraph, BuildError> {
    if cfg.max_nodes == 0 {
        return Err(BuildError::ZeroBudget);
    }
    let mut b = Builder {
        machine: AbstractMachine::new(program),
        cfg: cfg.clone(),
        recursive: recursive_predicates(program),
        nodes: Vec::new(),
        edges: Vec::new(),
        expanded: Vec::new(),
    };
    let root = b.add_node(normalize(&root), None)?;
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        match b.decide(id) {
            Decision::Leaf => {}
            Decision::Instance(target, mu) => {
                b.expanded[id] = Some(AbstractRule::Instance);
                b.edges.push(Edge { from: id, to: target, rule: AbstractRule::Instance, subst: Some(mu), position: 1 });
            }
            Decision::Rule(choice) => {
                let state = b.nodes[id].state.clone();
                let children = b.machine.apply(&state, choice).expect("chosen rule applies");
                let rule = rule_of(choice);
                b.expanded[id] = Some(rule);
                let mut ids = Vec::new();
                for (i, child) in children.into_iter().enumerate() {
                    let cid = b.add_node(child.state, Some(id))?;
                    b.edges.push(Edge { from: id, to: cid, rule, subst: child.subst, position: i + 1 });
                    ids.push(cid);
                }
                stack.extend(ids.into_iter().rev());
            }
        }
    }
    let mut g = TerminationGraph { nodes: b.nodes, edges: b.edges, root, proper: true };
    g.proper = g.variable_leaves().is_empty();
    Ok(g)
}

pub fn rule_of(choice: RuleChoice) -> AbstractRule {
    match choice {
        RuleChoice::Suc => AbstractRule::Suc,
        RuleChoice::Fail => AbstractRule::Fail,
        RuleChoice::Cut => AbstractRule::Cut,
        RuleChoice::Case => AbstractRule::Case,
        RuleChoice::Eval => AbstractRule::Eval,
        RuleChoice::Backtrack => AbstractRule::Backtrack,
        RuleChoice::Parallel(_) => AbstractRule::Parallel,
        RuleChoice::Split => AbstractRule::Split,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("node {node}: cycle of Instance edges")]
    InstanceOnlyCycle { node: usize },
    #[error("node {node}: leaf where a rule still applies")]
    NotFullyExpanded { node: usize },
    #[error("node {node}: {rule} has {found} children, expected {expected}")]
    WrongChildCount { node: usize, rule: AbstractRule, found: usize, expected: usize },
    #[error("node {node}: expanded by more than one rule")]
    MixedRules { node: usize },
    #[error("node {node}: not an instance of node {target}")]
    InvalidInstance { node: usize, target: usize },
    #[error("node {node}: Backtrack without a failing clause head")]
    InvalidBacktrack { node: usize },
    #[error("edge {from} -> {to}: node does not exist")]
    DanglingEdge { from: usize, to: usize },
}

impl TerminationGraph {
    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn out_edges(&self, id: usize) -> Vec<&Edge> {
        let mut v: Vec<&Edge> = self.edges.iter().filter(|e| e.from == id).collect();
        v.sort_by_key(|e| e.position);
        v
    }

    /// The rule a node was expanded with, if any.
    pub fn rule_at(&self, id: usize) -> Option<AbstractRule> {
        self.edges.iter().find(|e| e.from == id).map(|e| e.rule)
    }

    /// `Succ(i, n)`.
    pub fn succ(&self, id: usize, i: usize) -> Option<usize> {
        self.edges.iter().find(|e| e.from == id && e.position == i).map(|e| e.to)
    }

    pub fn nodes_with(&self, rule: AbstractRule) -> Vec<usize> {
        self.nodes.iter().map(|n| n.id).filter(|&n| self.rule_at(n) == Some(rule)).collect()
    }

    pub fn instance_edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().filter(|e| e.rule == AbstractRule::Instance).map(|e| (e.from, e.to)).collect()
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.id).filter(|&n| self.rule_at(n).is_none()).collect()
    }

    /// Leaves whose first goal starts with a variable.
    pub fn variable_leaves(&self) -> Vec<usize> {
        self.leaves().into_iter().filter(|&n| self.nodes[n].state.is_variable_headed()).collect()
    }

    pub fn validate(&self, program: &Program) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.nodes.len();
        for e in &self.edges {
            if e.from >= n || e.to >= n {
                out.push(Violation::DanglingEdge { from: e.from, to: e.to });
            }
        }
        if !out.is_empty() {
            return out;
        }
        for node in &self.nodes {
            let edges = self.out_edges(node.id);
            let Some(first) = edges.first() else {
                if !node.state.is_leaf() {
                    out.push(Violation::NotFullyExpanded { node: node.id });
                }
                continue;
            };
            if edges.iter().any(|e| e.rule != first.rule) {
                out.push(Violation::MixedRules { node: node.id });
                continue;
            }
            let expected = match first.rule {
                AbstractRule::Eval | AbstractRule::Split | AbstractRule::Parallel => 2,
                _ => 1,
            };
            if edges.len() != expected {
                out.push(Violation::WrongChildCount {
                    node: node.id,
                    rule: first.rule,
                    found: edges.len(),
                    expected,
                });
            }
            if first.rule == AbstractRule::Instance
                && instance_matcher(&node.state, &self.nodes[first.to].state).is_none()
            {
                out.push(Violation::InvalidInstance { node: node.id, target: first.to });
            }
            if first.rule == AbstractRule::Backtrack && !applicable_backtrack(&node.state, program) {
                out.push(Violation::InvalidBacktrack { node: node.id });
            }
        }
        out.extend(self.instance_cycles().into_iter().map(|node| Violation::InstanceOnlyCycle { node }));
        out
    }

    /// Nodes lying on a cycle made only of Instance edges.
    fn instance_cycles(&self) -> Vec<usize> {
        let next: BTreeMap<usize, Vec<usize>> =
            self.instance_edges().into_iter().fold(BTreeMap::new(), |mut m, (a, b)| {
                m.entry(a).or_default().push(b);
                m
            });
        let mut out = Vec::new();
        for &start in next.keys() {
            let mut seen = BTreeSet::new();
            let mut todo = next[&start].clone();
            while let Some(x) = todo.pop() {
                if x == start {
                    out.push(start);
                    break;
                }
                if seen.insert(x) {
                    todo.extend(next.get(&x).into_iter().flatten());
                }
            }
        }
        out
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph termination {\n  node [shape=box];\n");
        for n in &self.nodes {
            let _ = writeln!(s, "  n{} [label=\"{}: {}\"];", n.id, n.label, escape(&n.state.to_string()));
        }
        for e in &self.edges {
            let mut label = e.rule.to_string();
            if let Some(sub) = &e.subst {
                if !sub.is_identity() {
                    let _ = write!(label, " {sub}");
                }
            }
            let style = if e.rule == AbstractRule::Instance { ", style=dashed" } else { "" };
            let _ = writeln!(s, "  n{} -> n{} [label=\"{}\"{}];", e.from, e.to, escape(&label), style);
        }
        s.push_str("}\n");
        s
    }

    pub fn dump(&self) -> GraphDump {
        GraphDump {
            root: self.root,
            proper: self.proper,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDump {
                    id: n.id,
                    label: n.label.clone(),
                    state: n.state.state.to_string(),
                    kb: n.state.kb.to_string(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDump {
                    from: e.from,
                    to: e.to,
                    rule: e.rule.to_string(),
                    position: e.position,
                    subst: e.subst.as_ref().map(Subst::to_string),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.dump()).expect("graph dump serializes") + "\n"
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Structural dump with a stable field order, used for golden files.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct GraphDump {
    pub root: usize,
    pub proper: bool,
    pub nodes: Vec<NodeDump>,
    pub edges: Vec<EdgeDump>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct NodeDump {
    pub id: usize,
    pub label: String,
    pub state: String,
    pub kb: String,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct EdgeDump {
    pub from: usize,
    pub to: usize,
    pub rule: String,
    pub position: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subst: Option<String>,
}
