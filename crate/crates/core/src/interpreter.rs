//! The concrete semantics: a deterministic machine over states with labeled
//! cuts and scope markers.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use crate::program::{relabel_cuts, Clause, Program};
use crate::state::{Element, State};
use crate::subst::Subst;
use crate::term::{Term, Var};
use crate::unify::{is_variant_seq, unify};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Suc,
    Fail,
    Cut,
    Case,
    Eval,
    Backtrack,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::Suc => "Suc",
            Rule::Fail => "Fail",
            Rule::Cut => "Cut",
            Rule::Case => "Case",
            Rule::Eval => "Eval",
            Rule::Backtrack => "Backtrack",
        };
        f.write_str(s)
    }
}

/// Fresh-name supply threaded through a derivation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Counters {
    /// Next mark handed out by Case.
    pub next_mark: u32,
    /// Generation index for the next renamed clause.
    pub next_var: u32,
}

impl Default for Counters {
    fn default() -> Self {
        Counters { next_mark: 1, next_var: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: Rule,
    pub state: State,
    /// The mgu of an Eval step, restricted to the selected atom's variables.
    pub subst: Option<Subst>,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.rule, self.state)
    }
}

/// The single goal `Q`, with its cuts labeled `!_1`.
pub fn initial_state(query: &[Term]) -> (State, Counters) {
    let has_cut = query.iter().any(Term::is_cut);
    let counters = Counters { next_mark: if has_cut { 2 } else { 1 }, next_var: 1 };
    (State::goal(relabel_cuts(query, 1)), counters)
}

/// One step from `state`. `None` means the state is ε or its first goal
/// starts with a variable.
pub fn step(state: &State, program: &Program, counters: &mut Counters) -> Option<Step> {
    if let Some(max) = state.all_marks().last() {
        counters.next_mark = counters.next_mark.max(max + 1);
    }
    let mut m = Machine::from_state(state, &[]);
    let (rule, subst) = m.step(program, counters, &mut |_| {})?;
    Some(Step { rule, state: m.state(), subst })
}

/// A finished or interrupted run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Derivation {
    /// Empty unless tracing was requested.
    pub steps: Vec<Step>,
    /// Answer substitutions restricted to the query variables, in order.
    pub answers: Vec<Subst>,
    /// Number of rule applications performed.
    pub length: usize,
}

impl Derivation {
    pub fn rules(&self) -> Vec<Rule> {
        self.steps.iter().map(|s| s.rule).collect()
    }
}

impl fmt::Display for Derivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunResult {
    Terminated(Derivation),
    BudgetExceeded(Derivation),
    StuckOnVariable { derivation: Derivation, state: State },
}

impl RunResult {
    pub fn derivation(&self) -> &Derivation {
        match self {
            RunResult::Terminated(d) | RunResult::BudgetExceeded(d) => d,
            RunResult::StuckOnVariable { derivation, .. } => derivation,
        }
    }

    pub fn terminated(&self) -> bool {
        matches!(self, RunResult::Terminated(_))
    }
}

/// Runs `query` for at most `budget` steps, recording the trace.
pub fn run(query: &[Term], program: &Program, budget: usize) -> RunResult {
    let (state, counters) = initial_state(query);
    run_state(&state, counters, &query_vars(query), program, budget, true)
}

/// Like [`run`] but keeps only answers and the step count.
pub fn run_quiet(query: &[Term], program: &Program, budget: usize) -> RunResult {
    let (state, counters) = initial_state(query);
    run_state(&state, counters, &query_vars(query), program, budget, false)
}

fn query_vars(query: &[Term]) -> Vec<Var> {
    crate::term::vars_of(query)
}

/// Runs an arbitrary state. Answers are restricted to `answer_vars`.
pub fn run_state(
    state: &State,
    mut counters: Counters,
    answer_vars: &[Var],
    program: &Program,
    budget: usize,
    trace: bool,
) -> RunResult {
    if let Some(max) = state.all_marks().last() {
        counters.next_mark = counters.next_mark.max(max + 1);
    }
    let mut m = Machine::from_state(state, answer_vars);
    let mut d = Derivation::default();
    while d.length < budget {
        let mut on_answer = |theta: &Subst| d.answers.push(theta.clone());
        match m.step(program, &mut counters, &mut on_answer) {
            Some((rule, subst)) => {
                d.length += 1;
                if trace {
                    d.steps.push(Step { rule, state: m.state(), subst });
                }
            }
            None if m.slots.is_empty() => return RunResult::Terminated(d),
            None => return RunResult::StuckOnVariable { state: m.state(), derivation: d },
        }
    }
    if m.slots.is_empty() {
        RunResult::Terminated(d)
    } else {
        RunResult::BudgetExceeded(d)
    }
}

/// Searches the first `budget` states reachable from `q` for one whose
/// first element, labels removed, is a variant of `target`. Returns the
/// substitution accumulated on the way, restricted to `V(q)`.
pub fn derives(q: &[Term], target: &[Term], program: &Program, budget: usize) -> Option<Subst> {
    let (state, mut counters) = initial_state(q);
    let mut m = Machine::from_state(&state, &query_vars(q));
    for _ in 0..=budget {
        if let Some(slot) = m.slots.front() {
            if matches!(slot.element, Element::Goal(_) | Element::Labeled { .. })
                && is_variant_seq(slot.element.terms(), target)
            {
                return Some(m.answer_of(&slot.answer));
            }
        }
        m.step(program, &mut counters, &mut |_| {})?;
    }
    None
}

#[derive(Clone, Debug)]
struct Slot {
    element: Element,
    /// Current instances of the answer variables.
    answer: Vec<Term>,
}

struct Machine {
    vars: Vec<Var>,
    slots: VecDeque<Slot>,
}

impl Machine {
    fn from_state(s: &State, vars: &[Var]) -> Machine {
        let start: Vec<Term> = vars.iter().cloned().map(Term::Var).collect();
        Machine {
            vars: vars.to_vec(),
            slots: s
                .elements()
                .iter()
                .map(|e| Slot { element: e.clone(), answer: start.clone() })
                .collect(),
        }
    }

    fn answer_of(&self, answer: &[Term]) -> Subst {
        Subst::from_pairs(self.vars.iter().cloned().zip(answer.iter().cloned()))
    }

    fn state(&self) -> State {
        State::new(self.slots.iter().map(|s| s.element.clone()).collect())
    }

    fn step(
        &mut self,
        program: &Program,
        counters: &mut Counters,
        on_answer: &mut impl FnMut(&Subst),
    ) -> Option<(Rule, Option<Subst>)> {
        let slot = self.slots.pop_front()?;
        let Slot { element, answer } = slot;
        match element {
            Element::Marker(_) => Some((Rule::Fail, None)),
            Element::Goal(g) if g.is_empty() => {
                on_answer(&self.answer_of(&answer));
                Some((Rule::Suc, None))
            }
            Element::Goal(mut g) => match g[0].clone() {
                Term::Var(_) => {
                    self.slots.push_front(Slot { element: Element::Goal(g), answer });
                    None
                }
                Term::Cut(mark) => {
                    g.remove(0);
                    let scope = mark.and_then(|m| {
                        self.slots.iter().position(|s| s.element == Element::Marker(m))
                    });
                    match scope {
                        Some(i) => {
                            self.slots.drain(..i);
                        }
                        None => self.slots.clear(),
                    }
                    self.slots.push_front(Slot { element: Element::Goal(g), answer });
                    Some((Rule::Cut, None))
                }
                t @ Term::Compound(_) => {
                    let mark = counters.next_mark;
                    counters.next_mark += 1;
                    self.slots.push_front(Slot {
                        element: Element::Marker(mark),
                        answer: Vec::new(),
                    });
                    for c in program.slice(&t).iter().rev() {
                        self.slots.push_front(Slot {
                            element: Element::Labeled { goal: g.clone(), clause: c.index(), mark },
                            answer: answer.clone(),
                        });
                    }
                    Some((Rule::Case, None))
                }
            },
            Element::Labeled { goal, clause, mark } => {
                let c = program.clause(clause).expect("label names a program clause");
                let (head, body) = rename_clause(c, counters.next_var);
                counters.next_var += 1;
                let t = &goal[0];
                match unify(t, &head) {
                    None => Some((Rule::Backtrack, None)),
                    Some(sigma) => {
                        let mut new_goal = sigma.apply_all(&relabel_cuts(&body, mark));
                        new_goal.extend(sigma.apply_all(&goal[1..]));
                        let label = sigma.restrict(&t.var_set());
                        self.slots.push_front(Slot {
                            element: Element::Goal(new_goal),
                            answer: sigma.apply_all(&answer),
                        });
                        Some((Rule::Eval, Some(label)))
                    }
                }
            }
        }
    }
}

/// Gives every variable of the clause the generation index `generation`.
pub fn rename_clause(c: &Clause, generation: u32) -> (Term, Vec<Term>) {
    let mut map: BTreeMap<Var, Term> = BTreeMap::new();
    let mut f = |v: &Var| {
        map.entry(v.clone())
            .or_insert_with(|| Term::Var(Var::renamed(v, generation)))
            .clone()
    };
    let head = c.head().map_vars(&mut f);
    let body = c.body().iter().map(|t| t.map_vars(&mut f)).collect();
    (head, body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_goal, parse_program};

    const DIV: &str = "div(X, 0, Z) :- !, failure(a).
div(0, Y, Z) :- !, eq(Z, 0).
div(X, Y, s(Z)) :- sub(X, Y, U), div(U, Y, Z).
failure(b).
eq(X, X).
sub(0, Y, 0).
sub(X, 0, X).
sub(s(X), s(Y), Z) :- sub(X, Y, Z).
";

    #[test]
    fn case_step() {
        let p = parse_program(DIV).unwrap();
        let (s, mut c) = initial_state(&parse_goal("div(0,0,Z)").unwrap());
        let st = step(&s, &p, &mut c).unwrap();
        assert_eq!(st.rule, Rule::Case);
        assert_eq!(st.state.to_string(), "div(0, 0, Z)^1_1 | div(0, 0, Z)^2_1 | div(0, 0, Z)^3_1 | ?_1");
    }

    #[test]
    fn cut_step_keeps_marker() {
        let p = parse_program(DIV).unwrap();
        let s = State::parse("!_1, failure(a) | div(0, 0, Z)^2_1 | div(0, 0, Z)^3_1 | ?_1").unwrap();
        let st = step(&s, &p, &mut Counters::default()).unwrap();
        assert_eq!(st.rule, Rule::Cut);
        assert_eq!(st.state.to_string(), "failure(a) | ?_1");
    }

    #[test]
    fn backtrack_step() {
        let p = parse_program(DIV).unwrap();
        let s = State::parse("failure(a)^4_2 | ?_2 | ?_1").unwrap();
        let st = step(&s, &p, &mut Counters::default()).unwrap();
        assert_eq!(st.rule, Rule::Backtrack);
        assert_eq!(st.state.to_string(), "?_2 | ?_1");
    }

    #[test]
    fn query_cut_is_labeled_one() {
        let (s, c) = initial_state(&[Term::cut()]);
        assert_eq!(s.to_string(), "!_1");
        assert_eq!(c.next_mark, 2);
        assert_eq!(initial_state(&[]).0.to_string(), "□");
    }

    #[test]
    fn eq_answer() {
        let p = parse_program(DIV).unwrap();
        let r = run(&parse_goal("eq(X, X)").unwrap(), &p, 10);
        assert!(r.terminated());
        assert_eq!(r.derivation().answers, vec![Subst::identity()]);
    }

    #[test]
    fn stuck_on_variable() {
        let p = parse_program("p(X) :- X.").unwrap();
        let r = run(&parse_goal("p(Y)").unwrap(), &p, 10);
        assert!(matches!(r, RunResult::StuckOnVariable { .. }));
    }

    #[test]
    fn budget_exceeded() {
        let p = parse_program("p :- p.").unwrap();
        assert!(matches!(run(&parse_goal("p").unwrap(), &p, 1), RunResult::BudgetExceeded(_)));
        assert!(run(&[], &p, 1).terminated());
    }
}
