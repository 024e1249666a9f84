//! Abstract states with knowledge bases, and the abstract inference rules.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::groundness::{approx_gnd, GroundnessTable};
use crate::interpreter::rename_clause;
use crate::program::{relabel_cuts, Clause, Program};
use crate::state::{Element, State};
use crate::subst::Subst;
use crate::term::{vars_of, Term, Var, PAIR_LOCAL_INDEX};
use crate::unify::{match_into, unify, unify_with};

/// `G`: abstract variables that only stand for ground terms.
/// `U`: pairs that must stay non-unifiable. Concrete variables inside a pair
/// are local to that pair.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KnowledgeBase {
    pub ground: BTreeSet<Var>,
    pub nonunifiable: BTreeSet<(Term, Term)>,
}

impl KnowledgeBase {
    pub fn new(ground: impl IntoIterator<Item = Var>) -> KnowledgeBase {
        KnowledgeBase { ground: ground.into_iter().collect(), nonunifiable: BTreeSet::new() }
    }

    /// Abstract variables mentioned by `U`.
    pub fn pair_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for (s, t) in &self.nonunifiable {
            for v in s.var_set().into_iter().chain(t.var_set()) {
                if v.is_abstract() {
                    out.insert(v);
                }
            }
        }
        out
    }
}

impl fmt::Display for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g: Vec<String> = self.ground.iter().map(Var::to_string).collect();
        let u: Vec<String> = self.nonunifiable.iter().map(|(s, t)| format!("({s}, {t})")).collect();
        write!(f, "({{{}}}, {{{}}})", g.join(", "), u.join(", "))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AbstractState {
    pub state: State,
    pub kb: KnowledgeBase,
}

impl AbstractState {
    pub fn new(state: State, kb: KnowledgeBase) -> AbstractState {
        AbstractState { state, kb }
    }

    /// Abstract variables of the state and of `U`.
    pub fn abstract_vars(&self) -> BTreeSet<Var> {
        let mut out: BTreeSet<Var> = self.state.vars().into_iter().filter(Var::is_abstract).collect();
        out.extend(self.kb.pair_vars());
        out
    }

    /// `ε` or a first goal starting with a variable: no rule applies.
    pub fn is_leaf(&self) -> bool {
        match self.state.first() {
            None => true,
            Some(Element::Goal(g)) => g.first().is_some_and(Term::is_var),
            _ => false,
        }
    }

    pub fn is_variable_headed(&self) -> bool {
        matches!(self.state.first(), Some(Element::Goal(g)) if g.first().is_some_and(Term::is_var))
    }
}

impl fmt::Display for AbstractState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ; {}", self.state, self.kb)
    }
}

/// Renames the concrete variables of a pair apart from everything else.
pub(crate) fn localize(s: &Term, t: &Term) -> (Term, Term) {
    let mut f = |v: &Var| {
        if v.is_abstract() || v.is_pair_local() {
            Term::Var(v.clone())
        } else {
            Term::Var(Var::renamed(&Var::named(&v.to_string()), PAIR_LOCAL_INDEX))
        }
    };
    (s.map_vars(&mut f), t.map_vars(&mut f))
}

fn pair_may_unify(s: &Term, t: &Term) -> bool {
    let (s, t) = localize(s, t);
    unify(&s, &t).is_some()
}

/// Drops non-active markers at both ends, restricts `G` to the state's
/// variables, and drops pairs of `U` that can never unify or that share no
/// variable with the state.
pub fn normalize(a: &AbstractState) -> AbstractState {
    let mut elems = a.state.elements().to_vec();
    while matches!(elems.first(), Some(Element::Marker(_))) {
        elems.remove(0);
    }
    while matches!(elems.last(), Some(Element::Marker(_))) {
        elems.pop();
    }
    let state = State::new(elems);
    let vars = state.var_set();
    let ground = a.kb.ground.iter().filter(|v| vars.contains(*v)).cloned().collect();
    let nonunifiable = a
        .kb
        .nonunifiable
        .iter()
        .filter(|(s, t)| {
            let mut shares = false;
            s.visit_vars(&mut |v| shares |= vars.contains(v));
            t.visit_vars(&mut |v| shares |= vars.contains(v));
            shares && pair_may_unify(s, t)
        })
        .cloned()
        .collect();
    AbstractState { state, kb: KnowledgeBase { ground, nonunifiable } }
}

/// Marks `m` such that `!_m` occurs in `elems`, or a labeled goal with mark
/// `m` refers to a clause whose body has a cut.
pub fn active_cuts(elems: &[Element], program: &Program) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for e in elems {
        for t in e.terms() {
            if let Term::Cut(Some(m)) = t {
                out.insert(*m);
            }
        }
        if let Element::Labeled { clause, mark, .. } = e {
            if program.clause(*clause).is_some_and(Clause::has_cut) {
                out.insert(*mark);
            }
        }
    }
    out
}

/// Marks of `?_m` that are neither the first nor the last element.
pub fn active_marks(elems: &[Element]) -> BTreeSet<u32> {
    let n = elems.len();
    elems
        .iter()
        .enumerate()
        .filter(|(i, _)| *i > 0 && *i + 1 < n)
        .filter_map(|(_, e)| match e {
            Element::Marker(m) => Some(*m),
            _ => None,
        })
        .collect()
}

/// Sound approximation of "no concretization lets `t` unify with the head":
/// either `t` and the head do not unify, or their mgu turns some pair of `U`
/// unifiable by binding only the pair's own variables.
pub fn applicable_backtrack(a: &AbstractState, program: &Program) -> bool {
    let Some(Element::Labeled { goal, clause, .. }) = a.state.first() else { return false };
    let c = program.clause(*clause).expect("label names a program clause");
    let (head, _) = rename_clause(c, 0);
    let Some(sigma) = unify(&goal[0], &head) else { return true };
    a.kb.nonunifiable.iter().any(|(s, t)| {
        let (s, t) = localize(s, t);
        unify_with(&sigma.apply(&s), &sigma.apply(&t), Var::is_pair_local).is_some()
    })
}

/// The rules of the abstract machine, as recorded on graph edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AbstractRule {
    Suc,
    Fail,
    Cut,
    Case,
    Eval,
    Backtrack,
    Instance,
    Parallel,
    Split,
}

impl fmt::Display for AbstractRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AbstractRule::Suc => "Suc",
            AbstractRule::Fail => "Fail",
            AbstractRule::Cut => "Cut",
            AbstractRule::Case => "Case",
            AbstractRule::Eval => "Eval",
            AbstractRule::Backtrack => "Backtrack",
            AbstractRule::Instance => "Instance",
            AbstractRule::Parallel => "Parallel",
            AbstractRule::Split => "Split",
        };
        f.write_str(s)
    }
}

/// A rule together with its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleChoice {
    Suc,
    Fail,
    Cut,
    Case,
    Eval,
    Backtrack,
    /// Split the backtracking sequence after the first `k` elements.
    Parallel(usize),
    Split,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("{rule} is not applicable: {reason}")]
    NotApplicable { rule: AbstractRule, reason: String },
    #[error("Parallel at {split}: active cuts {cuts:?} meet active marks {marks:?}")]
    ActiveCutConflict { split: usize, cuts: BTreeSet<u32>, marks: BTreeSet<u32> },
}

fn not_applicable(rule: AbstractRule, reason: impl Into<String>) -> RuleError {
    RuleError::NotApplicable { rule, reason: reason.into() }
}

/// One child produced by a rule, with the edge substitution if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Child {
    pub state: AbstractState,
    pub subst: Option<Subst>,
}

impl Child {
    fn plain(state: AbstractState) -> Child {
        Child { state: normalize(&state), subst: None }
    }
}

/// Fresh-name supply and program context for abstract rule applications.
#[derive(Clone, Debug)]
pub struct AbstractMachine<'p> {
    pub program: &'p Program,
    pub table: GroundnessTable,
    next_var: u32,
    next_mark: u32,
    next_generation: u32,
}

impl<'p> AbstractMachine<'p> {
    pub fn new(program: &'p Program) -> AbstractMachine<'p> {
        AbstractMachine {
            program,
            table: crate::groundness::analyze(program),
            next_var: 1,
            next_mark: 1,
            next_generation: 1,
        }
    }

    /// Makes sure fresh names do not clash with anything in `a`.
    pub fn reserve(&mut self, a: &AbstractState) {
        for v in a.abstract_vars() {
            self.next_var = self.next_var.max(v.index() + 1);
        }
        if let Some(m) = a.state.all_marks().last() {
            self.next_mark = self.next_mark.max(m + 1);
        }
    }

    pub fn fresh_var(&mut self) -> Var {
        let v = Var::abstract_var(self.next_var);
        self.next_var += 1;
        v
    }

    pub fn apply(&mut self, a: &AbstractState, rule: RuleChoice) -> Result<Vec<Child>, RuleError> {
        match rule {
            RuleChoice::Suc => self.suc(a),
            RuleChoice::Fail => self.fail(a),
            RuleChoice::Cut => self.cut(a),
            RuleChoice::Case => self.case(a),
            RuleChoice::Backtrack => self.backtrack(a),
            RuleChoice::Eval => self.eval(a),
            RuleChoice::Parallel(k) => self.parallel(a, k),
            RuleChoice::Split => self.split(a),
        }
    }

    fn suc(&self, a: &AbstractState) -> Result<Vec<Child>, RuleError> {
        match a.state.first() {
            Some(Element::Goal(g)) if g.is_empty() => Ok(vec![Child::plain(AbstractState::new(
                State::new(a.state.rest().to_vec()),
                a.kb.clone(),
            ))]),
            _ => Err(not_applicable(AbstractRule::Suc, "first element is not □")),
        }
    }

    fn fail(&self, a: &AbstractState) -> Result<Vec<Child>, RuleError> {
        match a.state.first() {
            Some(Element::Marker(_)) => Ok(vec![Child::plain(AbstractState::new(
                State::new(a.state.rest().to_vec()),
                a.kb.clone(),
            ))]),
            _ => Err(not_applicable(AbstractRule::Fail, "first element is not a marker")),
        }
    }

    fn cut(&self, a: &AbstractState) -> Result<Vec<Child>, RuleError> {
        let Some(Element::Goal(g)) = a.state.first() else {
            return Err(not_applicable(AbstractRule::Cut, "first element is not a goal"));
        };
        let Some(Term::Cut(mark)) = g.first() else {
            return Err(not_applicable(AbstractRule::Cut, "goal does not start with a cut"));
        };
        let rest = a.state.rest();
        let mut elems = vec![Element::Goal(g[1..].to_vec())];
        if let Some(m) = mark {
            if let Some(i) = rest.iter().position(|e| *e == Element::Marker(*m)) {
                elems.extend(rest[i..].iter().cloned());
            }
        }
        Ok(vec![Child::plain(AbstractState::new(State::new(elems), a.kb.clone()))])
    }

    fn case(&mut self, a: &AbstractState) -> Result<Vec<Child>, RuleError> {
        let Some(Element::Goal(g)) = a.state.first() else {
            return Err(not_applicable(AbstractRule::Case, "first element is not a goal"));
        };
        let Some(t @ Term::Compound(_)) = g.first() else {
            return Err(not_applicable(AbstractRule::Case, "goal does not start with an atom"));
        };
        self.reserve(a);
        let mark = self.next_mark;
        self.next_mark += 1;
        let mut elems: Vec<Element> = self
            .program
            .slice(t)
            .iter()
            .map(|c| Element::Labeled { goal: g.clone(), clause: c.index(), mark })
            .collect();
        elems.push(Element::Marker(mark));
        elems.extend(a.state.rest().iter().cloned());
        Ok(vec![Child::plain(AbstractState::new(State::new(elems), a.kb.clone()))])
    }

    fn backtrack(&self, a: &AbstractState) -> Result<Vec<Child>, RuleError> {
        if !matches!(a.state.first(), Some(Element::Labeled { .. })) {
            return Err(not_applicable(AbstractRule::Backtrack, "first element is not labeled"));
        }
        if !applicable_backtrack(a, self.program) {
            return Err(not_applicable(
                AbstractRule::Backtrack,
                "some concretization may unify with the clause head",
            ));
        }
        Ok(vec![Child::plain(AbstractState::new(State::new(a.state.rest().to_vec()), a.kb.clone()))])
    }

    /// Two children: the clause applies (with its mgu renamed into fresh
    /// abstract variables) or it does not (remembered in `U`).
    fn eval(&mut self, a: &AbstractState) -> Result<Vec<Child>, RuleError> {
        let Some(Element::Labeled { goal, clause, mark }) = a.state.first() else {
            return Err(not_applicable(AbstractRule::Eval, "first element is not labeled"));
        };
        self.reserve(a);
        let c = self.program.clause(*clause).expect("label names a program clause");
        let (head, body) = rename_clause(c, self.next_generation);
        self.next_generation += 1;
        let t = &goal[0];
        let q = &goal[1..];
        let Some(sigma0) = unify(t, &head) else {
            return Err(not_applicable(AbstractRule::Eval, "atom does not unify with the clause head"));
        };
        let body = relabel_cuts(&body, *mark);
        let t0 = sigma0.apply(t);
        let q0 = sigma0.apply_all(q);
        let b0 = sigma0.apply_all(&body);
        let mut rho = Vec::new();
        for v in vars_of(std::iter::once(&t0).chain(&q0).chain(&b0)) {
            rho.push((v, Term::Var(self.fresh_var())));
        }
        let sigma = sigma0.compose(&Subst::from_pairs(rho));

        let ground_part = sigma.restrict(&a.kb.ground);
        let new_ground: BTreeSet<Var> = a
            .kb
            .ground
            .iter()
            .flat_map(|v| sigma.apply_var(v).var_set())
            .filter(Var::is_abstract)
            .collect();
        let mut new_goal = sigma.apply_all(&body);
        new_goal.extend(sigma.apply_all(q));
        let mut elems = vec![Element::Goal(new_goal)];
        elems.extend(a.state.rest().iter().map(|e| e.apply(&ground_part)));
        let nonunifiable = a
            .kb
            .nonunifiable
            .iter()
            .map(|(s, u)| (ground_part.apply(s), ground_part.apply(u)))
            .collect();
        let success = AbstractState::new(
            State::new(elems),
            KnowledgeBase { ground: new_ground, nonunifiable },
        );

        let mut failure_kb = a.kb.clone();
        failure_kb.nonunifiable.insert((t.clone(), c.head().clone()));
        let failure = AbstractState::new(State::new(a.state.rest().to_vec()), failure_kb);

        let mut keep = t.var_set();
        for x in q {
            keep.extend(x.var_set());
        }
        Ok(vec![
            Child { state: normalize(&success), subst: Some(sigma.restrict(&keep)) },
            Child::plain(failure),
        ])
    }

    fn parallel(&self, a: &AbstractState, k: usize) -> Result<Vec<Child>, RuleError> {
        let (left, right) = parallel_parts(a, k, self.program)?;
        Ok(vec![Child::plain(left), Child::plain(right)])
    }

    /// `t, Q` becomes `t` and `Q mu`, where `mu` renames every variable
    /// outside `G` and groundness of `t`'s answers is carried over.
    fn split(&mut self, a: &AbstractState) -> Result<Vec<Child>, RuleError> {
        let (t, q) = match a.state.elements() {
            [Element::Goal(g)] if g.len() >= 2 && matches!(g[0], Term::Compound(_)) => (&g[0], &g[1..]),
            _ => {
                return Err(not_applicable(
                    AbstractRule::Split,
                    "state is not a single goal with an atom and a continuation",
                ))
            }
        };
        self.reserve(a);
        let mut to_rename: Vec<Var> = a.state.var_set().into_iter().collect();
        to_rename.extend(a.kb.pair_vars().into_iter().filter(|v| !a.state.var_set().contains(v)));
        let mut pairs = Vec::new();
        for v in to_rename {
            if !a.kb.ground.contains(&v) {
                pairs.push((v, Term::Var(self.fresh_var())));
            }
        }
        let mu = Subst::from_pairs(pairs);
        let mut ground = a.kb.ground.clone();
        ground.extend(approx_gnd(t, &mu, &a.kb.ground, &self.table));
        let nonunifiable = a
            .kb
            .nonunifiable
            .iter()
            .map(|(s, u)| (mu.apply(s), mu.apply(u)))
            .collect();
        let left = AbstractState::new(State::goal(vec![t.clone()]), a.kb.clone());
        let right = AbstractState::new(
            State::goal(mu.apply_all(q)),
            KnowledgeBase { ground, nonunifiable },
        );
        let mut keep = t.var_set();
        for x in q {
            keep.extend(x.var_set());
        }
        Ok(vec![
            Child::plain(left),
            Child { state: normalize(&right), subst: Some(mu.restrict(&keep)) },
        ])
    }
}

/// The two halves of a Parallel split after `k` elements, or why the split
/// is unsound.
pub fn parallel_parts(
    a: &AbstractState,
    k: usize,
    program: &Program,
) -> Result<(AbstractState, AbstractState), RuleError> {
    let elems = a.state.elements();
    if k == 0 || k >= elems.len() {
        return Err(not_applicable(
            AbstractRule::Parallel,
            format!("split point {k} must lie strictly inside a sequence of {}", elems.len()),
        ));
    }
    let cuts = active_cuts(&elems[..k], program);
    let marks = active_marks(&elems[k..]);
    if !cuts.is_disjoint(&marks) {
        return Err(RuleError::ActiveCutConflict { split: k, cuts, marks });
    }
    Ok((
        AbstractState::new(State::new(elems[..k].to_vec()), a.kb.clone()),
        AbstractState::new(State::new(elems[k..].to_vec()), a.kb.clone()),
    ))
}

/// A matcher `mu` showing that `a` is an instance of `general`: the state of
/// `a` is the state of `general` under `mu`, `mu` renames concrete variables
/// injectively, ground variables stay ground and every pair of `general`'s
/// `U` maps to a pair of `a`'s `U` (up to the pairs' own variables).
pub fn instance_matcher(a: &AbstractState, general: &AbstractState) -> Option<Subst> {
    let (pe, te) = (general.state.elements(), a.state.elements());
    if pe.len() != te.len() {
        return None;
    }
    let mut map = BTreeMap::new();
    for (p, t) in pe.iter().zip(te) {
        let ok = match (p, t) {
            (Element::Marker(m), Element::Marker(n)) => m == n,
            (Element::Goal(g), Element::Goal(h)) => match_goal(&mut map, g, h),
            (
                Element::Labeled { goal: g, clause: i, mark: m },
                Element::Labeled { goal: h, clause: j, mark: n },
            ) => i == j && m == n && match_goal(&mut map, g, h),
            _ => false,
        };
        if !ok {
            return None;
        }
    }
    if !renames_concrete(&map) {
        return None;
    }
    let pairs: Vec<&(Term, Term)> = general.kb.nonunifiable.iter().collect();
    let map = match_pairs(map, &pairs, &a.kb.nonunifiable)?;
    let mu = Subst::from_pairs(map);
    let ground_ok = general
        .kb
        .ground
        .iter()
        .all(|v| mu.apply_var(v).var_set().is_subset(&a.kb.ground));
    ground_ok.then_some(mu)
}

fn match_goal(map: &mut BTreeMap<Var, Term>, g: &[Term], h: &[Term]) -> bool {
    g.len() == h.len() && g.iter().zip(h).all(|(p, t)| match_into(map, p, t))
}

fn renames_concrete(map: &BTreeMap<Var, Term>) -> bool {
    let mut seen = BTreeSet::new();
    map.iter().filter(|(v, _)| !v.is_abstract()).all(|(_, t)| match t {
        Term::Var(w) => !w.is_abstract() && seen.insert(w.clone()),
        _ => false,
    })
}

fn match_pairs(
    map: BTreeMap<Var, Term>,
    pairs: &[&(Term, Term)],
    target: &BTreeSet<(Term, Term)>,
) -> Option<BTreeMap<Var, Term>> {
    let Some(((s, u), rest)) = pairs.split_first() else { return Some(map) };
    let (s, u) = localize(s, u);
    for (ts, tu) in target {
        let (ts, tu) = localize(ts, tu);
        let mut m = map.clone();
        if !(match_into(&mut m, &s, &ts) && match_into(&mut m, &u, &tu)) {
            continue;
        }
        let locals: BTreeMap<Var, Term> =
            m.iter().filter(|(v, _)| v.is_pair_local()).map(|(v, t)| (v.clone(), t.clone())).collect();
        let mut seen = BTreeSet::new();
        let locals_ok = locals.values().all(|t| match t {
            Term::Var(w) => w.is_pair_local() && seen.insert(w.clone()),
            _ => false,
        });
        if !locals_ok {
            continue;
        }
        m.retain(|v, _| !v.is_pair_local());
        if let Some(done) = match_pairs(m, rest, target) {
            return Some(done);
        }
    }
    None
}

/// The first candidate that `a` is an instance of, with the matcher.
pub fn find_instance<'c>(
    a: &AbstractState,
    candidates: impl IntoIterator<Item = &'c AbstractState>,
) -> Option<(&'c AbstractState, Subst)> {
    candidates.into_iter().find_map(|c| instance_matcher(a, c).map(|mu| (c, mu)))
}

/// Checks the four conditions on a concretization of `a`.
pub fn is_concretization(gamma: &Subst, a: &AbstractState) -> bool {
    let covers = a.abstract_vars().iter().all(|v| gamma.get(v).is_some());
    let concrete = gamma.range_vars().iter().all(|v| !v.is_abstract());
    let ground = a.kb.ground.iter().all(|v| gamma.apply_var(v).is_ground());
    covers && concrete && ground && respects_pairs(gamma, &a.kb)
}

fn respects_pairs(gamma: &Subst, kb: &KnowledgeBase) -> bool {
    kb.nonunifiable.iter().all(|(s, t)| {
        let (s, t) = localize(s, t);
        unify(&gamma.apply(&s), &gamma.apply(&t)).is_none()
    })
}

/// Signature used to build concretizations: function symbols of the program
/// plus one constant that does not occur in it.
#[derive(Clone, Debug)]
pub struct Signature {
    pub constants: Vec<String>,
    pub functions: Vec<(String, usize)>,
    pub pool: Vec<Var>,
}

impl Signature {
    pub fn of(program: &Program) -> Signature {
        let fs = program.term_functors();
        let mut constants: Vec<String> =
            fs.iter().filter(|(_, n)| *n == 0).map(|(f, _)| f.clone()).collect();
        let used: BTreeSet<String> = program.functors().into_iter().map(|(f, _)| f).collect();
        let fresh = (0..).map(|i| format!("k{i}")).find(|c| !used.contains(c)).expect("fresh constant");
        constants.push(fresh);
        let functions = fs.into_iter().filter(|(_, n)| *n > 0).collect();
        Signature { constants, functions, pool: vec![Var::named("V1"), Var::named("V2")] }
    }

    /// A random term of depth at most `depth`.
    pub fn random_term(&self, rng: &mut impl Rng, depth: usize, ground: bool) -> Term {
        let leaf = depth <= 1 || self.functions.is_empty() || rng.gen_bool(0.4);
        if leaf {
            let n_vars = if ground { 0 } else { self.pool.len() };
            let i = rng.gen_range(0..self.constants.len() + n_vars);
            return match self.constants.get(i) {
                Some(c) => Term::constant(c),
                None => Term::Var(self.pool[i - self.constants.len()].clone()),
            };
        }
        let (f, n) = &self.functions[rng.gen_range(0..self.functions.len())];
        let args = (0..*n).map(|_| self.random_term(rng, depth - 1, ground)).collect();
        Term::app(f, args)
    }
}

/// Up to `count` random concretizations of `a` with terms of depth at most
/// `depth`, drawn from `attempts` tries.
pub fn sample_concretizations(
    a: &AbstractState,
    sig: &Signature,
    rng: &mut impl Rng,
    count: usize,
    depth: usize,
) -> Vec<Subst> {
    let vars: Vec<Var> = a.abstract_vars().into_iter().collect();
    let mut out = Vec::new();
    let attempts = count.saturating_mul(50).max(50);
    for _ in 0..attempts {
        if out.len() >= count {
            break;
        }
        let gamma = Subst::from_pairs(
            vars.iter()
                .map(|v| (v.clone(), sig.random_term(rng, depth, a.kb.ground.contains(v))))
                .collect::<Vec<_>>(),
        );
        if respects_pairs(&gamma, &a.kb) {
            out.push(gamma);
        }
    }
    out
}

/// Finds a concretization `gamma` of `a` with `a.state gamma = concrete`.
///
/// Variables that only occur in `U` are chosen existentially: first from
/// `hint`, then a fresh variable, then a constant of `sig`.
pub fn concretization_of(
    concrete: &State,
    a: &AbstractState,
    sig: &Signature,
    hint: Option<&Subst>,
) -> Option<Subst> {
    let (pe, te) = (a.state.elements(), concrete.elements());
    if pe.len() != te.len() {
        return None;
    }
    let mut map = BTreeMap::new();
    for (p, t) in pe.iter().zip(te) {
        let ok = match (p, t) {
            (Element::Marker(m), Element::Marker(n)) => m == n,
            (Element::Goal(g), Element::Goal(h)) => match_goal(&mut map, g, h),
            (
                Element::Labeled { goal: g, clause: i, mark: m },
                Element::Labeled { goal: h, clause: j, mark: n },
            ) => i == j && m == n && match_goal(&mut map, g, h),
            _ => false,
        };
        if !ok {
            return None;
        }
    }
    // Concrete variables of the abstract state must be left alone.
    if map.iter().any(|(v, t)| !v.is_abstract() && *t != Term::Var(v.clone())) {
        return None;
    }
    map.retain(|v, _| v.is_abstract());
    if map.values().any(|t| t.var_set().iter().any(Var::is_abstract)) {
        return None;
    }
    if !a.kb.ground.iter().all(|v| map.get(v).is_none_or(|t| t.is_ground())) {
        return None;
    }
    let extra: Vec<Var> = a.kb.pair_vars().into_iter().filter(|v| !map.contains_key(v)).collect();
    let mut choices: Vec<Vec<Term>> = Vec::new();
    for (i, v) in extra.iter().enumerate() {
        let mut opts = Vec::new();
        if let Some(h) = hint.and_then(|h| h.get(v)) {
            if !h.var_set().iter().any(Var::is_abstract) {
                opts.push(h.clone());
            }
        }
        if !a.kb.ground.contains(v) {
            opts.push(Term::Var(Var::named(&format!("Fresh{i}"))));
        }
        opts.extend(sig.constants.iter().map(|c| Term::constant(c)));
        choices.push(opts);
    }
    search_extra(&map, &extra, &choices, &a.kb)
}

fn search_extra(
    map: &BTreeMap<Var, Term>,
    extra: &[Var],
    choices: &[Vec<Term>],
    kb: &KnowledgeBase,
) -> Option<Subst> {
    let Some((v, rest)) = extra.split_first() else {
        let gamma = Subst::from_pairs(map.clone());
        return respects_pairs(&gamma, kb).then_some(gamma);
    };
    for t in &choices[0] {
        let mut m = map.clone();
        m.insert(v.clone(), t.clone());
        if let Some(g) = search_extra(&m, rest, &choices[1..], kb) {
            return Some(g);
        }
    }
    None
}
