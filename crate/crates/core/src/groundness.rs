//! Which argument positions of a predicate are ground after success, given
//! which ones were ground at call time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::program::Program;
use crate::subst::Subst;
use crate::term::{Term, Var};

/// 1-based argument positions.
pub type Positions = BTreeSet<usize>;

type Pred = (String, usize);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundnessTable {
    rows: BTreeMap<Pred, BTreeMap<Positions, Positions>>,
}

fn subsets(n: usize) -> impl Iterator<Item = Positions> {
    (0u32..(1u32 << n)).map(move |bits| (1..=n).filter(|i| bits & (1 << (i - 1)) != 0).collect())
}

fn all_positions(n: usize) -> Positions {
    (1..=n).collect()
}

/// Computes the table for every predicate defined in `p`.
///
/// Starts from "every position ground" (true of predicates that never
/// succeed) and refines until stable, so each entry holds for successful
/// derivations of any length.
pub fn analyze(p: &Program) -> GroundnessTable {
    let mut table = GroundnessTable::default();
    for (name, arity) in p.predicates() {
        let row = subsets(arity).map(|s| (s, all_positions(arity))).collect();
        table.rows.insert((name, arity), row);
    }
    loop {
        let mut next = table.clone();
        for (pred, row) in next.rows.iter_mut() {
            for (input, out) in row.iter_mut() {
                let mut acc = all_positions(pred.1);
                for c in p.clauses().iter().filter(|c| c.predicate() == (pred.0.as_str(), pred.1)) {
                    let got = table.clause_output(c.head(), c.body(), input);
                    acc = acc.intersection(&got).copied().collect();
                }
                acc.extend(input.iter().copied());
                *out = acc;
            }
        }
        if next == table {
            return table;
        }
        table = next;
    }
}

impl GroundnessTable {
    /// Positions ground on success when `input` positions are ground at call.
    /// Predicates without clauses never succeed, so every position qualifies.
    pub fn ground(&self, name: &str, arity: usize, input: &Positions) -> Positions {
        self.rows
            .get(&(name.to_string(), arity))
            .and_then(|row| row.get(input))
            .cloned()
            .unwrap_or_else(|| all_positions(arity))
    }

    fn clause_output(&self, head: &Term, body: &[Term], input: &Positions) -> Positions {
        let args = head.as_compound().expect("compound head").args();
        let mut ground: BTreeSet<Var> = BTreeSet::new();
        for i in input {
            ground.extend(args[i - 1].var_set());
        }
        for goal in body {
            let Some(c) = goal.as_compound() else { continue };
            let call_in: Positions = c
                .args()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.var_set().is_subset(&ground))
                .map(|(i, _)| i + 1)
                .collect();
            for j in self.ground(c.functor(), c.arity(), &call_in) {
                ground.extend(c.args()[j - 1].var_set());
            }
        }
        args.iter()
            .enumerate()
            .filter(|(_, a)| a.var_set().is_subset(&ground))
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// One line per predicate and input set, e.g. `sub/3 {1,2} -> {1,2,3}`.
    pub fn dump(&self) -> String {
        self.to_string()
    }
}

fn fmt_positions(p: &Positions) -> String {
    let items: Vec<String> = p.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(","))
}

impl fmt::Display for GroundnessTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for ((name, arity), row) in &self.rows {
            for (input, out) in row {
                writeln!(f, "{name}/{arity} {} -> {}", fmt_positions(input), fmt_positions(out))?;
            }
        }
        Ok(())
    }
}

/// Abstract variables of `t_j mu` for every position `j` that the table
/// marks ground, given that the arguments built only from `ground` are
/// ground at call time.
pub fn approx_gnd(
    t: &Term,
    mu: &Subst,
    ground: &BTreeSet<Var>,
    table: &GroundnessTable,
) -> BTreeSet<Var> {
    let Some(c) = t.as_compound() else { return BTreeSet::new() };
    let input: Positions = c
        .args()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.var_set().is_subset(ground))
        .map(|(i, _)| i + 1)
        .collect();
    let mut out = BTreeSet::new();
    for j in table.ground(c.functor(), c.arity(), &input) {
        out.extend(mu.apply(&c.args()[j - 1]).var_set().into_iter().filter(Var::is_abstract));
    }
    out
}
