#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use cutgraph::parser::{parse_source, QuerySpec};
use cutgraph::{Program, Term};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn load(name: &str) -> (Program, QuerySpec) {
    let path = corpus_dir().join(format!("{name}.pl"));
    let src = std::fs::read_to_string(&path).unwrap();
    let f = parse_source(&src, name).unwrap();
    (f.program, f.query.unwrap())
}

/// Prints a term with predicate names renamed and variables numbered by
/// first occurrence, so variants print identically.
fn canon(t: &Term, preds: &BTreeMap<String, String>, vars: &mut Vec<String>, top: bool, out: &mut String) {
    match t {
        Term::Var(v) => {
            let name = v.to_string();
            let i = vars.iter().position(|x| *x == name).unwrap_or_else(|| {
                vars.push(name);
                vars.len() - 1
            });
            out.push_str(&format!("V{i}"));
        }
        Term::Cut(_) => out.push('!'),
        Term::Compound(c) => {
            let f = c.functor().to_string();
            let f = if top { preds.get(&f).cloned().unwrap_or(f) } else { f };
            out.push_str(&f);
            out.push('(');
            for (i, a) in c.args().iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                canon(a, preds, vars, false, out);
            }
            out.push(')');
        }
    }
}

pub fn canon_clause(head: &Term, body: &[Term], preds: &BTreeMap<String, String>) -> String {
    let mut vars = Vec::new();
    let mut out = String::new();
    canon(head, preds, &mut vars, true, &mut out);
    out.push_str(":-");
    for b in body {
        canon(b, preds, &mut vars, true, &mut out);
        out.push(';');
    }
    out
}

fn predicates(p: &Program) -> Vec<(String, usize)> {
    let mut s = BTreeSet::new();
    for c in p.clauses() {
        for t in std::iter::once(c.head()).chain(c.body()) {
            if let Some((f, n)) = t.predicate() {
                s.insert((f.to_string(), n));
            }
        }
    }
    s.into_iter().collect()
}

fn clause_multiset(p: &Program, preds: &BTreeMap<String, String>) -> Vec<String> {
    let mut v: Vec<String> = p.clauses().iter().map(|c| canon_clause(c.head(), c.body(), preds)).collect();
    v.sort();
    v
}

fn permutations(items: &[(String, usize)]) -> Vec<Vec<(String, usize)>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// A predicate renaming under which `a` and `b` have the same clauses up to
/// variable renaming, found by trying every bijection.
pub fn alpha_equivalent(a: &Program, b: &Program) -> Option<BTreeMap<String, String>> {
    let (pa, pb) = (predicates(a), predicates(b));
    if pa.len() != pb.len() {
        return None;
    }
    let target = clause_multiset(b, &BTreeMap::new());
    for perm in permutations(&pb) {
        if perm.iter().zip(&pa).any(|(x, y)| x.1 != y.1) {
            continue;
        }
        let map: BTreeMap<String, String> = pa.iter().map(|x| x.0.clone()).zip(perm.iter().map(|x| x.0.clone())).collect();
        if clause_multiset(a, &map) == target {
            return Some(map);
        }
    }
    None
}
