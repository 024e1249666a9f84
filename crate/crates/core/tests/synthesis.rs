mod common;

use cutgraph::graph::{build, BuildConfig, TerminationGraph};
use cutgraph::parser::{parse_program, parse_query, Mode};
use cutgraph::synth::{clause_paths, intermediate_atoms, path_subst, ren, synthesize, SynthError};
use cutgraph::{Program, Subst, Term};

use common::{alpha_equivalent, load};

fn graph(name: &str) -> TerminationGraph {
    let (p, q) = load(name);
    build(&p, &q, &BuildConfig::default()).unwrap()
}

/// The expected cut-free program for div, written by hand.
const DIV_LISTING: &str = "
div_a(0, T4, 0).
div_a(T5, T6, s(T9)) :- sub_d(T5, T6, T10), div_a(T10, T6, T9).
div_a(T5, T6, s(T7)) :- sub_d(T5, T6, T8).
sub_d(s(T9), s(T10), T11) :- sub_e(T9, T10, T11).
sub_e(0, T12, 0).
sub_e(T12, 0, T12).
sub_e(s(T12), s(T13), T14) :- sub_e(T12, T13, T14).
";

fn label_path(g: &TerminationGraph, p: &[usize]) -> (String, String) {
    (g.node(p[0]).label.clone(), g.node(*p.last().unwrap()).label.clone())
}

#[test]
fn div_program_matches_listing() {
    let g = graph("div");
    let s = synthesize(&g).unwrap();
    let expected = parse_program(DIV_LISTING).unwrap();
    let map = alpha_equivalent(&s.program, &expected).expect("alpha-equivalent");
    assert_eq!(map[&s.query.predicate], "div_a");
    assert_eq!(s.query.moding, vec![Mode::Ground, Mode::Ground, Mode::Any]);
}

#[test]
fn div_has_seven_clause_paths() {
    let g = graph("div");
    let paths = clause_paths(&g);
    assert_eq!(paths.len(), 7);
    let root = g.node(g.root).label.clone();
    let starts: Vec<String> = paths.iter().map(|p| label_path(&g, p).0).collect();
    assert_eq!(starts.iter().filter(|s| **s == root).count(), 3);
}

#[test]
fn pqr_paths_and_substitutions() {
    let g = graph("pqr");
    let paths = clause_paths(&g);
    // The first Suc is reached by the q branch; the second via r.
    let first = &paths[0];
    assert_eq!(path_subst(first, &g).apply(&Term::abstract_var(1)).to_string(), "f(a)");
    let through = paths.iter().find(|p| p.len() > first.len() && p.starts_with(first)).unwrap();
    let sigma = path_subst(through, &g);
    assert_eq!(sigma.apply(&Term::abstract_var(1)).to_string(), "g(b)");
}

#[test]
fn pqr_facts() {
    let s = synthesize(&graph("pqr")).unwrap();
    let expected = parse_program("p_a(f(a)). p_a(g(b)).").unwrap();
    assert!(alpha_equivalent(&s.program, &expected).is_some());
}

/// Ignoring marks would yield p(f(a)) for the second path as well.
#[test]
fn pqr_marks_matter() {
    let g = graph("pqr");
    let facts: Vec<String> = synthesize(&g).unwrap().program.clauses().iter().map(|c| c.head().to_string()).collect();
    assert_eq!(facts.iter().filter(|f| f.contains("f(a)")).count(), 1);
    assert_eq!(facts.len(), 2);
}

#[test]
fn ren_of_root_and_instance() {
    let g = graph("div");
    let root = ren(&g, g.root).unwrap();
    assert_eq!(root.to_string(), "div_a(T1, T2, T3)");
    let (c, _) = *g.instance_edges().iter().find(|e| e.1 == g.root).unwrap();
    let rc = ren(&g, c).unwrap();
    assert_eq!(rc.predicate(), root.predicate());
    assert_eq!(rc.to_string(), "div_a(T13, T9, T12)");
    let suc = g.nodes.iter().find(|n| g.rule_at(n.id) == Some(cutgraph::abstract_machine::AbstractRule::Suc)).unwrap();
    assert!(ren(&g, suc.id).is_none());
}

#[test]
fn intermediate_atoms_of_div() {
    let g = graph("div");
    let (c, _) = *g.instance_edges().iter().find(|e| e.1 == g.root).unwrap();
    let paths = clause_paths(&g);
    let to_c = paths.iter().find(|p| *p.last().unwrap() == c).unwrap();
    let atoms: Vec<String> = intermediate_atoms(to_c, &g).iter().map(Term::to_string).collect();
    assert_eq!(atoms.len(), 1);
    assert!(atoms[0].starts_with("sub_"));
    assert!(atoms[0].ends_with("(T8, T9, T13)"));
    let to_split_left = paths.iter().find(|p| p[0] == g.root && g.node(*p.last().unwrap()).state.state.to_string().starts_with("sub")).unwrap();
    assert!(intermediate_atoms(to_split_left, &g).is_empty());
}

#[test]
fn no_cut_in_output() {
    for name in ["div", "pqr", "p_par", "p_split", "p_succ", "loop_cut"] {
        let s = synthesize(&graph(name)).unwrap();
        for c in s.program.clauses() {
            assert!(!c.has_cut(), "{name}");
        }
    }
}

/// Nodes linked by Instance share a predicate; other endpoints do not.
#[test]
fn predicate_freshness() {
    let g = graph("div");
    let s = synthesize(&g).unwrap();
    let names = cutgraph::synth::predicate_names(&s.program);
    assert_eq!(names.len(), 3);
}

#[test]
fn improper_graph_is_refused() {
    let p = parse_program("p(X) :- X.").unwrap();
    let g = build(&p, &parse_query("p(v)").unwrap(), &BuildConfig::default()).unwrap();
    assert!(matches!(synthesize(&g), Err(SynthError::NotProper(_))));
}

#[test]
fn non_canonical_root_is_refused() {
    let p = parse_program("p(a).").unwrap();
    let root = cutgraph::abstract_machine::AbstractState::new(
        cutgraph::State::parse_abstract("p(a)").unwrap(),
        Default::default(),
    );
    let g = cutgraph::graph::build_from(&p, root, &BuildConfig::default()).unwrap();
    assert!(matches!(synthesize(&g), Err(SynthError::NonCanonicalRoot(_))));
}

#[test]
fn output_text_has_query_line() {
    let s = synthesize(&graph("p_par")).unwrap();
    let text = s.to_string();
    assert!(text.starts_with("%query: p_a(g)\n"));
    let back = cutgraph::parser::parse_source(&text, "out").unwrap();
    assert_eq!(back.query.unwrap(), s.query);
    let _: &Program = &back.program;
}

#[test]
fn empty_path_substitution_is_identity() {
    let g = graph("p_succ");
    assert_eq!(path_subst(&[g.root], &g), Subst::identity());
}
