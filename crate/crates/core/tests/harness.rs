mod common;

use cutgraph::abstract_machine::AbstractRule;
use cutgraph::graph::build;
use cutgraph::harness::{check_given_graph, run_suite, CheckConfig, Corpus};

use common::corpus_dir;

#[test]
fn corpus_loads_sorted_with_goldens() {
    let c = Corpus::load(&corpus_dir()).unwrap();
    let names: Vec<&str> = c.entries.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ["div", "loop_cut", "p_par", "p_split", "p_succ", "pqr"]);
    assert!(c.entries.iter().all(|e| e.golden_graph.is_some() && e.golden_program.is_some()));
}

#[test]
fn full_corpus_passes() {
    let c = Corpus::load(&corpus_dir()).unwrap();
    let r = run_suite(&c, &CheckConfig::default());
    assert!(r.passed(), "{r}");
    let text = r.to_string();
    assert!(text.contains("ok div: golden graph"));
    assert!(text.ends_with("6 entries, 0 failed\n"));
}

#[test]
fn swapped_goldens_fail() {
    let mut c = Corpus::load(&corpus_dir()).unwrap();
    let i = c.entries.iter().position(|e| e.name == "p_succ").unwrap();
    let j = c.entries.iter().position(|e| e.name == "p_par").unwrap();
    let g = c.entries[i].golden_graph.clone();
    c.entries[i].golden_graph = c.entries[j].golden_graph.clone();
    c.entries[j].golden_graph = g;
    let r = run_suite(&c, &CheckConfig { samples: 2, ..CheckConfig::default() });
    assert!(!r.passed());
}

#[test]
fn empty_corpus_passes() {
    let r = run_suite(&Corpus::default(), &CheckConfig::default());
    assert!(r.passed());
}

#[test]
fn duplicate_names_are_rejected() {
    let mut c = Corpus::load(&corpus_dir()).unwrap();
    let e = c.entries[0].clone();
    assert!(c.push(e).is_err());
}

#[test]
fn mutated_edge_is_caught() {
    let c = Corpus::load(&corpus_dir()).unwrap();
    let cfg = CheckConfig::default();
    for e in &c.entries {
        let mut g = build(&e.program, &e.query, &cfg.build).unwrap();
        let i = g.edges.iter().position(|x| x.rule == AbstractRule::Eval && x.position == 1).unwrap();
        let from = g.edges[i].from;
        let sibling = g.edges.iter().find(|x| x.from == from && x.position == 2).unwrap().to;
        g.edges[i].to = sibling;
        assert!(!check_given_graph(&g, e, &cfg).passed(), "{}", e.name);
    }
}

#[test]
fn reports_are_deterministic() {
    let c = Corpus::load(&corpus_dir()).unwrap();
    let cfg = CheckConfig { seed: 7, ..CheckConfig::default() };
    assert_eq!(run_suite(&c, &cfg).to_string(), run_suite(&c, &cfg).to_string());
}

#[test]
fn zero_samples_is_vacuous() {
    let c = Corpus::load(&corpus_dir()).unwrap();
    let r = run_suite(&c, &CheckConfig { samples: 0, ..CheckConfig::default() });
    assert!(r.passed());
    assert!(r.to_string().contains("vacuous"));
}
