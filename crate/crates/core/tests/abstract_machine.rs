use std::collections::BTreeSet;

use cutgraph::abstract_machine::{
    concretization_of, find_instance, instance_matcher, is_concretization, normalize, parallel_parts,
    sample_concretizations, AbstractMachine, AbstractState, KnowledgeBase, RuleChoice, RuleError, Signature,
};
use cutgraph::parser::{parse_abstract_term, parse_program};
use cutgraph::{State, Subst, Term, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn st(s: &str) -> State {
    State::parse_abstract(s).unwrap()
}

fn kb(ground: &[u32], pairs: &[(&str, &str)]) -> KnowledgeBase {
    KnowledgeBase {
        ground: ground.iter().map(|i| Var::abstract_var(*i)).collect(),
        nonunifiable: pairs
            .iter()
            .map(|(s, t)| (parse_abstract_term(s).unwrap(), parse_abstract_term(t).unwrap()))
            .collect(),
    }
}

const DIV: &str = "div(X, 0, Z) :- !, failure(a).
div(0, Y, Z) :- !, eq(Z, 0).
div(X, Y, s(Z)) :- sub(X, Y, U), div(U, Y, Z).
failure(b).
eq(X, X).
sub(0, Y, 0).
sub(X, 0, X).
sub(s(X), s(Y), Z) :- sub(X, Y, Z).";

#[test]
fn parallel_counterexample_is_rejected() {
    let p = parse_program("p :- p.").unwrap();
    let a = AbstractState::new(st("!_2 | !_1 | ?_2 | p"), KnowledgeBase::default());
    match parallel_parts(&a, 1, &p) {
        Err(RuleError::ActiveCutConflict { cuts, marks, .. }) => {
            assert_eq!(cuts, BTreeSet::from([2]));
            assert_eq!(marks, BTreeSet::from([2]));
        }
        other => panic!("{other:?}"),
    }
    // Splitting after the marker loses nothing.
    assert!(parallel_parts(&a, 3, &p).is_ok());
}

#[test]
fn split_uses_groundness() {
    let p = parse_program(DIV).unwrap();
    let mut m = AbstractMachine::new(&p);
    let a = AbstractState::new(st("sub(T5, T6, T8), div(T8, T6, T7)"), kb(&[5, 6], &[]));
    let kids = m.apply(&a, RuleChoice::Split).unwrap();
    assert_eq!(kids[0].state.to_string(), "sub(T5, T6, T8) ; ({T5, T6}, {})");
    assert_eq!(kids[1].state.to_string(), "div(T10, T6, T9) ; ({T6, T10}, {})");
    assert_eq!(kids[1].subst.as_ref().unwrap().to_string(), "{T7/T9, T8/T10}");
}

#[test]
fn case_adds_marker() {
    let p = parse_program(DIV).unwrap();
    let mut m = AbstractMachine::new(&p);
    let a = AbstractState::new(st("sub(T1, T2, T3)"), kb(&[1, 2], &[]));
    let kids = m.apply(&a, RuleChoice::Case).unwrap();
    assert_eq!(
        kids[0].state.state.to_string(),
        "sub(T1, T2, T3)^6_1 | sub(T1, T2, T3)^7_1 | sub(T1, T2, T3)^8_1"
    );
}

#[test]
fn instance_requires_pairs() {
    let general = AbstractState::new(st("sub(T1, T2, T3)"), kb(&[1, 2], &[("div(T1, T2, T4)", "div(X, 0, Z)")]));
    let special = AbstractState::new(st("sub(T5, T6, T7)"), kb(&[5, 6], &[]));
    assert!(instance_matcher(&special, &general).is_none());
    assert!(instance_matcher(&general, &special).is_some());
    let with_pair = AbstractState::new(st("sub(T5, T6, T7)"), kb(&[5, 6], &[("div(T5, T6, T9)", "div(Y, 0, W)")]));
    assert!(instance_matcher(&with_pair, &general).is_some());
    let cands = [special.clone(), general.clone()];
    assert_eq!(find_instance(&with_pair, cands.iter()).unwrap().0, &special);
}

#[test]
fn instance_requires_groundness() {
    let general = AbstractState::new(st("p(T1)"), kb(&[1], &[]));
    let nonground = AbstractState::new(st("p(T2)"), kb(&[], &[]));
    assert!(instance_matcher(&nonground, &general).is_none());
    let compound = AbstractState::new(st("p(s(T2))"), kb(&[2], &[]));
    assert_eq!(instance_matcher(&compound, &general).unwrap().to_string(), "{T1/s(T2)}");
}

#[test]
fn normalization_is_idempotent() {
    let a = AbstractState::new(st("?_3 | p(T1)^1_2 | ?_2 | ?_1"), kb(&[1, 4], &[("p(T1)", "p(0)"), ("q(T9)", "q(X)")]));
    let n = normalize(&a);
    assert_eq!(n.to_string(), "p(T1)^1_2 ; ({T1}, {(p(T1), p(0))})");
    assert_eq!(normalize(&n), n);
}

#[test]
fn samples_are_concretizations() {
    let p = parse_program(DIV).unwrap();
    let sig = Signature::of(&p);
    let a = AbstractState::new(st("div(T1, T2, T3)"), kb(&[1, 2], &[("div(T1, T2, T3)", "div(X, 0, Z)")]));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let samples = sample_concretizations(&a, &sig, &mut rng, 30, 3);
    assert_eq!(samples.len(), 30);
    for g in &samples {
        assert!(is_concretization(g, &a), "{g}");
        assert!(g.get(&Var::abstract_var(2)).unwrap().to_string() != "0");
        for t in [1, 2, 3] {
            assert!(g.get(&Var::abstract_var(t)).unwrap().depth() <= 3);
        }
    }
}

#[test]
fn membership() {
    let p = parse_program(DIV).unwrap();
    let sig = Signature::of(&p);
    let a = AbstractState::new(st("div(T1, T2, T3)^3_1"), kb(&[1, 2], &[("div(T1, T2, T3)", "div(0, Y, Z)")]));
    let member = |s: &str| concretization_of(&State::parse(s).unwrap(), &a, &sig, None);
    assert!(member("div(s(0), s(0), Q)^3_1").is_some());
    assert!(member("div(0, s(0), Q)^3_1").is_none());
    assert!(member("div(s(0), X, Q)^3_1").is_none());
    assert!(member("div(s(0), s(0), Q)^2_1").is_none());
    let g = member("div(s(0), 0, Q)^3_1").unwrap();
    assert!(is_concretization(&g, &a));
}

#[test]
fn eval_on_cut_clause_labels_cut() {
    let p = parse_program(DIV).unwrap();
    let mut m = AbstractMachine::new(&p);
    let a = AbstractState::new(st("div(T1, T2, T3)^2_7 | div(T1, T2, T3)^3_7"), kb(&[1, 2], &[]));
    let kids = m.apply(&a, RuleChoice::Eval).unwrap();
    assert!(kids[0].state.state.to_string().starts_with("!_7, eq("));
    let sigma: &Subst = kids[0].subst.as_ref().unwrap();
    assert_eq!(sigma.apply(&Term::abstract_var(1)).to_string(), "0");
}
