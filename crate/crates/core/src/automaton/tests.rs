use super::*;
use crate::logic::{parse_guard, Predicate, PredicateTable, ValuationMap};
use crate::scalar::RHO_MAX;

fn table() -> PredicateTable<f64> {
    let mut t = PredicateTable::new();
    for name in ["a", "b", "c"] {
        t.insert(Predicate::custom(name));
    }
    t
}

fn guard(text: &str) -> GuardFormula<f64> {
    parse_guard(text, &table()).unwrap()
}

fn state(a: f64, b: f64, c: f64) -> ValuationMap<f64> {
    ValuationMap::from_pairs(&[("a", a), ("b", b), ("c", c)])
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn chain() -> Fspa<f64> {
    // q0 --a--> q1 --b--> acc, plus a trap reachable on c from q0
    Fspa::new(
        names(&["q0", "q1", "acc", "trap"]),
        "q0",
        &names(&["acc"]),
        &names(&["trap"]),
        vec![
            ("q0".into(), "trap".into(), guard("c && !a"), 1.0),
            ("q0".into(), "q1".into(), guard("a"), 1.0),
            ("q1".into(), "acc".into(), guard("b"), 1.0),
        ],
    )
    .unwrap()
}

#[test]
fn rejects_empty_final_set() {
    let err = Fspa::<f64>::new(names(&["q0"]), "q0", &[], &[], vec![]).unwrap_err();
    assert_eq!(err, FspaError::EmptyFinalSet);
}

#[test]
fn rejects_dangling_edge() {
    let err = Fspa::new(
        names(&["q0", "acc"]),
        "q0",
        &names(&["acc"]),
        &[],
        vec![("q0".into(), "ghost".into(), guard("a"), 1.0)],
    )
    .unwrap_err();
    assert_eq!(err, FspaError::UnknownState("ghost".into()));
}

#[test]
fn rejects_duplicate_state() {
    let err =
        Fspa::<f64>::new(names(&["q0", "q0"]), "q0", &names(&["q0"]), &[], vec![]).unwrap_err();
    assert_eq!(err, FspaError::DuplicateState("q0".into()));
}

#[test]
fn rejects_exit_from_absorbing_state() {
    let err = Fspa::new(
        names(&["q0", "acc"]),
        "q0",
        &names(&["acc"]),
        &[],
        vec![("acc".into(), "q0".into(), guard("a"), 1.0)],
    )
    .unwrap_err();
    assert_eq!(err, FspaError::TerminalWithExit { from: "acc".into(), to: "q0".into() });
}

#[test]
fn rejects_unreachable_final_set() {
    let err = Fspa::<f64>::new(names(&["q0", "acc"]), "q0", &names(&["acc"]), &[], vec![])
        .unwrap_err();
    assert_eq!(err, FspaError::FinalUnreachable);
}

#[test]
fn step_follows_first_positive_guard() {
    let fspa = chain();
    let q0 = fspa.state_index("q0").unwrap();
    assert_eq!(fspa.step(q0, &state(1.0, -1.0, -1.0)), fspa.state_index("q1").unwrap());
    // both the trap guard and the progress guard are written to be exclusive;
    // a state satisfying only c goes to the trap
    assert_eq!(fspa.step(q0, &state(-1.0, -1.0, 1.0)), fspa.state_index("trap").unwrap());
    // no guard positive: self retention
    assert_eq!(fspa.step(q0, &state(-1.0, -1.0, -1.0)), q0);
}

#[test]
fn step_is_deterministic_with_declared_order() {
    // two overlapping guards from q0: the first declared edge wins
    let fspa = Fspa::new(
        names(&["q0", "q1", "q2", "acc"]),
        "q0",
        &names(&["acc"]),
        &[],
        vec![
            ("q0".into(), "q1".into(), guard("a"), 1.0),
            ("q0".into(), "q2".into(), guard("a || b"), 1.0),
            ("q1".into(), "acc".into(), guard("b"), 1.0),
            ("q2".into(), "acc".into(), guard("b"), 1.0),
        ],
    )
    .unwrap();
    let x = state(1.0, 1.0, 0.0);
    let first = fspa.step(0, &x);
    assert_eq!(first, fspa.state_index("q1").unwrap());
    assert_eq!(fspa.step(0, &x), first);
}

#[test]
fn absorbing_states_never_leave() {
    let fspa = chain();
    let acc = fspa.state_index("acc").unwrap();
    let trap = fspa.state_index("trap").unwrap();
    for x in [state(1.0, 1.0, 1.0), state(-1.0, -1.0, -1.0)] {
        assert_eq!(fspa.step(acc, &x), acc);
        assert_eq!(fspa.step(trap, &x), trap);
    }
}

#[test]
fn disjunction_collects_non_trap_targets() {
    let fspa = Fspa::new(
        names(&["q0", "q1", "q2", "acc", "trap"]),
        "q0",
        &names(&["acc"]),
        &names(&["trap"]),
        vec![
            ("q0".into(), "q1".into(), guard("a"), 1.0),
            ("q0".into(), "q2".into(), guard("b"), 1.0),
            ("q0".into(), "trap".into(), guard("c"), 1.0),
            ("q1".into(), "acc".into(), guard("b"), 1.0),
            ("q2".into(), "trap".into(), guard("c"), 1.0),
            ("q2".into(), "acc".into(), guard("a"), 1.0),
        ],
    )
    .unwrap();
    let d0 = fspa.outgoing_disjunction(0);
    assert_eq!(d0, guard("a").or(guard("b")));
    // self-loops and trap edges are excluded
    let fspa2 = Fspa::new(
        names(&["q0", "acc", "trap"]),
        "q0",
        &names(&["acc"]),
        &names(&["trap"]),
        vec![
            ("q0".into(), "trap".into(), guard("c"), 1.0),
            ("q0".into(), "q0".into(), guard("a"), 1.0),
            ("q0".into(), "acc".into(), guard("b"), 1.0),
        ],
    )
    .unwrap();
    assert_eq!(fspa2.outgoing_disjunction(0), guard("b"));
}

#[test]
fn disjunction_of_trap_only_exit_is_unsatisfiable() {
    // q0 only exits to the trap; q1 still reaches acc so the automaton validates
    let fspa = Fspa::new(
        names(&["q0", "q1", "acc", "trap"]),
        "q0",
        &names(&["acc"]),
        &names(&["trap"]),
        vec![
            ("q0".into(), "trap".into(), guard("c"), 1.0),
            ("q1".into(), "acc".into(), guard("b"), 1.0),
        ],
    )
    .unwrap();
    assert_eq!(fspa.outgoing_disjunction(0), GuardFormula::always_false());
    let x = state(1.0, 1.0, 1.0);
    assert!(crate::logic::eval_guard(&x, &fspa.outgoing_disjunction(0)) <= 0.0);
}

#[test]
fn energy_on_unit_chain() {
    let fspa = chain();
    let energy = fspa.energy();
    assert_eq!(energy.get(fspa.state_index("q0").unwrap()), 2.0);
    assert_eq!(energy.get(fspa.state_index("q1").unwrap()), 1.0);
    assert_eq!(energy.get(fspa.state_index("acc").unwrap()), 0.0);
    assert!(energy.get(fspa.state_index("trap").unwrap()).is_infinite());
}

#[test]
fn energy_respects_edge_weights() {
    let fspa = Fspa::new(
        names(&["q0", "q1", "acc"]),
        "q0",
        &names(&["acc"]),
        &[],
        vec![
            ("q0".into(), "acc".into(), guard("a"), 10.0),
            ("q0".into(), "q1".into(), guard("b"), 2.0),
            ("q1".into(), "acc".into(), guard("c"), 3.0),
        ],
    )
    .unwrap();
    let energy = fspa.energy();
    assert_eq!(energy.get(0), 5.0);
    assert_eq!(energy.get(1), 3.0);
}

#[test]
fn triangle_inequality_along_edges() {
    let fspa = chain();
    let energy = fspa.energy();
    for e in fspa.edges() {
        if !fspa.is_trap(e.to) {
            assert!(energy.get(e.from) <= e.weight + energy.get(e.to));
        }
    }
}

#[test]
fn run_ignores_the_initial_state_and_tracks_acceptance() {
    let fspa = chain();
    // x0 satisfying `a` must not fire a transition; the run starts reading at x1
    let traj = vec![state(1.0, -1.0, -1.0), state(1.0, -1.0, -1.0), state(-1.0, 1.0, -1.0)];
    let run = fspa.run(&traj);
    assert_eq!(run, vec![0, 1, 2]);
    assert!(fspa.accepts(&traj));
    assert!(!fspa.accepts(&traj[..2].to_vec()));
}

#[test]
fn document_loads_with_warnings_for_unreachable_states() {
    let doc = r#"
states = ["q0", "q1", "acc", "orphan"]
initial = "q0"
final = ["acc"]

[[edges]]
from = "q0"
to = "q1"
guard = "a"

[[edges]]
from = "q1"
to = "acc"
guard = "b"
weight = 2.5
"#;
    let (fspa, warnings) = load_fspa::<f64>(doc, &table()).unwrap();
    assert_eq!(fspa.num_states(), 4);
    assert_eq!(fspa.edges()[1].weight, 2.5);
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].contains("orphan"));
}

#[test]
fn document_with_bad_guard_reports_the_edge() {
    let doc = r#"
states = ["q0", "acc"]
initial = "q0"
final = ["acc"]

[[edges]]
from = "q0"
to = "acc"
guard = "a && <> b"
"#;
    let err = load_fspa::<f64>(doc, &table()).unwrap_err();
    assert!(matches!(err, FspaLoadError::Guard { .. }), "{err:?}");
}

#[test]
fn energy_table_exposes_rho_scale_invariants() {
    let fspa = chain();
    let energy = fspa.energy();
    for (q, value) in energy.iter() {
        if fspa.is_final(q) {
            assert_eq!(value, 0.0);
        } else {
            assert!(value > 0.0);
        }
        assert!(value.is_infinite() || value < RHO_MAX);
    }
}
