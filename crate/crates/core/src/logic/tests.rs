use proptest::prelude::*;

use super::*;
use crate::scalar::RHO_MAX;

fn table() -> PredicateTable<f64> {
    let mut t = PredicateTable::new();
    t.insert(Predicate::go("go1", 0, 0.5).unwrap());
    t.insert(Predicate::service_done("do1", 0, 1.0).unwrap());
    t.insert(Predicate::go("go2", 1, 0.5).unwrap());
    t.insert(Predicate::service_done("do2", 1, 1.0).unwrap());
    t.insert(Predicate::custom("p"));
    t.insert(Predicate::custom("q"));
    t
}

fn stream(values: &[f64]) -> Vec<ValuationMap<f64>> {
    values.iter().map(|v| ValuationMap::from_pairs(&[("p", *v)])).collect()
}

fn pred(name: &str) -> Formula<f64> {
    Formula::pred(table().get(name).unwrap().clone())
}

#[test]
fn parses_then_with_conjunction_under_it() {
    let parsed = parse_formula("go1 T do1 && [](!( !go1 && do1 ))", &table()).unwrap();
    let expected = pred("go1").then(
        pred("do1").and(pred("go1").not().and(pred("do1")).not().always()),
    );
    assert_eq!(parsed, expected);
}

#[test]
fn parses_true_literal() {
    assert_eq!(parse_formula::<f64>("top", &table()).unwrap(), Formula::True);
}

#[test]
fn parses_eventually_disjunction() {
    let parsed = parse_formula("<> (do1 || do2)", &table()).unwrap();
    assert_eq!(parsed, pred("do1").or(pred("do2")).eventually());
}

#[test]
fn reports_unknown_predicate_with_position() {
    let err = parse_formula::<f64>("go1 && nope", &table()).unwrap_err();
    assert_eq!(err, ParseError::UnknownPredicate { name: "nope".into(), pos: 7 });
}

#[test]
fn reports_syntax_error_position() {
    let err = parse_formula::<f64>("go1 &&", &table()).unwrap_err();
    assert!(matches!(err, ParseError::Syntax { pos: 6, .. }), "{err:?}");
}

#[test]
fn rejects_temporal_operator_in_guard() {
    let err = parse_guard::<f64>("go1 && <> do1", &table()).unwrap_err();
    assert_eq!(err, ParseError::TemporalInGuard { pos: 7 });
    assert!(parse_guard::<f64>("go1 && !do1", &table()).is_ok());
}

#[test]
fn eventually_takes_suffix_maximum() {
    let traj = stream(&[-3.0, 2.0, -1.0]);
    let phi = pred("p").eventually();
    assert_eq!(robustness(&traj, &phi, 0).unwrap(), 2.0);
    assert_eq!(robustness(&traj, &phi, 2).unwrap(), -1.0);
}

#[test]
fn always_takes_suffix_minimum() {
    let traj = stream(&[-3.0, 2.0, -1.0]);
    let phi = pred("p").always();
    assert_eq!(robustness(&traj, &phi, 0).unwrap(), -3.0);
    assert_eq!(robustness(&traj, &phi, 1).unwrap(), -1.0);
}

#[test]
fn true_and_out_of_range_next_use_rho_max() {
    let traj = stream(&[1.0]);
    assert_eq!(robustness(&traj, &Formula::True, 0).unwrap(), RHO_MAX);
    assert_eq!(robustness(&traj, &pred("p").next(), 0).unwrap(), -RHO_MAX);
}

#[test]
fn index_out_of_range_is_an_error() {
    let traj = stream(&[1.0]);
    assert_eq!(
        robustness(&traj, &Formula::True, 1).unwrap_err(),
        EvalError::IndexOutOfRange { index: 1, len: 1 }
    );
    let empty: Vec<ValuationMap<f64>> = Vec::new();
    assert_eq!(satisfies(&empty, &Formula::<f64>::True).unwrap_err(), EvalError::EmptyTrajectory);
}

#[test]
fn until_accepts_immediate_right_operand() {
    // right operand already positive at the start: the empty prefix imposes nothing
    let traj: Vec<ValuationMap<f64>> = [(-1.0, 2.0), (-1.0, -1.0)]
        .iter()
        .map(|(p, q)| ValuationMap::from_pairs(&[("p", *p), ("q", *q)]))
        .collect();
    let phi = pred("p").until(pred("q"));
    assert_eq!(robustness(&traj, &phi, 0).unwrap(), 2.0);
}

#[test]
fn then_requires_left_operand_strictly_before() {
    let mk = |pairs: &[(f64, f64)]| -> Vec<ValuationMap<f64>> {
        pairs
            .iter()
            .map(|(p, q)| ValuationMap::from_pairs(&[("p", *p), ("q", *q)]))
            .collect()
    };
    let phi = pred("p").then(pred("q"));
    // q positive at the start only: no prior p, not satisfied
    assert!(robustness(&mk(&[(-1.0, 2.0), (-1.0, -1.0)]), &phi, 0).unwrap() <= 0.0);
    // p once, then q: satisfied even though p does not hold at every prior step
    let traj = mk(&[(1.0, -1.0), (-1.0, -1.0), (-1.0, 3.0)]);
    assert_eq!(robustness(&traj, &phi, 0).unwrap(), 1.0);
    // same trajectory fails the until reading
    assert!(robustness(&traj, &pred("p").until(pred("q")), 0).unwrap() <= 0.0);
}

#[test]
fn satisfies_is_positive_robustness() {
    let traj = stream(&[1.0]);
    assert!(satisfies(&traj, &Formula::True).unwrap());
    let phi = pred("p");
    let not_phi = pred("p").not();
    assert!(satisfies(&traj, &phi).unwrap() != satisfies(&traj, &not_phi).unwrap());
    // robustness exactly zero counts as non-satisfaction
    let zero = stream(&[0.0]);
    assert!(!satisfies(&zero, &phi).unwrap());
    assert!(!satisfies(&zero, &not_phi).unwrap());
}

#[test]
fn guard_evaluates_on_single_state() {
    let done = ValuationMap::from_pairs(&[("do1", 1.0)]);
    let pending = ValuationMap::from_pairs(&[("do1", -1.0)]);
    let guard = parse_guard("do1", &table()).unwrap();
    assert_eq!(eval_guard(&done, &guard), 1.0);
    assert_eq!(eval_guard(&pending, &guard), -1.0);
}

#[test]
fn contradiction_guard_is_never_positive() {
    let guard = parse_guard("p && !p", &table()).unwrap();
    for v in [-3.0, 0.0, 0.7, 12.5] {
        let state = ValuationMap::from_pairs(&[("p", v)]);
        assert!(eval_guard(&state, &guard) <= 0.0);
    }
}

// Random formulas over the custom predicates p and q, depth-limited.
fn formula_strategy() -> impl Strategy<Value = Formula<f64>> {
    let leaf = prop_oneof![
        Just(Formula::<f64>::True),
        Just(pred("p")),
        Just(pred("q")),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| f.not()),
            inner.clone().prop_map(|f| f.next()),
            inner.clone().prop_map(|f| f.eventually()),
            inner.clone().prop_map(|f| f.always()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.imply(b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.until(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.then(b)),
        ]
    })
}

fn stream_strategy() -> impl Strategy<Value = Vec<ValuationMap<f64>>> {
    prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..6).prop_map(|vals| {
        vals.into_iter()
            .map(|(p, q)| ValuationMap::from_pairs(&[("p", p), ("q", q)]))
            .collect()
    })
}

proptest! {
    #[test]
    fn negation_flips_sign(phi in formula_strategy(), traj in stream_strategy()) {
        let r = robustness(&traj, &phi, 0).unwrap();
        let rn = robustness(&traj, &phi.clone().not(), 0).unwrap();
        prop_assert_eq!(rn, -r);
    }

    #[test]
    fn conjunction_is_min_disjunction_is_max(
        a in formula_strategy(),
        b in formula_strategy(),
        traj in stream_strategy(),
    ) {
        let ra = robustness(&traj, &a, 0).unwrap();
        let rb = robustness(&traj, &b, 0).unwrap();
        prop_assert_eq!(robustness(&traj, &a.clone().and(b.clone()), 0).unwrap(), ra.min(rb));
        prop_assert_eq!(robustness(&traj, &a.or(b), 0).unwrap(), ra.max(rb));
    }

    #[test]
    fn printing_then_parsing_is_identity(phi in formula_strategy()) {
        let text = phi.to_string();
        let reparsed = parse_formula(&text, &table()).unwrap();
        prop_assert_eq!(reparsed, phi);
    }
}
