//! Reference implementations and random-input generators used by the test
//! suites. Everything here is deliberately independent of the production
//! evaluation paths: temporal operators are expanded by explicit suffix and
//! prefix enumeration over re-sliced trajectories, and the energy reference
//! relaxes edges Bellman-Ford style instead of running the priority search.

use rand::Rng;

use crate::automaton::Fspa;
use crate::logic::{Formula, GuardFormula, Predicate, PredicateValuation};
use crate::scalar::{convert, rho_max, Scalar};

/// Brute-force robustness at the start of `traj`, expanding every temporal
/// operator by enumerating explicit suffix slices.
pub fn robustness_reference<T, V>(traj: &[V], phi: &Formula<T>) -> T
where
    T: Scalar,
    V: PredicateValuation<T>,
{
    assert!(!traj.is_empty());
    match phi {
        Formula::True => rho_max(),
        Formula::Pred(p) => traj[0].predicate_value(p),
        Formula::Not(f) => -robustness_reference(traj, f),
        Formula::And(a, b) => {
            robustness_reference(traj, a).min(robustness_reference(traj, b))
        }
        Formula::Or(a, b) => robustness_reference(traj, a).max(robustness_reference(traj, b)),
        Formula::Imply(a, b) => {
            (-robustness_reference(traj, a)).max(robustness_reference(traj, b))
        }
        Formula::Next(f) => {
            if traj.len() > 1 {
                robustness_reference(&traj[1..], f)
            } else {
                -rho_max::<T>()
            }
        }
        Formula::Eventually(f) => (0..traj.len())
            .map(|u| robustness_reference(&traj[u..], f))
            .fold(-T::infinity(), T::max),
        Formula::Always(f) => (0..traj.len())
            .map(|u| robustness_reference(&traj[u..], f))
            .fold(T::infinity(), T::min),
        Formula::Until(a, b) => {
            let mut best = -T::infinity();
            for u in 0..traj.len() {
                let mut term = robustness_reference(&traj[u..], b);
                let mut before = rho_max::<T>();
                for w in 0..u {
                    before = before.min(robustness_reference(&traj[w..], a));
                }
                term = term.min(before);
                best = best.max(term);
            }
            best
        }
        Formula::Then(a, b) => {
            let mut best = -T::infinity();
            for u in 0..traj.len() {
                let mut term = robustness_reference(&traj[u..], b);
                let mut before = -rho_max::<T>();
                for w in 0..u {
                    before = before.max(robustness_reference(&traj[w..], a));
                }
                term = term.min(before);
                best = best.max(term);
            }
            best
        }
    }
}

/// Energy reference: repeated relaxation of every edge toward the final set.
pub fn energy_reference<T: Scalar>(fspa: &Fspa<T>) -> Vec<T> {
    let n = fspa.num_states();
    let mut dist = vec![T::infinity(); n];
    for q in 0..n {
        if fspa.is_final(q) {
            dist[q] = T::zero();
        }
    }
    for _ in 0..n {
        for e in fspa.edges() {
            if dist[e.to].is_finite() {
                let cand = e.weight + dist[e.to];
                if cand < dist[e.from] {
                    dist[e.from] = cand;
                }
            }
        }
    }
    dist
}

/// Uniformly random formula of at most the given depth over custom predicate
/// names.
pub fn random_formula<T: Scalar, R: Rng>(
    rng: &mut R,
    names: &[&str],
    depth: usize,
) -> Formula<T> {
    if depth == 0 || rng.random::<f64>() < 0.15 {
        return if rng.random::<f64>() < 0.1 {
            Formula::True
        } else {
            Formula::pred(Predicate::custom(names[rng.random_range(0..names.len())]))
        };
    }
    let a = random_formula(rng, names, depth - 1);
    match rng.random_range(0..9) {
        0 => a.not(),
        1 => a.next(),
        2 => a.eventually(),
        3 => a.always(),
        4 => a.and(random_formula(rng, names, depth - 1)),
        5 => a.or(random_formula(rng, names, depth - 1)),
        6 => a.imply(random_formula(rng, names, depth - 1)),
        7 => a.until(random_formula(rng, names, depth - 1)),
        _ => a.then(random_formula(rng, names, depth - 1)),
    }
}

/// Random automaton with one final state, an optional trap, and random
/// positive edge weights. Guards are inert placeholders; these automata feed
/// the energy checks only.
pub fn random_automaton<T: Scalar, R: Rng>(rng: &mut R, max_states: usize) -> Fspa<T> {
    let n = rng.random_range(3..=max_states.max(3));
    let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let final_state = names[n - 1].clone();
    let with_trap = n > 3 && rng.random::<f64>() < 0.5;
    let traps: Vec<String> = if with_trap { vec![names[n - 2].clone()] } else { Vec::new() };
    let interior = if with_trap { n - 2 } else { n - 1 };

    let guard = || -> GuardFormula<T> {
        Formula::pred(Predicate::custom("z")).try_into().expect("plain predicate guard")
    };
    let mut edges = Vec::new();
    // guarantee the final set is reachable
    edges.push((
        names[rng.random_range(0..interior)].clone(),
        final_state.clone(),
        guard(),
        convert(rng.random_range(0.1..10.0)),
    ));
    let extra = rng.random_range(n..4 * n);
    for _ in 0..extra {
        let from = names[rng.random_range(0..interior)].clone();
        let to = names[rng.random_range(0..n)].clone();
        edges.push((from, to, guard(), convert(rng.random_range(0.1..10.0))));
    }
    Fspa::new(names.clone(), &names[0], &[final_state], &traps, edges)
        .expect("generated automaton is structurally valid")
}
