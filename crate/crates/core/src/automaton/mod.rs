//! Predicate automata that track mission progress.
//!
//! An automaton state advances on a team state when the guard of one of its
//! outgoing edges evaluates to a positive robustness. Guards are temporal-free
//! formulas; edges carry positive weights that feed the energy function, the
//! minimum weighted path length from each state to the final set.

mod file;

pub use file::{load_fspa, FspaLoadError};

use std::collections::BTreeMap;
use thiserror::Error;

use crate::logic::{eval_guard, GuardFormula, PredicateValuation};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct FspaEdge<T> {
    pub from: usize,
    pub to: usize,
    pub guard: GuardFormula<T>,
    pub weight: T,
}

#[derive(Debug, Clone)]
pub struct Fspa<T> {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    initial: usize,
    finals: Vec<bool>,
    traps: Vec<bool>,
    edges: Vec<FspaEdge<T>>,
    /// Edge indices per source state, in declared order.
    out: Vec<Vec<usize>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FspaError {
    #[error("duplicate state id `{0}`")]
    DuplicateState(String),
    #[error("state `{0}` is not declared")]
    UnknownState(String),
    #[error("the final set is empty")]
    EmptyFinalSet,
    #[error("state `{0}` is both final and trap")]
    FinalTrapOverlap(String),
    #[error("edge {from} -> {to} has non-positive weight")]
    NonPositiveWeight { from: String, to: String },
    #[error("absorbing state `{from}` has an outgoing edge to `{to}`")]
    TerminalWithExit { from: String, to: String },
    #[error("no state outside the final set can reach it")]
    FinalUnreachable,
}

impl<T: Scalar> Fspa<T> {
    /// Builds and validates an automaton. Edges keep their declared order,
    /// which fixes the tie-break when several guards hold at once.
    pub fn new(
        states: Vec<String>,
        initial: &str,
        finals: &[String],
        traps: &[String],
        edges: Vec<(String, String, GuardFormula<T>, T)>,
    ) -> Result<Self, FspaError> {
        let mut index = BTreeMap::new();
        for (i, name) in states.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(FspaError::DuplicateState(name.clone()));
            }
        }
        let resolve = |name: &str| -> Result<usize, FspaError> {
            index.get(name).copied().ok_or_else(|| FspaError::UnknownState(name.to_string()))
        };

        let initial = resolve(initial)?;
        let mut final_mask = vec![false; states.len()];
        for name in finals {
            final_mask[resolve(name)?] = true;
        }
        if !final_mask.iter().any(|&f| f) {
            return Err(FspaError::EmptyFinalSet);
        }
        let mut trap_mask = vec![false; states.len()];
        for name in traps {
            let q = resolve(name)?;
            if final_mask[q] {
                return Err(FspaError::FinalTrapOverlap(name.clone()));
            }
            trap_mask[q] = true;
        }

        let mut built = Vec::with_capacity(edges.len());
        let mut out = vec![Vec::new(); states.len()];
        for (from, to, guard, weight) in edges {
            let f = resolve(&from)?;
            let t = resolve(&to)?;
            if weight <= T::zero() {
                return Err(FspaError::NonPositiveWeight { from, to });
            }
            if (final_mask[f] || trap_mask[f]) && f != t {
                return Err(FspaError::TerminalWithExit { from, to });
            }
            out[f].push(built.len());
            built.push(FspaEdge { from: f, to: t, guard, weight });
        }

        let fspa = Self {
            names: states,
            index,
            initial,
            finals: final_mask,
            traps: trap_mask,
            edges: built,
            out,
        };
        // Degenerate automata whose final set is unreachable from everywhere
        // cannot express a satisfiable mission.
        let energy = fspa.energy();
        let some_progress = (0..fspa.num_states())
            .any(|q| !fspa.is_final(q) && energy.get(q).is_finite());
        if !some_progress && fspa.num_states() > fspa.finals.iter().filter(|&&f| f).count() {
            return Err(FspaError::FinalUnreachable);
        }
        Ok(fspa)
    }

    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn is_final(&self, q: usize) -> bool {
        self.finals[q]
    }

    pub fn is_trap(&self, q: usize) -> bool {
        self.traps[q]
    }

    pub fn is_terminal(&self, q: usize) -> bool {
        self.finals[q] || self.traps[q]
    }

    pub fn edges(&self) -> &[FspaEdge<T>] {
        &self.edges
    }

    pub fn edges_from(&self, q: usize) -> impl Iterator<Item = &FspaEdge<T>> {
        self.out[q].iter().map(|&i| &self.edges[i])
    }

    /// Deterministic transition: the target of the first declared outgoing
    /// edge whose guard is positive on `x`; the state itself when none fires.
    pub fn step<V: PredicateValuation<T>>(&self, q: usize, x: &V) -> usize {
        for edge in self.edges_from(q) {
            if eval_guard(x, &edge.guard) > T::zero() {
                return edge.to;
            }
        }
        q
    }

    /// Runs the automaton over a trajectory, consuming every state after the
    /// first (the initial state is fixed by construction and drives no
    /// transition), and returns the state sequence `q_0 .. q_n`.
    pub fn run<V: PredicateValuation<T>>(&self, traj: &[V]) -> Vec<usize> {
        let mut qs = Vec::with_capacity(traj.len());
        let mut q = self.initial;
        qs.push(q);
        for x in traj.iter().skip(1) {
            q = self.step(q, x);
            qs.push(q);
        }
        qs
    }

    /// Whether a trajectory ends in the final set.
    pub fn accepts<V: PredicateValuation<T>>(&self, traj: &[V]) -> bool {
        self.run(traj).last().is_some_and(|&q| self.is_final(q))
    }

    /// Disjunction of the guards of edges from `q` to other, non-trap states;
    /// the unsatisfiable guard when there is no such edge. Meaningful for
    /// non-terminal `q`.
    pub fn outgoing_disjunction(&self, q: usize) -> GuardFormula<T> {
        let mut guards = self
            .edges_from(q)
            .filter(|e| e.to != q && !self.traps[e.to])
            .map(|e| e.guard.clone());
        match guards.next() {
            None => GuardFormula::always_false(),
            Some(first) => guards.fold(first, GuardFormula::or),
        }
    }

    /// Minimum weighted path length from every state to the final set:
    /// zero on final states, infinite where no path exists (traps included).
    pub fn energy(&self) -> EnergyTable<T> {
        let n = self.num_states();
        let mut rev: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for e in &self.edges {
            rev[e.to].push((e.from, e.weight));
        }
        let mut dist = vec![T::infinity(); n];
        let mut done = vec![false; n];
        for q in 0..n {
            if self.finals[q] {
                dist[q] = T::zero();
            }
        }
        for _ in 0..n {
            let mut best: Option<usize> = None;
            for q in 0..n {
                if !done[q] && dist[q].is_finite() {
                    if best.is_none_or(|b| dist[q] < dist[b]) {
                        best = Some(q);
                    }
                }
            }
            let Some(u) = best else { break };
            done[u] = true;
            for &(src, w) in &rev[u] {
                let cand = dist[u] + w;
                if cand < dist[src] {
                    dist[src] = cand;
                }
            }
        }
        EnergyTable { values: dist }
    }

    /// States reachable from the initial state over declared edges.
    pub fn reachable_from_initial(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        let mut stack = vec![self.initial];
        seen[self.initial] = true;
        while let Some(q) = stack.pop() {
            for e in self.edges_from(q) {
                if !seen[e.to] {
                    seen[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        seen
    }

    /// Structural warnings that do not prevent use of the automaton.
    pub fn warnings(&self) -> Vec<String> {
        let reachable = self.reachable_from_initial();
        (0..self.num_states())
            .filter(|&q| !reachable[q])
            .map(|q| format!("state `{}` is unreachable from the initial state", self.names[q]))
            .collect()
    }
}

/// Energy values per automaton state; unreachable states hold `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable<T> {
    values: Vec<T>,
}

impl<T: Scalar> EnergyTable<T> {
    pub fn get(&self, q: usize) -> T {
        self.values[q]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.values.iter().copied().enumerate()
    }
}

#[cfg(test)]
mod tests;
