//! Deterministic product game of the team transition systems and the mission
//! automaton.
//!
//! A step resolves motions first, then service completions at the new
//! positions, then advances the automaton on the resulting team state. Three
//! reward signals are produced: the sparse terminal reward on entering the
//! final or trap set, a per-agent robustness difference against the
//! counterfactual where that agent idled, and the shared energy decrease of
//! the automaton state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::{EnergyTable, Fspa};
use crate::logic::{eval_guard, GuardFormula};
use crate::scalar::{rho_max, Scalar};
use crate::world::{AgentAction, RequestSet, Scenario, TeamState, VertexId, WorldError};

/// Product state: team state, automaton state, and step index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub team: TeamState,
    pub q: usize,
    pub t: usize,
}

/// Everything produced by one game step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome<T> {
    pub next: GameState,
    /// Shared terminal reward: `+C` on first entry to the final set, `-C` on
    /// first entry to the trap set, zero otherwise.
    pub base_reward: T,
    /// Per-agent robustness-difference shaping.
    pub shaped_rho: Vec<T>,
    /// Energy decrease of the automaton transition, identical for all agents.
    pub shaped_energy: T,
    pub done: bool,
    pub success: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("episode is finished; reset before stepping")]
    EpisodeFinished,
    #[error("expected {expected} agent actions, got {got}")]
    WrongActionCount { expected: usize, got: usize },
    #[error("the initial automaton state cannot reach the final set")]
    InitialEnergyInfinite,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// The product game. Immutable once built; callers thread [`GameState`]
/// values through [`FspaGame::step`], so any number of episodes can run
/// concurrently over one instance.
pub struct FspaGame<'a, T> {
    pub scenario: &'a Scenario<T>,
    pub fspa: &'a Fspa<T>,
    energy: EnergyTable<T>,
    /// Outgoing-edge disjunction per non-terminal automaton state.
    disjunctions: Vec<Option<GuardFormula<T>>>,
    horizon: usize,
    reward_scale: T,
}

impl<'a, T: Scalar> FspaGame<'a, T> {
    pub fn new(
        scenario: &'a Scenario<T>,
        fspa: &'a Fspa<T>,
        horizon: usize,
        reward_scale: T,
    ) -> Result<Self, GameError> {
        let energy = fspa.energy();
        if !energy.get(fspa.initial()).is_finite() {
            return Err(GameError::InitialEnergyInfinite);
        }
        let disjunctions = (0..fspa.num_states())
            .map(|q| (!fspa.is_terminal(q)).then(|| fspa.outgoing_disjunction(q)))
            .collect();
        Ok(Self { scenario, fspa, energy, disjunctions, horizon, reward_scale })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn energy_table(&self) -> &EnergyTable<T> {
        &self.energy
    }

    /// Initial product state: agents at their start vertices, nothing
    /// completed, automaton at its initial state.
    pub fn reset(&self) -> GameState {
        GameState { team: self.scenario.initial_team_state(), q: self.fspa.initial(), t: 0 }
    }

    pub fn is_done(&self, s: &GameState) -> bool {
        self.fspa.is_terminal(s.q) || s.t >= self.horizon
    }

    /// Agent `i` observes its own vertex only.
    pub fn observe(&self, agent: usize, s: &GameState) -> VertexId {
        s.team.positions[agent]
    }

    /// Advances the product state under a joint action.
    pub fn step(&self, s: &GameState, actions: &[AgentAction]) -> Result<StepOutcome<T>, GameError> {
        if self.is_done(s) {
            return Err(GameError::EpisodeFinished);
        }
        let n = self.scenario.num_agents();
        if actions.len() != n {
            return Err(GameError::WrongActionCount { expected: n, got: actions.len() });
        }
        let mut positions = Vec::with_capacity(n);
        for (i, action) in actions.iter().enumerate() {
            positions.push(self.scenario.agent_step(i, s.team.positions[i], action)?);
        }
        let completed = self.scenario.completed_requests(&positions, actions);
        let team = TeamState { positions, completed };
        let q_next = self.fspa.step(s.q, &self.scenario.ground(&team));

        let base_reward = self.base_reward(s.q, q_next);
        let shaped_energy = self.shaped_energy(s.q, q_next);
        let shaped_rho = (0..n)
            .map(|i| self.shaped_rho(i, s, actions, &team, q_next))
            .collect();

        let t = s.t + 1;
        let done = self.fspa.is_terminal(q_next) || t >= self.horizon;
        let success = self.fspa.is_final(q_next);
        let next = GameState { team, q: q_next, t };
        Ok(StepOutcome { next, base_reward, shaped_rho, shaped_energy, done, success })
    }

    /// `+C` on first entry to the final set, `-C` on first entry to the trap
    /// set, zero otherwise.
    pub fn base_reward(&self, q_prev: usize, q_next: usize) -> T {
        if self.fspa.is_final(q_next) && !self.fspa.is_final(q_prev) {
            self.reward_scale
        } else if self.fspa.is_trap(q_next) && !self.fspa.is_trap(q_prev) {
            -self.reward_scale
        } else {
            T::zero()
        }
    }

    /// Energy decrease `J(q_prev) - J(q_next)`. Entering an infinite-energy
    /// state from a finite one yields the large negative stand-in; between
    /// two infinite-energy states the difference is zero.
    pub fn shaped_energy(&self, q_prev: usize, q_next: usize) -> T {
        let before = self.energy.get(q_prev);
        let after = self.energy.get(q_next);
        match (before.is_finite(), after.is_finite()) {
            (true, true) => before - after,
            (true, false) => -rho_max::<T>(),
            (false, true) => rho_max::<T>(),
            (false, false) => T::zero(),
        }
    }

    /// The team and automaton state that would have resulted had agent `i`
    /// idled: agent `i` keeps its pre-step vertex, completions requiring its
    /// action are removed, and the automaton is re-stepped from `q_t`.
    pub fn predicted_state(
        &self,
        agent: usize,
        s: &GameState,
        x_next: &TeamState,
    ) -> (TeamState, usize) {
        let mut positions = x_next.positions.clone();
        positions[agent] = s.team.positions[agent];
        let mut completed = RequestSet::empty();
        for r in x_next.completed.iter() {
            if !self.scenario.requests[r].owners.contains(&agent) {
                completed.insert(r);
            }
        }
        let team = TeamState { positions, completed };
        let q = self.fspa.step(s.q, &self.scenario.ground(&team));
        (team, q)
    }

    /// Robustness of the outgoing-edge disjunction at the realized next state
    /// minus at the idle-prediction for agent `i`. Zero whenever the agent
    /// idled, since prediction and reality then coincide.
    pub fn shaped_rho(
        &self,
        agent: usize,
        s: &GameState,
        actions: &[AgentAction],
        x_next: &TeamState,
        q_next: usize,
    ) -> T {
        if actions[agent] == AgentAction::Idle {
            return T::zero();
        }
        let realized = self.disjunction_value(q_next, x_next);
        let (predicted_team, predicted_q) = self.predicted_state(agent, s, x_next);
        let predicted = self.disjunction_value(predicted_q, &predicted_team);
        realized - predicted
    }

    /// Robustness of the outgoing disjunction, taken as zero on terminal
    /// automaton states so shaping falls silent after success or failure.
    fn disjunction_value(&self, q: usize, x: &TeamState) -> T {
        match &self.disjunctions[q] {
            Some(guard) => eval_guard(&self.scenario.ground(x), guard),
            None => T::zero(),
        }
    }
}

/// One recorded episode: the initial state plus every step taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace<T> {
    pub start: GameState,
    pub steps: Vec<TraceStep<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep<T> {
    pub actions: Vec<AgentAction>,
    pub outcome: StepOutcome<T>,
}

impl<T: Scalar> EpisodeTrace<T> {
    pub fn new(start: GameState) -> Self {
        Self { start, steps: Vec::new() }
    }

    pub fn push(&mut self, actions: Vec<AgentAction>, outcome: StepOutcome<T>) {
        self.steps.push(TraceStep { actions, outcome });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last_state(&self) -> &GameState {
        self.steps.last().map_or(&self.start, |s| &s.outcome.next)
    }

    pub fn success(&self) -> bool {
        self.steps.last().is_some_and(|s| s.outcome.success)
    }

    /// The team trajectory `x_0 .. x_n` this episode produced.
    pub fn team_states(&self) -> Vec<TeamState> {
        let mut states = Vec::with_capacity(self.steps.len() + 1);
        states.push(self.start.team.clone());
        states.extend(self.steps.iter().map(|s| s.outcome.next.team.clone()));
        states
    }

    /// The joint action log, aligned with [`Self::team_states`].
    pub fn action_log(&self) -> Vec<Vec<AgentAction>> {
        self.steps.iter().map(|s| s.actions.clone()).collect()
    }

    /// Internal-consistency check: states chain, and `done` appears at most
    /// once, at the end.
    pub fn validate_chain(&self) -> bool {
        let mut prev_t = self.start.t;
        for (i, step) in self.steps.iter().enumerate() {
            if step.outcome.next.t != prev_t + 1 {
                return false;
            }
            prev_t = step.outcome.next.t;
            if step.outcome.done && i + 1 != self.steps.len() {
                return false;
            }
        }
        true
    }

    /// Flat per-step records for line-delimited export.
    pub fn records(&self, fspa: &Fspa<T>) -> Vec<TraceRecord<T>>
    where
        T: Serialize,
    {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, step)| TraceRecord {
                step: i + 1,
                positions: step.outcome.next.team.positions.clone(),
                completed: step.outcome.next.team.completed.iter().collect(),
                actions: step.actions.clone(),
                q: fspa.state_name(step.outcome.next.q).to_string(),
                base_reward: step.outcome.base_reward,
                shaped_rho: step.outcome.shaped_rho.clone(),
                shaped_energy: step.outcome.shaped_energy,
                done: step.outcome.done,
                success: step.outcome.success,
            })
            .collect()
    }
}

/// One line of an exported episode trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    pub step: usize,
    pub positions: Vec<VertexId>,
    pub completed: Vec<usize>,
    pub actions: Vec<AgentAction>,
    pub q: String,
    pub base_reward: T,
    pub shaped_rho: Vec<T>,
    pub shaped_energy: T,
    pub done: bool,
    pub success: bool,
}

#[cfg(test)]
mod tests;
