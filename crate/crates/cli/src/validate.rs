//! Structural checks and the automaton-against-formula cross-validation.
//!
//! The cross-check samples random trajectories through the world dynamics
//! (biased toward visiting request sites and servicing, so completions happen
//! in many orders) and asserts that automaton acceptance coincides with
//! positive mission-formula robustness on every sample.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use tltl_marl::learning::derive_stream_seed;
use tltl_marl::logic::{eval_guard, robustness};
use tltl_marl::world::{AgentAction, RequestSet, TeamState};
use tltl_marl::{Formula64, Fspa64, Scenario64};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub scenario_warnings: Vec<String>,
    pub fspa_warnings: Vec<String>,
    pub guard_overlap_warnings: Vec<String>,
    pub energy: Vec<EnergyRow>,
    pub cross_check: Option<CrossCheck>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyRow {
    pub state: String,
    /// `None` marks infinite energy (no path to the final set).
    pub value: Option<f64>,
    pub is_final: bool,
    pub is_trap: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossCheck {
    pub samples: usize,
    pub max_len: usize,
    /// How many sampled trajectories the automaton accepted.
    pub accepted: usize,
    /// How many ended in the trap set.
    pub trapped: usize,
    pub counterexamples: Vec<Counterexample>,
}

/// A sampled trajectory on which automaton acceptance and formula
/// satisfaction disagree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Counterexample {
    pub accepted: bool,
    pub robustness: f64,
    pub positions: Vec<Vec<usize>>,
    pub completed: Vec<Vec<usize>>,
    pub automaton_path: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.cross_check.as_ref().is_none_or(|c| c.counterexamples.is_empty())
    }
}

/// Random trajectory sampler over the world dynamics. Roughly half the
/// episodes are pure random walks; the rest follow a random global request
/// order (with action jitter), so completions happen often and in every
/// order, exercising both the accepting and the trapping runs.
pub struct TrajectorySampler<'a> {
    scenario: &'a Scenario64,
    /// Per request: per vertex, a neighbor strictly closer to the nearest
    /// site of that request.
    next_hop: Vec<Vec<Option<usize>>>,
}

impl<'a> TrajectorySampler<'a> {
    pub fn new(scenario: &'a Scenario64) -> Self {
        let graph = &scenario.graph;
        let next_hop = scenario
            .requests
            .iter()
            .map(|req| {
                let mut combined = vec![u32::MAX; graph.num_vertices()];
                for &site in &req.locations {
                    for (v, d) in graph.distance_field(site).into_iter().enumerate() {
                        combined[v] = combined[v].min(d);
                    }
                }
                (0..graph.num_vertices())
                    .map(|v| {
                        graph
                            .neighbors(v)
                            .iter()
                            .copied()
                            .find(|&w| combined[w] < combined[v])
                    })
                    .collect()
            })
            .collect();
        Self { scenario, next_hop }
    }

    /// Move toward the request's nearest site, or service it when standing on
    /// one.
    fn pursue(&self, agent: usize, v: usize, request: usize) -> AgentAction {
        let model = &self.scenario.agents[agent];
        match self.next_hop[request][v] {
            Some(hop) if model.can_reach(hop) => AgentAction::Goto(hop),
            _ if model.can_service(request) => AgentAction::Service(request),
            _ => AgentAction::Idle,
        }
    }

    fn random_action<R: Rng>(&self, agent: usize, rng: &mut R) -> AgentAction {
        let model = &self.scenario.agents[agent];
        model.actions()[rng.random_range(0..model.num_actions())]
    }

    /// One trajectory of `len` states (so `len - 1` joint steps).
    pub fn sample<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<TeamState> {
        let scenario = self.scenario;
        let n = scenario.num_agents();
        let n_requests = scenario.requests.len();

        // a random global order in which the team tries to finish requests;
        // None means a pure random walk
        let plan: Option<Vec<usize>> = (rng.random::<f64>() < 0.6).then(|| {
            let mut order: Vec<usize> = (0..n_requests).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, rng.random_range(0..=i));
            }
            order
        });
        let jitter = 0.05 + rng.random::<f64>() * 0.2;

        let mut finished = vec![false; n_requests];
        let mut states = Vec::with_capacity(len);
        states.push(scenario.initial_team_state());
        while states.len() < len {
            let current = states.last().unwrap();
            let actions: Vec<AgentAction> = (0..n)
                .map(|i| {
                    if rng.random::<f64>() < jitter {
                        return self.random_action(i, rng);
                    }
                    match &plan {
                        None => self.random_action(i, rng),
                        Some(order) => {
                            // the next unfinished request this agent owns
                            let target = order.iter().copied().find(|&r| {
                                !finished[r] && scenario.agents[i].can_service(r)
                            });
                            match target {
                                Some(r) => self.pursue(i, current.positions[i], r),
                                None => AgentAction::Idle,
                            }
                        }
                    }
                })
                .collect();
            let positions: Vec<usize> = (0..n)
                .map(|i| {
                    scenario
                        .agent_step(i, current.positions[i], &actions[i])
                        .expect("sampled actions are always in the agent action set")
                })
                .collect();
            let completed = scenario.completed_requests(&positions, &actions);
            for r in completed.iter() {
                finished[r] = true;
            }
            states.push(TeamState { positions, completed });
        }
        states
    }
}

/// Acceptance-versus-robustness agreement over sampled trajectories.
pub fn cross_validate(
    scenario: &Scenario64,
    fspa: &Fspa64,
    formula: &Formula64,
    samples: usize,
    max_len: usize,
    seed: u64,
) -> CrossCheck {
    let sampler = TrajectorySampler::new(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(seed, 0xC805));
    let mut counterexamples = Vec::new();
    let mut accepted_count = 0;
    let mut trapped_count = 0;
    for _ in 0..samples {
        let len = rng.random_range(2..=max_len.max(2));
        let states = sampler.sample(len, &mut rng);
        let grounded = scenario.ground_trajectory(&states);
        let run = fspa.run(&grounded);
        let last = *run.last().unwrap();
        let accepted = fspa.is_final(last);
        if accepted {
            accepted_count += 1;
        }
        if fspa.is_trap(last) {
            trapped_count += 1;
        }
        let rho = robustness(&grounded, formula, 0).expect("non-empty trajectory");
        if accepted != (rho > 0.0) && counterexamples.len() < 5 {
            counterexamples.push(Counterexample {
                accepted,
                robustness: rho,
                positions: states.iter().map(|s| s.positions.clone()).collect(),
                completed: states.iter().map(|s| s.completed.iter().collect()).collect(),
                automaton_path: run.iter().map(|&q| fspa.state_name(q).to_string()).collect(),
            });
        }
    }
    CrossCheck { samples, max_len, accepted: accepted_count, trapped: trapped_count, counterexamples }
}

/// Samples random team states (random positions, random completion sets) and
/// warns when more than one non-self-loop guard of a state fires at once.
pub fn guard_overlap_warnings(
    scenario: &Scenario64,
    fspa: &Fspa64,
    samples: usize,
    seed: u64,
) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_stream_seed(seed, 0xE8C1));
    let n = scenario.num_agents();
    let n_requests = scenario.requests.len();
    let mut warnings = Vec::new();
    for _ in 0..samples {
        let positions: Vec<usize> = (0..n)
            .map(|i| {
                let reach = &scenario.agents[i].reachable;
                reach[rng.random_range(0..reach.len())]
            })
            .collect();
        let mut completed = RequestSet::empty();
        for r in 0..n_requests {
            if rng.random::<f64>() < 0.3 {
                completed.insert(r);
            }
        }
        let state = TeamState { positions, completed };
        let grounded = scenario.ground(&state);
        for q in 0..fspa.num_states() {
            let firing: Vec<String> = fspa
                .edges_from(q)
                .filter(|e| e.to != q && eval_guard(&grounded, &e.guard) > 0.0)
                .map(|e| format!("{} -> {}", fspa.state_name(q), fspa.state_name(e.to)))
                .collect();
            if firing.len() > 1 {
                let warning = format!(
                    "guards overlap at state {}: {}",
                    fspa.state_name(q),
                    firing.join(", ")
                );
                if !warnings.contains(&warning) {
                    warnings.push(warning);
                }
            }
        }
    }
    warnings
}

/// Energy table rows for reporting.
pub fn energy_rows(fspa: &Fspa64) -> Vec<EnergyRow> {
    let energy = fspa.energy();
    (0..fspa.num_states())
        .map(|q| EnergyRow {
            state: fspa.state_name(q).to_string(),
            value: energy.get(q).is_finite().then(|| energy.get(q)),
            is_final: fspa.is_final(q),
            is_trap: fspa.is_trap(q),
        })
        .collect()
}
