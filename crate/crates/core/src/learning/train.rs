//! Episode loops: training with Boltzmann (policy graphs) or epsilon-greedy
//! (memoryless Q) exploration, and policy evaluation with optional greedy
//! play.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    derive_stream_seed, AgentEpisode, Learner, LearnError, Policies, PolicyGraph, QTable,
    TrainConfig,
};
use crate::automaton::Fspa;
use crate::game::{EpisodeTrace, FspaGame};
use crate::logic::satisfies;
use crate::scalar::{convert_usize, Scalar};
use crate::world::{extract_ms_plans, AgentAction, MsPlan, Scenario};

/// Per-episode training record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetric<T> {
    pub episode: usize,
    /// Discounted terminal-reward return divided by the reward magnitude;
    /// lies in `[-1, 1]`.
    pub normalized_return: T,
    pub success: bool,
    pub length: usize,
    /// Automaton states visited, starting at the initial state.
    pub automaton_path: Vec<u16>,
}

/// Trained policies plus the per-episode metric stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput<T> {
    pub policies: Policies<T>,
    pub metrics: Vec<EpisodeMetric<T>>,
}

struct AgentIndexer<'a, T: Scalar> {
    scenario: &'a Scenario<T>,
}

impl<'a, T: Scalar> AgentIndexer<'a, T> {
    fn obs(&self, agent: usize, vertex: usize) -> usize {
        self.scenario.agents[agent]
            .reachable
            .binary_search(&vertex)
            .expect("agent positions stay within the reachable set")
    }

    fn action(&self, agent: usize, index: usize) -> AgentAction {
        self.scenario.agents[agent].actions()[index]
    }
}

fn mixed_reward<T: Scalar>(
    base: T,
    rho: T,
    energy: T,
    config: &TrainConfig<T>,
) -> T {
    let mut r = base + config.lambda_rho * rho + config.lambda_energy * energy;
    if let Some(clip) = config.reward_clip {
        r = r.max(-clip).min(clip);
    }
    r
}

/// Trains one policy per agent on the product game.
pub fn train<T: Scalar>(
    scenario: &Scenario<T>,
    fspa: &Fspa<T>,
    config: &TrainConfig<T>,
    learner: Learner,
) -> Result<TrainOutput<T>, LearnError> {
    config.validate()?;
    let horizon = config.horizon.unwrap_or(scenario.horizon);
    let game = FspaGame::new(scenario, fspa, horizon, config.reward_scale)?;
    match learner {
        Learner::PolicyGraph => train_policy_graphs(&game, config),
        Learner::QMemoryless => train_q_tables(&game, config),
    }
}

fn train_policy_graphs<T: Scalar>(
    game: &FspaGame<'_, T>,
    config: &TrainConfig<T>,
) -> Result<TrainOutput<T>, LearnError> {
    let scenario = game.scenario;
    let n = scenario.num_agents();
    let indexer = AgentIndexer { scenario };
    let mut graphs: Vec<PolicyGraph<T>> = scenario
        .agents
        .iter()
        .map(|a| PolicyGraph::new(config.n_internal, a.reachable.len(), a.num_actions(), config.theta))
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(derive_stream_seed(config.seed, i as u64)))
        .collect();

    let mut metrics = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        let mut state = game.reset();
        let mut records: Vec<AgentEpisode<T>> = vec![AgentEpisode::default(); n];
        let mut internals: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            let o0 = indexer.obs(i, game.observe(i, &state));
            internals.push(graphs[i].sample_initial(o0, &mut rngs[i]));
        }
        let mut discounted = T::zero();
        let mut path = vec![state.q as u16];
        loop {
            let mut joint = Vec::with_capacity(n);
            for i in 0..n {
                let o = indexer.obs(i, game.observe(i, &state));
                let a = graphs[i].sample_action(internals[i], &mut rngs[i]);
                records[i].observations.push(o);
                records[i].internals.push(internals[i]);
                records[i].actions.push(a);
                joint.push(indexer.action(i, a));
            }
            let outcome = game.step(&state, &joint)?;
            for i in 0..n {
                records[i].rewards.push(mixed_reward(
                    outcome.base_reward,
                    outcome.shaped_rho[i],
                    outcome.shaped_energy,
                    config,
                ));
            }
            discounted += config.gamma.powi(state.t as i32) * outcome.base_reward;
            path.push(outcome.next.q as u16);
            let done = outcome.done;
            let success = outcome.success;
            state = outcome.next;
            if done {
                metrics.push(EpisodeMetric {
                    episode,
                    normalized_return: discounted / config.reward_scale,
                    success,
                    length: state.t,
                    automaton_path: path,
                });
                break;
            }
            for i in 0..n {
                let o = indexer.obs(i, game.observe(i, &state));
                internals[i] = graphs[i].sample_transition(internals[i], o, &mut rngs[i]);
            }
        }
        for i in 0..n {
            graphs[i].update(&records[i], config.gamma, config.alpha)?;
        }
    }
    Ok(TrainOutput { policies: Policies::Graphs(graphs), metrics })
}

fn train_q_tables<T: Scalar>(
    game: &FspaGame<'_, T>,
    config: &TrainConfig<T>,
) -> Result<TrainOutput<T>, LearnError> {
    let scenario = game.scenario;
    let n = scenario.num_agents();
    let indexer = AgentIndexer { scenario };
    let mut tables: Vec<QTable<T>> = scenario
        .agents
        .iter()
        .map(|a| {
            QTable::new(
                a.reachable.len(),
                a.num_actions(),
                config.q_epsilon_start,
                config.alpha,
                config.gamma,
            )
        })
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..n)
        .map(|i| ChaCha8Rng::seed_from_u64(derive_stream_seed(config.seed, i as u64)))
        .collect();

    let mut metrics = Vec::with_capacity(config.episodes);
    for episode in 0..config.episodes {
        // linear exploration decay across the run
        let frac = if config.episodes > 1 {
            convert_usize::<T>(episode) / convert_usize::<T>(config.episodes - 1)
        } else {
            T::zero()
        };
        let eps = config.q_epsilon_start + (config.q_epsilon_end - config.q_epsilon_start) * frac;
        for table in &mut tables {
            table.epsilon = eps;
        }

        let mut state = game.reset();
        let mut discounted = T::zero();
        let mut path = vec![state.q as u16];
        loop {
            let obs: Vec<usize> = (0..n).map(|i| indexer.obs(i, game.observe(i, &state))).collect();
            let chosen: Vec<usize> =
                (0..n).map(|i| tables[i].epsilon_greedy(obs[i], &mut rngs[i])).collect();
            let joint: Vec<AgentAction> =
                chosen.iter().enumerate().map(|(i, &a)| indexer.action(i, a)).collect();
            let outcome = game.step(&state, &joint)?;
            for i in 0..n {
                let o_next = indexer.obs(i, outcome.next.team.positions[i]);
                let r = mixed_reward(
                    outcome.base_reward,
                    outcome.shaped_rho[i],
                    outcome.shaped_energy,
                    config,
                );
                tables[i].update(obs[i], chosen[i], r, o_next, outcome.done);
            }
            discounted += config.gamma.powi(state.t as i32) * outcome.base_reward;
            path.push(outcome.next.q as u16);
            let done = outcome.done;
            let success = outcome.success;
            state = outcome.next;
            if done {
                metrics.push(EpisodeMetric {
                    episode,
                    normalized_return: discounted / config.reward_scale,
                    success,
                    length: state.t,
                    automaton_path: path,
                });
                break;
            }
        }
    }
    Ok(TrainOutput { policies: Policies::Tables(tables), metrics })
}

/// One evaluation rollout with its satisfaction cross-checks.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalEpisode<T> {
    pub trace: EpisodeTrace<T>,
    /// Automaton acceptance of the rollout.
    pub success: bool,
    /// Mission-formula satisfaction of the extracted team trajectory, when
    /// the scenario declares a formula.
    pub satisfied: Option<bool>,
    /// Steps until the final set was entered, for successful rollouts.
    pub route_length: Option<usize>,
    pub ms_plans: Vec<MsPlan>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<T> {
    pub episodes: Vec<EvalEpisode<T>>,
    pub success_rate: f64,
}

/// Rolls out trained policies without learning. Greedy mode is deterministic:
/// argmax everywhere with the first-index tie-break.
pub fn evaluate<T: Scalar>(
    scenario: &Scenario<T>,
    fspa: &Fspa<T>,
    policies: &Policies<T>,
    config: &TrainConfig<T>,
    episodes: usize,
    greedy: bool,
    seed: u64,
) -> Result<EvalReport<T>, LearnError> {
    let horizon = config.horizon.unwrap_or(scenario.horizon);
    let game = FspaGame::new(scenario, fspa, horizon, config.reward_scale)?;
    let n = scenario.num_agents();
    let indexer = AgentIndexer { scenario };

    let mut report = EvalReport { episodes: Vec::with_capacity(episodes), success_rate: 0.0 };
    let mut successes = 0usize;
    for episode in 0..episodes {
        // one stream per agent and episode: an agent's draws depend neither
        // on the other agents nor on how long earlier episodes ran
        let mut rngs: Vec<ChaCha8Rng> = (0..n)
            .map(|i| {
                let stream = (episode as u64) << 16 | i as u64;
                ChaCha8Rng::seed_from_u64(derive_stream_seed(seed, 0x1000 + stream))
            })
            .collect();
        let mut state = game.reset();
        let mut trace = EpisodeTrace::new(state.clone());
        let mut internals: Vec<usize> = match policies {
            Policies::Graphs(graphs) => (0..n)
                .map(|i| {
                    let o0 = indexer.obs(i, game.observe(i, &state));
                    if greedy {
                        graphs[i].greedy_initial(o0)
                    } else {
                        graphs[i].sample_initial(o0, &mut rngs[i])
                    }
                })
                .collect(),
            Policies::Tables(_) => vec![0; n],
        };
        loop {
            let joint: Vec<AgentAction> = (0..n)
                .map(|i| {
                    let o = indexer.obs(i, game.observe(i, &state));
                    let a = match policies {
                        Policies::Graphs(graphs) => {
                            if greedy {
                                graphs[i].greedy_action(internals[i])
                            } else {
                                graphs[i].sample_action(internals[i], &mut rngs[i])
                            }
                        }
                        Policies::Tables(tables) => {
                            if greedy {
                                tables[i].greedy(o)
                            } else {
                                tables[i].epsilon_greedy(o, &mut rngs[i])
                            }
                        }
                    };
                    indexer.action(i, a)
                })
                .collect();
            let outcome = game.step(&state, &joint)?;
            let done = outcome.done;
            state = outcome.next.clone();
            trace.push(joint, outcome);
            if done {
                break;
            }
            if let Policies::Graphs(graphs) = policies {
                for i in 0..n {
                    let o = indexer.obs(i, game.observe(i, &state));
                    internals[i] = if greedy {
                        graphs[i].greedy_transition(internals[i], o)
                    } else {
                        graphs[i].sample_transition(internals[i], o, &mut rngs[i])
                    };
                }
            }
        }

        let success = trace.success();
        if success {
            successes += 1;
        }
        let team_states = trace.team_states();
        let satisfied = match &scenario.formula {
            Some(phi) => {
                let grounded = scenario.ground_trajectory(&team_states);
                Some(satisfies(&grounded, phi).expect("non-empty trajectory"))
            }
            None => None,
        };
        let route_length = success.then(|| trace.len());
        let ms_plans = extract_ms_plans(scenario, &team_states, &trace.action_log())
            .expect("game-produced trajectories always yield valid plans");
        report.episodes.push(EvalEpisode { trace, success, satisfied, route_length, ms_plans });
    }
    report.success_rate = if episodes == 0 { 0.0 } else { successes as f64 / episodes as f64 };
    Ok(report)
}
