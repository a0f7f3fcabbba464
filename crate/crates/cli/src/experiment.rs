//! Seed batches: reward arms, per-seed training runs, convergence judgments,
//! and the brute-force route-length bound used to grade learned policies.

use std::collections::{HashMap, VecDeque};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use tltl_marl::learning::{
    derive_stream_seed, evaluate, train, Checkpoint, EpisodeMetric, Learner,
};
use tltl_marl::world::AgentAction;
use tltl_marl::{Fspa64, Scenario64, TrainConfig64};

/// A reward arm: which shaping terms are mixed in and which learner runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub name: String,
    pub learner: Learner,
    pub lambda_rho: f64,
    pub lambda_energy: f64,
}

impl ArmSpec {
    pub fn rho() -> Self {
        Self { name: "rho".into(), learner: Learner::PolicyGraph, lambda_rho: 1.0, lambda_energy: 0.0 }
    }

    pub fn rho_energy() -> Self {
        Self {
            name: "rho-j".into(),
            learner: Learner::PolicyGraph,
            lambda_rho: 1.0,
            lambda_energy: 1.0,
        }
    }

    pub fn plain() -> Self {
        Self { name: "none".into(), learner: Learner::PolicyGraph, lambda_rho: 0.0, lambda_energy: 0.0 }
    }

    pub fn memoryless() -> Self {
        Self {
            name: "q-memoryless".into(),
            learner: Learner::QMemoryless,
            lambda_rho: 1.0,
            lambda_energy: 1.0,
        }
    }
}

impl FromStr for ArmSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho" => Ok(Self::rho()),
            "rho-j" => Ok(Self::rho_energy()),
            "none" => Ok(Self::plain()),
            "q-memoryless" => Ok(Self::memoryless()),
            custom => {
                let Some(rest) = custom.strip_prefix("custom:") else {
                    bail!("unknown arm `{custom}` (expected rho, rho-j, none, q-memoryless, or custom:LR,LJ)");
                };
                let parts: Vec<&str> = rest.split(',').collect();
                if parts.len() != 2 {
                    bail!("custom arm needs two weights, e.g. custom:1.0,0.5");
                }
                Ok(Self {
                    name: format!("custom-{}-{}", parts[0], parts[1]),
                    learner: Learner::PolicyGraph,
                    lambda_rho: parts[0].trim().parse()?,
                    lambda_energy: parts[1].trim().parse()?,
                })
            }
        }
    }
}

/// One seed's training run and its convergence judgment.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed_index: u64,
    pub train_seed: u64,
    /// The final greedy joint policy satisfies the mission formula.
    pub converged: bool,
    /// The greedy rollout drove the automaton into the final set.
    pub automaton_success: bool,
    pub route_length: Option<usize>,
    pub wall_secs: f64,
    pub metrics: Vec<EpisodeMetric<f64>>,
    pub checkpoint: Checkpoint<f64>,
}

#[derive(Debug, Clone)]
pub struct ArmReport {
    pub arm: ArmSpec,
    pub runs: Vec<SeedRun>,
}

impl ArmReport {
    pub fn convergence_rate(&self) -> f64 {
        if self.runs.is_empty() {
            return 0.0;
        }
        self.runs.iter().filter(|r| r.converged).count() as f64 / self.runs.len() as f64
    }

    pub fn best_route(&self) -> Option<usize> {
        self.runs.iter().filter(|r| r.converged).filter_map(|r| r.route_length).min()
    }
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub experiment_seed: u64,
    pub arms: Vec<ArmReport>,
    /// Brute-force minimum number of steps any joint plan needs to reach the
    /// final set.
    pub optimal_route: Option<usize>,
}

pub fn config_for(arm: &ArmSpec, base: &TrainConfig64, train_seed: u64) -> TrainConfig64 {
    TrainConfig64 {
        lambda_rho: arm.lambda_rho,
        lambda_energy: arm.lambda_energy,
        seed: train_seed,
        ..base.clone()
    }
}

/// Trains one seed and judges convergence on a single greedy rollout.
pub fn run_seed(
    scenario: &Scenario64,
    fspa: &Fspa64,
    arm: &ArmSpec,
    base: &TrainConfig64,
    experiment_seed: u64,
    arm_index: u64,
    seed_index: u64,
) -> Result<SeedRun> {
    let train_seed = derive_stream_seed(experiment_seed, (arm_index << 32) | seed_index);
    let config = config_for(arm, base, train_seed);
    let start = Instant::now();
    let output = train(scenario, fspa, &config, arm.learner)?;
    let wall_secs = start.elapsed().as_secs_f64();

    let eval_seed = derive_stream_seed(train_seed, 0xEAA1);
    let report = evaluate(scenario, fspa, &output.policies, &config, 1, true, eval_seed)?;
    let episode = &report.episodes[0];
    let converged = episode.satisfied.unwrap_or(episode.success);

    Ok(SeedRun {
        seed_index,
        train_seed,
        converged,
        automaton_success: episode.success,
        route_length: episode.route_length,
        wall_secs,
        metrics: output.metrics,
        checkpoint: Checkpoint {
            scenario_name: scenario.name.clone(),
            learner: arm.learner,
            config,
            policies: output.policies,
        },
    })
}

/// Runs every (arm, seed) pair, up to `jobs` in parallel. Results are
/// deterministic per (experiment seed, arm, seed index) regardless of the
/// parallelism.
pub fn run_batch(
    scenario: &Scenario64,
    fspa: &Fspa64,
    arms: &[(ArmSpec, usize)],
    base: &TrainConfig64,
    experiment_seed: u64,
    jobs: usize,
) -> Result<BatchReport> {
    let tasks: Vec<(usize, u64)> = arms
        .iter()
        .enumerate()
        .flat_map(|(a, (_, seeds))| (0..*seeds as u64).map(move |k| (a, k)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let runs: Result<Vec<(usize, SeedRun)>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(arm_index, seed_index)| {
                let run = run_seed(
                    scenario,
                    fspa,
                    &arms[arm_index].0,
                    base,
                    experiment_seed,
                    arm_index as u64,
                    seed_index,
                )?;
                Ok((arm_index, run))
            })
            .collect()
    });
    let mut by_arm: Vec<ArmReport> =
        arms.iter().map(|(arm, _)| ArmReport { arm: arm.clone(), runs: Vec::new() }).collect();
    for (arm_index, run) in runs? {
        by_arm[arm_index].runs.push(run);
    }
    for report in &mut by_arm {
        report.runs.sort_by_key(|r| r.seed_index);
    }

    let horizon = base.horizon.unwrap_or(scenario.horizon);
    let optimal_route = minimum_route_length(scenario, fspa, horizon.min(32));
    Ok(BatchReport { experiment_seed, arms: by_arm, optimal_route })
}

/// Breadth-first search over joint plans in the product of positions and
/// automaton state: the fewest steps any plan needs to reach the final set.
pub fn minimum_route_length(
    scenario: &Scenario64,
    fspa: &Fspa64,
    max_steps: usize,
) -> Option<usize> {
    let n = scenario.num_agents();
    let start = (scenario.initial_team_state().positions, fspa.initial());
    let mut seen: HashMap<(Vec<usize>, usize), usize> = HashMap::new();
    seen.insert(start.clone(), 0);
    let mut queue = VecDeque::new();
    queue.push_back(start);

    while let Some((positions, q)) = queue.pop_front() {
        let depth = seen[&(positions.clone(), q)];
        if depth >= max_steps {
            continue;
        }
        // meaningful actions from here: adjacent moves, own services, idle
        let candidates: Vec<Vec<AgentAction>> = (0..n)
            .map(|i| {
                let model = &scenario.agents[i];
                let mut actions: Vec<AgentAction> = scenario
                    .graph
                    .neighbors(positions[i])
                    .iter()
                    .filter(|&&w| model.can_reach(w))
                    .map(|&w| AgentAction::Goto(w))
                    .collect();
                actions.extend(model.capabilities.iter().map(|&r| AgentAction::Service(r)));
                actions.push(AgentAction::Idle);
                actions
            })
            .collect();
        let mut joint = vec![0usize; n];
        loop {
            let actions: Vec<AgentAction> =
                (0..n).map(|i| candidates[i][joint[i]]).collect();
            let next_positions: Vec<usize> = (0..n)
                .map(|i| scenario.agent_step(i, positions[i], &actions[i]).expect("valid action"))
                .collect();
            let completed = scenario.completed_requests(&next_positions, &actions);
            let team =
                tltl_marl::world::TeamState { positions: next_positions.clone(), completed };
            let q_next = fspa.step(q, &scenario.ground(&team));
            if fspa.is_final(q_next) {
                return Some(depth + 1);
            }
            if !fspa.is_trap(q_next) {
                let key = (next_positions, q_next);
                if !seen.contains_key(&key) {
                    seen.insert(key.clone(), depth + 1);
                    queue.push_back(key);
                }
            }
            // advance the mixed-radix joint-action counter
            let mut i = 0;
            while i < n {
                joint[i] += 1;
                if joint[i] < candidates[i].len() {
                    break;
                }
                joint[i] = 0;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    None
}
