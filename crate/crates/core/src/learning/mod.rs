//! Finite-state stochastic controllers and their training.
//!
//! Each agent holds a policy graph: a table of internal states with softmax
//! action and internal-transition distributions, all at a fixed temperature.
//! Training is an episodic likelihood-ratio gradient over the three parameter
//! tables. A memoryless Q-learning baseline shares the same environment
//! plumbing.

mod train;

pub use train::{
    evaluate, train, EpisodeMetric, EvalEpisode, EvalReport, TrainOutput,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::GameError;
use crate::scalar::{convert, Scalar};
use crate::world::WorldError;

/// Splits one root seed into independent deterministic stream seeds
/// (splitmix64 over the pair).
pub fn derive_stream_seed(root: u64, stream: u64) -> u64 {
    let mut z = root ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Softmax probabilities of `weights` at temperature `theta`.
pub fn softmax_probs<T: Scalar>(weights: &[T], theta: T) -> Vec<T> {
    let mut probs = vec![T::zero(); weights.len()];
    softmax_into(weights, theta, &mut probs);
    probs
}

fn softmax_into<T: Scalar>(weights: &[T], theta: T, out: &mut [T]) {
    let max = weights.iter().copied().fold(-T::infinity(), T::max);
    let mut total = T::zero();
    for (o, &w) in out.iter_mut().zip(weights) {
        let e = ((w - max) / theta).exp();
        *o = e;
        total += e;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Samples an index from the softmax distribution over `weights`.
pub fn softmax_sample<T: Scalar, R: Rng>(weights: &[T], theta: T, rng: &mut R) -> usize {
    let probs = softmax_probs(weights, theta);
    let u: T = convert(rng.random::<f64>());
    let mut acc = T::zero();
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// First index holding the maximum value; the fixed tie-break for greedy play.
pub fn argmax_first<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Gradient of `log softmax(weights / theta)[chosen]` with respect to the
/// weights, scaled by `scale` and accumulated into `out`.
fn add_log_softmax_grad<T: Scalar>(weights: &[T], theta: T, chosen: usize, scale: T, out: &mut [T]) {
    let probs = softmax_probs(weights, theta);
    for (j, (o, p)) in out.iter_mut().zip(&probs).enumerate() {
        let indicator = if j == chosen { T::one() } else { T::zero() };
        *o += scale * (indicator - *p) / theta;
    }
}

/// A stochastic finite-state controller over one agent's observations and
/// actions: an initial-state table indexed by the first observation, an
/// action table per internal state, and an internal-transition table per
/// (internal state, observation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyGraph<T> {
    pub n_internal: usize,
    pub n_obs: usize,
    pub n_actions: usize,
    pub theta: T,
    w_action: Vec<T>,
    w_trans: Vec<T>,
    w_init: Vec<T>,
}

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error("episode records are inconsistent: {0}")]
    MalformedEpisode(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl From<WorldError> for LearnError {
    fn from(err: WorldError) -> Self {
        LearnError::Game(GameError::World(err))
    }
}

impl<T: Scalar> PolicyGraph<T> {
    /// Zero-initialized tables: every distribution starts uniform.
    pub fn new(n_internal: usize, n_obs: usize, n_actions: usize, theta: T) -> Self {
        assert!(n_internal >= 1 && n_obs >= 1 && n_actions >= 1);
        Self {
            n_internal,
            n_obs,
            n_actions,
            theta,
            w_action: vec![T::zero(); n_internal * n_actions],
            w_trans: vec![T::zero(); n_internal * n_obs * n_internal],
            w_init: vec![T::zero(); n_obs * n_internal],
        }
    }

    fn action_row(&self, n: usize) -> &[T] {
        &self.w_action[n * self.n_actions..(n + 1) * self.n_actions]
    }

    fn trans_row(&self, n: usize, o: usize) -> &[T] {
        let base = (n * self.n_obs + o) * self.n_internal;
        &self.w_trans[base..base + self.n_internal]
    }

    fn init_row(&self, o: usize) -> &[T] {
        &self.w_init[o * self.n_internal..(o + 1) * self.n_internal]
    }

    pub fn action_weights(&self, n: usize) -> &[T] {
        self.action_row(n)
    }

    pub fn trans_weights(&self, n: usize, o: usize) -> &[T] {
        self.trans_row(n, o)
    }

    pub fn init_weights(&self, o: usize) -> &[T] {
        self.init_row(o)
    }

    pub fn action_weights_mut(&mut self, n: usize) -> &mut [T] {
        &mut self.w_action[n * self.n_actions..(n + 1) * self.n_actions]
    }

    pub fn trans_weights_mut(&mut self, n: usize, o: usize) -> &mut [T] {
        let base = (n * self.n_obs + o) * self.n_internal;
        &mut self.w_trans[base..base + self.n_internal]
    }

    pub fn init_weights_mut(&mut self, o: usize) -> &mut [T] {
        &mut self.w_init[o * self.n_internal..(o + 1) * self.n_internal]
    }

    pub fn initial_probs(&self, o: usize) -> Vec<T> {
        softmax_probs(self.init_row(o), self.theta)
    }

    pub fn action_probs(&self, n: usize) -> Vec<T> {
        softmax_probs(self.action_row(n), self.theta)
    }

    pub fn transition_probs(&self, n: usize, o: usize) -> Vec<T> {
        softmax_probs(self.trans_row(n, o), self.theta)
    }

    pub fn sample_initial<R: Rng>(&self, o: usize, rng: &mut R) -> usize {
        softmax_sample(self.init_row(o), self.theta, rng)
    }

    pub fn sample_action<R: Rng>(&self, n: usize, rng: &mut R) -> usize {
        softmax_sample(self.action_row(n), self.theta, rng)
    }

    pub fn sample_transition<R: Rng>(&self, n: usize, o: usize, rng: &mut R) -> usize {
        softmax_sample(self.trans_row(n, o), self.theta, rng)
    }

    pub fn greedy_initial(&self, o: usize) -> usize {
        argmax_first(self.init_row(o))
    }

    pub fn greedy_action(&self, n: usize) -> usize {
        argmax_first(self.action_row(n))
    }

    pub fn greedy_transition(&self, n: usize, o: usize) -> usize {
        argmax_first(self.trans_row(n, o))
    }

    /// Log-probability of every recorded choice of an episode under the
    /// current parameters.
    pub fn episode_log_prob(&self, episode: &AgentEpisode<T>) -> Result<T, LearnError> {
        episode.check()?;
        let mut total = T::zero();
        total += self.initial_probs(episode.observations[0])[episode.internals[0]].ln();
        for t in 0..episode.len() {
            total += self.action_probs(episode.internals[t])[episode.actions[t]].ln();
            if t >= 1 {
                total += self
                    .transition_probs(episode.internals[t - 1], episode.observations[t])
                    [episode.internals[t]]
                    .ln();
            }
        }
        Ok(total)
    }

    /// Likelihood-ratio gradient ascent on the discounted return of one
    /// episode. Every recorded choice at step `t` is reinforced by the
    /// discounted reward tail `sum_{s >= t} gamma^s r_s`, which is the
    /// per-step eligibility replay of the episode in closed form. Gradients
    /// are taken at the pre-update parameters and applied once.
    pub fn update(
        &mut self,
        episode: &AgentEpisode<T>,
        gamma: T,
        alpha: T,
    ) -> Result<(), LearnError> {
        episode.check()?;
        let steps = episode.len();
        if steps == 0 {
            return Ok(());
        }
        // discounted reward tails, measured from episode start
        let mut tails = vec![T::zero(); steps];
        let mut acc = T::zero();
        for t in (0..steps).rev() {
            acc += gamma.powi(t as i32) * episode.rewards[t];
            tails[t] = acc;
        }

        let mut grad_action = vec![T::zero(); self.w_action.len()];
        let mut grad_trans = vec![T::zero(); self.w_trans.len()];
        let mut grad_init = vec![T::zero(); self.w_init.len()];

        let o0 = episode.observations[0];
        add_log_softmax_grad(
            self.init_row(o0),
            self.theta,
            episode.internals[0],
            alpha * tails[0],
            &mut grad_init[o0 * self.n_internal..(o0 + 1) * self.n_internal],
        );
        for t in 0..steps {
            let n = episode.internals[t];
            add_log_softmax_grad(
                self.action_row(n),
                self.theta,
                episode.actions[t],
                alpha * tails[t],
                &mut grad_action[n * self.n_actions..(n + 1) * self.n_actions],
            );
            if t >= 1 {
                let prev = episode.internals[t - 1];
                let o = episode.observations[t];
                let base = (prev * self.n_obs + o) * self.n_internal;
                add_log_softmax_grad(
                    self.trans_row(prev, o),
                    self.theta,
                    episode.internals[t],
                    alpha * tails[t],
                    &mut grad_trans[base..base + self.n_internal],
                );
            }
        }

        for (w, g) in self.w_action.iter_mut().zip(&grad_action) {
            *w += *g;
        }
        for (w, g) in self.w_trans.iter_mut().zip(&grad_trans) {
            *w += *g;
        }
        for (w, g) in self.w_init.iter_mut().zip(&grad_init) {
            *w += *g;
        }
        Ok(())
    }
}

/// One agent's view of an episode: its observation indices, the internal
/// states and actions it sampled, and its per-step rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEpisode<T> {
    /// `o_0 .. o_{L-1}`: the observation before each action.
    pub observations: Vec<usize>,
    /// `n_0 .. n_{L-1}`: the internal state each action was sampled from.
    pub internals: Vec<usize>,
    /// `a_0 .. a_{L-1}`: sampled action indices.
    pub actions: Vec<usize>,
    /// `r_0 .. r_{L-1}`: the agent's mixed reward per step.
    pub rewards: Vec<T>,
}

impl<T> Default for AgentEpisode<T> {
    fn default() -> Self {
        Self {
            observations: Vec::new(),
            internals: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
        }
    }
}

impl<T: Scalar> AgentEpisode<T> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn check(&self) -> Result<(), LearnError> {
        let l = self.actions.len();
        if self.observations.len() != l || self.internals.len() != l || self.rewards.len() != l {
            return Err(LearnError::MalformedEpisode(format!(
                "{} observations, {} internals, {} actions, {} rewards",
                self.observations.len(),
                self.internals.len(),
                l,
                self.rewards.len()
            )));
        }
        Ok(())
    }
}

/// Tabular action values for the memoryless baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable<T> {
    pub n_obs: usize,
    pub n_actions: usize,
    pub epsilon: T,
    pub alpha: T,
    pub gamma: T,
    values: Vec<T>,
}

impl<T: Scalar> QTable<T> {
    pub fn new(n_obs: usize, n_actions: usize, epsilon: T, alpha: T, gamma: T) -> Self {
        Self { n_obs, n_actions, epsilon, alpha, gamma, values: vec![T::zero(); n_obs * n_actions] }
    }

    fn row(&self, o: usize) -> &[T] {
        &self.values[o * self.n_actions..(o + 1) * self.n_actions]
    }

    pub fn value(&self, o: usize, a: usize) -> T {
        self.values[o * self.n_actions + a]
    }

    /// One-step temporal-difference update toward `r + gamma * max_a' Q[o',a']`,
    /// bootstrapping zero on terminal steps.
    pub fn update(&mut self, o: usize, a: usize, reward: T, o_next: usize, done: bool) {
        let bootstrap = if done {
            T::zero()
        } else {
            self.row(o_next).iter().copied().fold(-T::infinity(), T::max)
        };
        let target = reward + self.gamma * bootstrap;
        let cell = &mut self.values[o * self.n_actions + a];
        *cell += self.alpha * (target - *cell);
    }

    pub fn greedy(&self, o: usize) -> usize {
        argmax_first(self.row(o))
    }

    pub fn epsilon_greedy<R: Rng>(&self, o: usize, rng: &mut R) -> usize {
        if rng.random::<f64>() < self.epsilon.to_f64().expect("epsilon convertible") {
            rng.random_range(0..self.n_actions)
        } else {
            self.greedy(o)
        }
    }
}

/// Which learner drives an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    PolicyGraph,
    QMemoryless,
}

/// Trained per-agent policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policies<T> {
    Graphs(Vec<PolicyGraph<T>>),
    Tables(Vec<QTable<T>>),
}

impl<T> Policies<T> {
    pub fn learner(&self) -> Learner {
        match self {
            Policies::Graphs(_) => Learner::PolicyGraph,
            Policies::Tables(_) => Learner::QMemoryless,
        }
    }

    pub fn num_agents(&self) -> usize {
        match self {
            Policies::Graphs(g) => g.len(),
            Policies::Tables(t) => t.len(),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    pub episodes: usize,
    /// Episode horizon; `None` uses the scenario's.
    pub horizon: Option<usize>,
    pub gamma: T,
    pub alpha: T,
    pub theta: T,
    pub n_internal: usize,
    /// Weight of the per-agent robustness-difference reward.
    pub lambda_rho: T,
    /// Weight of the shared energy-decrease reward.
    pub lambda_energy: T,
    /// Terminal reward magnitude.
    pub reward_scale: T,
    /// Per-step mixed rewards fed to the learners are clipped to this
    /// magnitude; keeps the infinite-energy stand-in from blowing up the
    /// gradient. `None` disables clipping.
    pub reward_clip: Option<T>,
    /// Exploration schedule of the Q baseline: linear decay across episodes.
    pub q_epsilon_start: T,
    pub q_epsilon_end: T,
    pub seed: u64,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            horizon: None,
            gamma: convert(0.995),
            alpha: convert(0.01),
            theta: T::one(),
            n_internal: 10,
            lambda_rho: T::one(),
            lambda_energy: T::one(),
            reward_scale: T::one(),
            reward_clip: Some(convert(10.0)),
            q_epsilon_start: convert(0.3),
            q_epsilon_end: convert(0.05),
            seed: 0,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.gamma > T::zero() && self.gamma <= T::one()) {
            return Err(LearnError::InvalidConfig("gamma must lie in (0, 1]".into()));
        }
        if self.alpha <= T::zero() {
            return Err(LearnError::InvalidConfig("alpha must be positive".into()));
        }
        if self.theta <= T::zero() {
            return Err(LearnError::InvalidConfig("theta must be positive".into()));
        }
        if self.n_internal == 0 {
            return Err(LearnError::InvalidConfig("need at least one internal state".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Serializable bundle for exact reload of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub scenario_name: String,
    pub learner: Learner,
    pub config: TrainConfig<T>,
    pub policies: Policies<T>,
}
