//! Synthesis of distributed control policies for heterogeneous agent teams
//! from truncated temporal logic missions.
//!
//! The crate is organized around the pipeline it implements:
//!
//! - [`logic`] — formulas over named predicates, parsing, and quantitative
//!   (robustness) / qualitative evaluation over finite trajectories;
//! - [`automaton`] — predicate automata that track mission progress, with a
//!   shortest-path energy function over automaton states;
//! - [`world`] — environment graph, agents, service requests, team states
//!   and motion/service plans;
//! - [`game`] — the deterministic product game of team and automaton, with
//!   the terminal reward and the two per-step shaping rewards;
//! - [`learning`] — finite policy graphs trained by likelihood-ratio
//!   gradient, plus a memoryless Q-learning baseline.
//!
//! All numeric code is generic over the [`scalar::Scalar`] floating-point
//! type; the crate root exports `f64` aliases, which the command-line
//! harness uses throughout.

pub mod automaton;
pub mod game;
pub mod learning;
pub mod logic;
pub mod scalar;
pub mod world;

#[cfg(feature = "testkit")]
pub mod testkit;

pub use scalar::{Scalar, RHO_MAX};

/// `f64` instantiations used by the harness.
pub type Formula64 = logic::Formula<f64>;
pub type Guard64 = logic::GuardFormula<f64>;
pub type Fspa64 = automaton::Fspa<f64>;
pub type EnergyTable64 = automaton::EnergyTable<f64>;
pub type Scenario64 = world::Scenario<f64>;
pub type Game64<'a> = game::FspaGame<'a, f64>;
pub type PolicyGraph64 = learning::PolicyGraph<f64>;
pub type TrainConfig64 = learning::TrainConfig<f64>;
