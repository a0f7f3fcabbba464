use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use tltl_marl_cli::experiment::ArmSpec;
use tltl_marl_cli::{
    cmd_batch, cmd_energy, cmd_evaluate, cmd_train, cmd_validate, default_out_root,
    format_validation, inputs::load_mission, BatchOptions, EvaluateOptions, Overrides,
    TrainOptions, ValidateOptions,
};

/// Mission synthesis harness: validate mission files, train policy teams,
/// and evaluate learned behavior.
#[derive(Parser)]
#[command(name = "tltl-marl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MissionArgs {
    /// Scenario document (graph, agents, requests, constants, formula)
    #[arg(long)]
    scenario: PathBuf,
    /// Automaton document (states, final/trap sets, guarded edges)
    #[arg(long)]
    fspa: PathBuf,
    /// Optional file whose formula overrides the scenario's
    #[arg(long)]
    formula: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct OverrideArgs {
    /// Training episodes per seed
    #[arg(long)]
    episodes: Option<usize>,
    /// Episode horizon (defaults to the scenario's)
    #[arg(long)]
    horizon: Option<usize>,
    /// Discount factor
    #[arg(long)]
    gamma: Option<f64>,
    /// Learning step size
    #[arg(long)]
    alpha: Option<f64>,
    /// Softmax temperature
    #[arg(long)]
    theta: Option<f64>,
    /// Internal states per policy graph
    #[arg(long, value_name = "N")]
    internal_states: Option<usize>,
}

impl From<&OverrideArgs> for Overrides {
    fn from(args: &OverrideArgs) -> Self {
        Overrides {
            episodes: args.episodes,
            horizon: args.horizon,
            gamma: args.gamma,
            alpha: args.alpha,
            theta: args.theta,
            n_internal: args.internal_states,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check mission files and cross-validate the automaton against the
    /// mission formula on sampled trajectories
    Validate {
        #[command(flatten)]
        mission: MissionArgs,
        /// Sampled trajectories for the cross-check
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Maximum trajectory length (states)
        #[arg(long, default_value_t = 20)]
        max_len: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit the full report as JSON
        #[arg(long)]
        json: bool,
    },
    /// Print the energy of every automaton state
    Energy {
        #[command(flatten)]
        mission: MissionArgs,
    },
    /// Train one seed and write its learning curve and checkpoint
    Train {
        #[command(flatten)]
        mission: MissionArgs,
        /// Reward arm: rho, rho-j, none, q-memoryless, or custom:LR,LJ
        #[arg(long, default_value = "rho-j")]
        arm: ArmSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        overrides: OverrideArgs,
        /// Output root (default: $TLTL_MARL_OUT or ./runs)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a batch of seeds per reward arm and summarize convergence
    Batch {
        #[command(flatten)]
        mission: MissionArgs,
        /// Comma-separated reward arms
        #[arg(long, value_delimiter = ',', default_value = "rho,rho-j,none")]
        arms: Vec<ArmSpec>,
        /// Seeds per arm
        #[arg(long, default_value_t = 50)]
        seeds: usize,
        /// Root seed every run stream derives from
        #[arg(long, default_value_t = 0)]
        experiment_seed: u64,
        /// Concurrent seed runs
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
        #[command(flatten)]
        overrides: OverrideArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll out a trained checkpoint and export traces and route drawings
    Evaluate {
        #[command(flatten)]
        mission: MissionArgs,
        /// Checkpoint file written by train or batch
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        /// Deterministic argmax play instead of sampling
        #[arg(long, default_value_t = true)]
        greedy: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            // machine-readable diagnostic on stderr, end-to-end failures are
            // exit code 1
            let diagnostic = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{diagnostic}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { mission, samples, max_len, seed, json } => {
            let mission = load_mission(&mission.scenario, &mission.fspa, mission.formula.as_deref())?;
            let report = cmd_validate(&mission, &ValidateOptions { samples, max_len, seed });
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", format_validation(&report));
            }
            if report.passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                if !json {
                    // counterexamples as machine-readable diagnostics
                    println!("{}", serde_json::to_string(&report.cross_check)?);
                }
                Ok(ExitCode::from(2))
            }
        }
        Command::Energy { mission } => {
            let mission = load_mission(&mission.scenario, &mission.fspa, mission.formula.as_deref())?;
            print!("{}", cmd_energy(&mission));
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { mission, arm, seed, overrides, out } => {
            let mission = load_mission(&mission.scenario, &mission.fspa, mission.formula.as_deref())?;
            let opts = TrainOptions {
                arm,
                seed,
                overrides: Overrides::from(&overrides),
                out_dir: out.unwrap_or_else(default_out_root),
            };
            let artifacts = cmd_train(&mission, &opts)?;
            println!(
                "seed {seed}: converged={} route={:?}",
                artifacts.converged, artifacts.route_length
            );
            println!("curve:      {}", artifacts.curve_path.display());
            println!("checkpoint: {}", artifacts.checkpoint_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch { mission, arms, seeds, experiment_seed, jobs, overrides, out } => {
            let mission = load_mission(&mission.scenario, &mission.fspa, mission.formula.as_deref())?;
            let opts = BatchOptions {
                arms: arms.into_iter().map(|a| (a, seeds)).collect(),
                experiment_seed,
                jobs,
                overrides: Overrides::from(&overrides),
                out_dir: out.unwrap_or_else(default_out_root),
            };
            let batch = cmd_batch(&mission, &opts)?;
            println!(
                "{:<14} {:>6} {:>10} {:>12} {:>10}",
                "arm", "seeds", "converged", "rate", "best-route"
            );
            for arm in &batch.arms {
                println!(
                    "{:<14} {:>6} {:>10} {:>11.1}% {:>10}",
                    arm.arm.name,
                    arm.runs.len(),
                    arm.runs.iter().filter(|r| r.converged).count(),
                    100.0 * arm.convergence_rate(),
                    arm.best_route().map_or("-".into(), |r| r.to_string()),
                );
            }
            if let Some(optimal) = batch.optimal_route {
                println!("optimal route length: {optimal}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { mission, checkpoint, episodes, greedy, seed, out } => {
            let mission = load_mission(&mission.scenario, &mission.fspa, mission.formula.as_deref())?;
            let opts = EvaluateOptions {
                checkpoint,
                episodes,
                greedy,
                seed,
                out_dir: out.unwrap_or_else(default_out_root),
            };
            let artifacts = cmd_evaluate(&mission, &opts)?;
            println!(
                "episodes: {episodes}  success rate: {:.1}%  satisfaction rate: {:.1}%",
                100.0 * artifacts.success_rate,
                100.0 * artifacts.satisfaction_rate,
            );
            if !artifacts.route_lengths.is_empty() {
                println!("route lengths: {:?}", artifacts.route_lengths);
            }
            if !artifacts.ascii.is_empty() {
                println!("{}", artifacts.ascii);
            }
            if let Some(path) = &artifacts.svg_path {
                println!("routes drawing: {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
