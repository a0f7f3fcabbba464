//! Command implementations behind the `tltl-marl` binary: mission
//! validation, energy inspection, training (single seed and batches), and
//! evaluation rollouts with trace and drawing export.

pub mod experiment;
pub mod inputs;
pub mod render;
pub mod report;
pub mod validate;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use tltl_marl::learning::{evaluate, Learner, TrainConfig};
use tltl_marl::world::extract_ms_plans;
use tltl_marl::TrainConfig64;

use experiment::{ArmReport, ArmSpec, BatchReport};
use inputs::Mission;
use report::{ChartSeries, CurveRow, SummaryRow};
use validate::ValidationReport;

/// Environment variable holding the default output root directory.
pub const OUT_ROOT_ENV: &str = "TLTL_MARL_OUT";

pub fn default_out_root() -> PathBuf {
    std::env::var_os(OUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

/// Training-parameter overrides shared by `train` and `batch`.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub episodes: Option<usize>,
    pub horizon: Option<usize>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub n_internal: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, mut config: TrainConfig64) -> TrainConfig64 {
        if let Some(v) = self.episodes {
            config.episodes = v;
        }
        if self.horizon.is_some() {
            config.horizon = self.horizon;
        }
        if let Some(v) = self.gamma {
            config.gamma = v;
        }
        if let Some(v) = self.alpha {
            config.alpha = v;
        }
        if let Some(v) = self.theta {
            config.theta = v;
        }
        if let Some(v) = self.n_internal {
            config.n_internal = v;
        }
        config
    }
}

pub struct ValidateOptions {
    pub samples: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self { samples: 10_000, max_len: 20, seed: 0 }
    }
}

/// Structural validation plus, when the scenario has a mission formula, the
/// acceptance-versus-robustness cross-check over sampled trajectories.
pub fn cmd_validate(mission: &Mission, opts: &ValidateOptions) -> ValidationReport {
    let cross_check = mission.formula().map(|phi| {
        validate::cross_validate(
            &mission.scenario,
            &mission.fspa,
            phi,
            opts.samples,
            opts.max_len,
            opts.seed,
        )
    });
    ValidationReport {
        scenario: mission.scenario.name.clone(),
        scenario_warnings: mission.scenario_warnings.clone(),
        fspa_warnings: mission.fspa_warnings.clone(),
        guard_overlap_warnings: validate::guard_overlap_warnings(
            &mission.scenario,
            &mission.fspa,
            (opts.samples / 10).max(100),
            opts.seed,
        ),
        energy: validate::energy_rows(&mission.fspa),
        cross_check,
    }
}

/// Text table of the energy function over automaton states.
pub fn cmd_energy(mission: &Mission) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<12} {:>10}  flags", "state", "energy");
    for row in validate::energy_rows(&mission.fspa) {
        let value = match row.value {
            Some(v) => format!("{v:.3}"),
            None => "inf".to_string(),
        };
        let mut flags = Vec::new();
        if row.is_final {
            flags.push("final");
        }
        if row.is_trap {
            flags.push("trap");
        }
        let _ = writeln!(out, "{:<12} {:>10}  {}", row.state, value, flags.join(","));
    }
    out
}

/// Manifest describing a batch, written alongside its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub experiment_seed: u64,
    pub arms: Vec<ArmSpec>,
    pub seeds_per_arm: Vec<usize>,
    pub episodes: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub theta: f64,
    pub n_internal: usize,
    pub note: String,
}

pub struct BatchOptions {
    pub arms: Vec<(ArmSpec, usize)>,
    pub experiment_seed: u64,
    pub jobs: usize,
    pub overrides: Overrides,
    pub out_dir: PathBuf,
}

/// Runs every arm and seed, writes per-seed curve and checkpoint files, the
/// summary table, the manifest, and the learning-curve chart. Returns the
/// in-memory report for further analysis.
pub fn cmd_batch(mission: &Mission, opts: &BatchOptions) -> Result<BatchReport> {
    let base = opts.overrides.apply(TrainConfig::default());
    let batch = experiment::run_batch(
        &mission.scenario,
        &mission.fspa,
        &opts.arms,
        &base,
        opts.experiment_seed,
        opts.jobs,
    )?;
    write_batch_outputs(mission, opts, &base, &batch)?;
    Ok(batch)
}

fn write_batch_outputs(
    mission: &Mission,
    opts: &BatchOptions,
    base: &TrainConfig64,
    batch: &BatchReport,
) -> Result<()> {
    let root = opts.out_dir.join(&mission.scenario.name);
    fs::create_dir_all(&root).with_context(|| format!("creating {}", root.display()))?;

    let mut summary = Vec::new();
    for arm_report in &batch.arms {
        let arm_dir = root.join(&arm_report.arm.name);
        fs::create_dir_all(&arm_dir)?;
        for run in &arm_report.runs {
            let stem = format!("seed_{:03}", run.seed_index);
            report::write_curve_csv(&arm_dir.join(format!("{stem}.curve.csv")), &run.metrics)?;
            report::write_checkpoint(
                &arm_dir.join(format!("{stem}.checkpoint.json")),
                &run.checkpoint,
            )?;
        }
        summary.push(summary_row(arm_report, batch.optimal_route));
    }
    report::write_summary_csv(&root.join("summary.csv"), &summary)?;

    let manifest = RunManifest {
        scenario: mission.scenario.name.clone(),
        experiment_seed: batch.experiment_seed,
        arms: batch.arms.iter().map(|a| a.arm.clone()).collect(),
        seeds_per_arm: batch.arms.iter().map(|a| a.runs.len()).collect(),
        episodes: base.episodes,
        horizon: base.horizon.unwrap_or(mission.scenario.horizon),
        gamma: base.gamma,
        alpha: base.alpha,
        theta: base.theta,
        n_internal: base.n_internal,
        note: format!(
            "desk-scale batch; convergence rates computed over {} seeds per arm",
            batch.arms.iter().map(|a| a.runs.len()).max().unwrap_or(0)
        ),
    };
    fs::write(root.join("run_config.toml"), toml::to_string_pretty(&manifest)?)?;

    let series: Vec<ChartSeries> =
        batch.arms.iter().filter_map(|arm| arm_curve_series(arm, 100)).collect();
    if !series.is_empty() {
        let svg = report::svg_line_chart(&series, "normalized reward, converged seeds");
        fs::write(root.join("learning_curves.svg"), svg)?;
    }
    Ok(())
}

pub fn summary_row(arm_report: &ArmReport, optimal_route: Option<usize>) -> SummaryRow {
    SummaryRow {
        arm: arm_report.arm.name.clone(),
        learner: match arm_report.arm.learner {
            Learner::PolicyGraph => "policy-graph".into(),
            Learner::QMemoryless => "q-memoryless".into(),
        },
        seeds: arm_report.runs.len(),
        converged: arm_report.runs.iter().filter(|r| r.converged).count(),
        convergence_rate: arm_report.convergence_rate(),
        best_route_length: arm_report.best_route(),
        optimal_route_length: optimal_route,
    }
}

/// Mean and one-standard-deviation band of the smoothed normalized reward
/// across an arm's converged seeds.
pub fn arm_curve_series(arm_report: &ArmReport, window: usize) -> Option<ChartSeries> {
    let curves: Vec<Vec<f64>> = arm_report
        .runs
        .iter()
        .filter(|r| r.converged)
        .map(|r| {
            let raw: Vec<f64> = r.metrics.iter().map(|m| m.normalized_return).collect();
            report::moving_average(&raw, window)
        })
        .collect();
    if curves.is_empty() {
        return None;
    }
    let len = curves.iter().map(Vec::len).min()?;
    let mut mean = Vec::with_capacity(len);
    let mut lower = Vec::with_capacity(len);
    let mut upper = Vec::with_capacity(len);
    for e in 0..len {
        let values: Vec<f64> = curves.iter().map(|c| c[e]).collect();
        let m = values.iter().sum::<f64>() / values.len() as f64;
        let var =
            values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
        let sd = var.sqrt();
        mean.push(m);
        lower.push(m - sd);
        upper.push(m + sd);
    }
    Some(ChartSeries { name: arm_report.arm.name.clone(), mean, lower, upper })
}

pub struct TrainOptions {
    pub arm: ArmSpec,
    pub seed: u64,
    pub overrides: Overrides,
    pub out_dir: PathBuf,
}

pub struct TrainArtifacts {
    pub converged: bool,
    pub route_length: Option<usize>,
    pub curve_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Trains one seed and writes its curve and checkpoint.
pub fn cmd_train(mission: &Mission, opts: &TrainOptions) -> Result<TrainArtifacts> {
    let base = opts.overrides.apply(TrainConfig::default());
    let run = experiment::run_seed(
        &mission.scenario,
        &mission.fspa,
        &opts.arm,
        &base,
        opts.seed,
        0,
        0,
    )?;
    let dir = opts.out_dir.join(&mission.scenario.name).join(&opts.arm.name);
    fs::create_dir_all(&dir)?;
    let curve_path = dir.join(format!("seed_{:03}.curve.csv", opts.seed));
    let checkpoint_path = dir.join(format!("seed_{:03}.checkpoint.json", opts.seed));
    report::write_curve_csv(&curve_path, &run.metrics)?;
    report::write_checkpoint(&checkpoint_path, &run.checkpoint)?;
    Ok(TrainArtifacts {
        converged: run.converged,
        route_length: run.route_length,
        curve_path,
        checkpoint_path,
    })
}

pub struct EvaluateOptions {
    pub checkpoint: PathBuf,
    pub episodes: usize,
    pub greedy: bool,
    pub seed: u64,
    pub out_dir: PathBuf,
}

pub struct EvaluateArtifacts {
    pub success_rate: f64,
    pub satisfaction_rate: f64,
    pub route_lengths: Vec<usize>,
    pub ascii: String,
    pub trace_paths: Vec<PathBuf>,
    pub svg_path: Option<PathBuf>,
}

/// Rolls out a checkpoint, writes per-episode traces and a route drawing, and
/// cross-checks satisfaction of every rollout.
pub fn cmd_evaluate(mission: &Mission, opts: &EvaluateOptions) -> Result<EvaluateArtifacts> {
    let checkpoint = report::read_checkpoint(&opts.checkpoint)?;
    let eval = evaluate(
        &mission.scenario,
        &mission.fspa,
        &checkpoint.policies,
        &checkpoint.config,
        opts.episodes,
        opts.greedy,
        opts.seed,
    )?;

    let dir = opts.out_dir.join(&mission.scenario.name).join("eval");
    fs::create_dir_all(&dir)?;
    let mut trace_paths = Vec::new();
    for (k, episode) in eval.episodes.iter().enumerate() {
        let path = dir.join(format!("episode_{k:03}.trace.jsonl"));
        report::write_trace_jsonl(&path, &episode.trace.records(&mission.fspa))?;
        trace_paths.push(path);
    }

    let satisfied = eval
        .episodes
        .iter()
        .filter(|e| e.satisfied.unwrap_or(e.success))
        .count();
    let satisfaction_rate = if eval.episodes.is_empty() {
        0.0
    } else {
        satisfied as f64 / eval.episodes.len() as f64
    };
    let route_lengths: Vec<usize> =
        eval.episodes.iter().filter_map(|e| e.route_length).collect();

    // draw the first successful episode, or the first episode otherwise
    let shown = eval.episodes.iter().find(|e| e.success).or(eval.episodes.first());
    let (ascii, svg_path) = match shown {
        Some(episode) => {
            let states = episode.trace.team_states();
            let plans = extract_ms_plans(&mission.scenario, &states, &episode.trace.action_log())?;
            let ascii = render::ascii_routes(&mission.scenario, &plans);
            let svg = render::svg_routes(&mission.scenario, &plans);
            let path = dir.join("routes.svg");
            fs::write(&path, svg)?;
            (ascii, Some(path))
        }
        None => (String::new(), None),
    };

    Ok(EvaluateArtifacts {
        success_rate: eval.success_rate,
        satisfaction_rate,
        route_lengths,
        ascii,
        trace_paths,
        svg_path,
    })
}

/// Renders a validation report for humans.
pub fn format_validation(report: &ValidationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario `{}`", report.scenario);
    for w in &report.scenario_warnings {
        let _ = writeln!(out, "  scenario warning: {w}");
    }
    for w in &report.fspa_warnings {
        let _ = writeln!(out, "  automaton warning: {w}");
    }
    for w in &report.guard_overlap_warnings {
        let _ = writeln!(out, "  guard warning: {w}");
    }
    let _ = writeln!(out, "  energy:");
    for row in &report.energy {
        let value = row.value.map_or("inf".into(), |v| format!("{v:.3}"));
        let mut flags = Vec::new();
        if row.is_final {
            flags.push("final");
        }
        if row.is_trap {
            flags.push("trap");
        }
        let _ = writeln!(out, "    {:<10} {:>8}  {}", row.state, value, flags.join(","));
    }
    match &report.cross_check {
        None => {
            let _ = writeln!(out, "  no mission formula: cross-check skipped");
        }
        Some(check) => {
            if check.counterexamples.is_empty() {
                let _ = writeln!(
                    out,
                    "  cross-check: acceptance matches formula satisfaction on {} sampled \
                     trajectories (length <= {}; {} accepted, {} trapped)",
                    check.samples, check.max_len, check.accepted, check.trapped
                );
            } else {
                let _ = writeln!(
                    out,
                    "  cross-check FAILED: {} disagreement(s) in {} samples",
                    check.counterexamples.len(),
                    check.samples
                );
            }
        }
    }
    out
}

/// Reads back everything a batch wrote; used by the file round-trip checks.
pub fn read_batch_outputs(root: &Path) -> Result<(Vec<SummaryRow>, Vec<Vec<CurveRow>>)> {
    let summary = report::read_summary_csv(&root.join("summary.csv"))?;
    let mut curves = Vec::new();
    for row in &summary {
        let arm_dir = root.join(&row.arm);
        for k in 0..row.seeds {
            let path = arm_dir.join(format!("seed_{k:03}.curve.csv"));
            curves.push(report::read_curve_csv(&path)?);
        }
    }
    Ok((summary, curves))
}
