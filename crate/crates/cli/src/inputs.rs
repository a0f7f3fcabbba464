//! Mission file loading shared by every subcommand.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use tltl_marl::logic::parse_formula;
use tltl_marl::world::load_scenario;
use tltl_marl::{Formula64, Fspa64, Scenario64};

pub struct Mission {
    pub scenario: Scenario64,
    pub fspa: Fspa64,
    pub scenario_warnings: Vec<String>,
    pub fspa_warnings: Vec<String>,
}

impl Mission {
    pub fn formula(&self) -> Option<&Formula64> {
        self.scenario.formula.as_ref()
    }
}

/// Loads the scenario and automaton documents; an optional formula file
/// overrides the scenario's embedded mission formula.
pub fn load_mission(
    scenario_path: &Path,
    fspa_path: &Path,
    formula_path: Option<&Path>,
) -> Result<Mission> {
    let scenario_text = fs::read_to_string(scenario_path)
        .with_context(|| format!("reading scenario {}", scenario_path.display()))?;
    let (mut scenario, scenario_warnings) = load_scenario::<f64>(&scenario_text)
        .with_context(|| format!("loading scenario {}", scenario_path.display()))?;

    if let Some(path) = formula_path {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading formula {}", path.display()))?;
        let table = scenario.predicate_table();
        let formula = parse_formula(text.trim(), &table)
            .with_context(|| format!("parsing formula {}", path.display()))?;
        scenario.formula = Some(formula);
    }

    let fspa_text = fs::read_to_string(fspa_path)
        .with_context(|| format!("reading automaton {}", fspa_path.display()))?;
    let table = scenario.predicate_table();
    let (fspa, fspa_warnings) = tltl_marl::automaton::load_fspa::<f64>(&fspa_text, &table)
        .with_context(|| format!("loading automaton {}", fspa_path.display()))?;

    Ok(Mission { scenario, fspa, scenario_warnings, fspa_warnings })
}
