//! Scenario document format.
//!
//! ```toml
//! name = "example"
//! horizon = 100
//! formula = "(<> do1) && (!do2 U do1)"
//!
//! [graph]
//! grid = [5, 5]           # or: vertices = 7, edges = [[0, 1], [1, 2]]
//!
//! [constants]
//! go = 0.5
//! do = 1.0
//!
//! [[requests]]
//! id = 1
//! locations = [21]
//! owners = [1]            # optional; checked against capabilities
//!
//! [[agents]]
//! id = 1
//! start = 4
//! capabilities = [1]
//! # reachable = [0, 1, 2] # optional; defaults to every vertex
//! ```

use serde::Deserialize;
use thiserror::Error;

use super::{
    AgentSpec, EnvGraph, RequestSpec, Scenario, WorldError, DEFAULT_DO_CONSTANT,
    DEFAULT_GO_CONSTANT, DEFAULT_HORIZON,
};
use crate::scalar::{convert, Scalar};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    name: String,
    horizon: Option<usize>,
    formula: Option<String>,
    graph: GraphDoc,
    constants: Option<ConstantsDoc>,
    requests: Vec<RequestDoc>,
    agents: Vec<AgentDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    grid: Option<[usize; 2]>,
    vertices: Option<usize>,
    edges: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsDoc {
    go: Option<f64>,
    #[serde(rename = "do")]
    do_: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequestDoc {
    id: usize,
    locations: Vec<usize>,
    owners: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentDoc {
    id: usize,
    start: usize,
    #[serde(default)]
    capabilities: Vec<usize>,
    reachable: Option<Vec<usize>>,
}

#[derive(Debug, Error)]
pub enum ScenarioLoadError {
    #[error("malformed scenario document: {0}")]
    Document(#[from] toml::de::Error),
    #[error("graph section must give either `grid = [w, h]` or `vertices` with `edges`")]
    AmbiguousGraph,
    #[error("agent ids must be 1..=n in declaration order, found {0}")]
    BadAgentId(usize),
    #[error("go/do constants must be positive")]
    NonPositiveConstant,
    #[error(transparent)]
    World(#[from] WorldError),
}

/// Parses and validates a scenario document. Returns the scenario with
/// non-fatal warnings (such as request sites outside an owner's reach).
pub fn load_scenario<T: Scalar>(
    text: &str,
) -> Result<(Scenario<T>, Vec<String>), ScenarioLoadError> {
    let doc: ScenarioDoc = toml::from_str(text)?;

    let graph = match (doc.graph.grid, doc.graph.vertices, doc.graph.edges) {
        (Some([w, h]), None, None) => EnvGraph::grid(w, h),
        (None, Some(n), Some(edges)) => {
            let pairs: Vec<(usize, usize)> = edges.iter().map(|e| (e[0], e[1])).collect();
            EnvGraph::from_undirected_edges(n, &pairs).map_err(ScenarioLoadError::World)?
        }
        _ => return Err(ScenarioLoadError::AmbiguousGraph),
    };

    let constants = doc.constants.unwrap_or(ConstantsDoc { go: None, do_: None });
    let go_constant = constants.go.unwrap_or(DEFAULT_GO_CONSTANT);
    let do_constant = constants.do_.unwrap_or(DEFAULT_DO_CONSTANT);
    if go_constant <= 0.0 || do_constant <= 0.0 {
        return Err(ScenarioLoadError::NonPositiveConstant);
    }

    for (i, agent) in doc.agents.iter().enumerate() {
        if agent.id != i + 1 {
            return Err(ScenarioLoadError::BadAgentId(agent.id));
        }
    }

    let request_specs: Vec<RequestSpec> = doc
        .requests
        .iter()
        .map(|r| RequestSpec { display_id: r.id, locations: r.locations.clone() })
        .collect();
    let agent_specs: Vec<AgentSpec> = doc
        .agents
        .iter()
        .map(|a| AgentSpec {
            start: a.start,
            reachable: a.reachable.clone(),
            capabilities: a.capabilities.clone(),
        })
        .collect();

    let scenario = Scenario::new(
        doc.name,
        graph,
        request_specs,
        agent_specs,
        convert::<T>(go_constant),
        convert::<T>(do_constant),
        doc.horizon.unwrap_or(DEFAULT_HORIZON),
        doc.formula.as_deref(),
    )
    .map_err(ScenarioLoadError::World)?;

    // declared owners, when present, must agree with the derived ones
    for req_doc in &doc.requests {
        if let Some(declared) = &req_doc.owners {
            let request = scenario
                .requests
                .iter()
                .find(|r| r.display_id == req_doc.id)
                .expect("request validated above");
            let mut declared: Vec<usize> = declared.iter().map(|id| id.wrapping_sub(1)).collect();
            declared.sort_unstable();
            declared.dedup();
            if declared != request.owners {
                return Err(WorldError::OwnersMismatch { id: req_doc.id }.into());
            }
        }
    }

    let mut warnings = Vec::new();
    for req in &scenario.requests {
        for &owner in &req.owners {
            let start = scenario.agents[owner].start;
            let reachable_site = req
                .locations
                .iter()
                .any(|&site| scenario.graph.distance(start, site).is_some());
            if !reachable_site {
                warnings.push(format!(
                    "request {} has no site connected to the start of agent {}",
                    req.display_id,
                    owner + 1
                ));
            }
        }
    }
    Ok((scenario, warnings))
}
