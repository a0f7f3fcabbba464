//! Environment graph, agents, service requests, and team states.
//!
//! A scenario bundles the graph, the request table with per-request sites and
//! owners, and the agent models (start vertex, reachable set, capabilities).
//! It grounds the `go`/`do` predicates: `go` measures graph distance from the
//! owning agents to the nearest request site, `do` reads the set of requests
//! completed at the current step.

mod file;
mod plan;

pub use file::{load_scenario, ScenarioLoadError};
pub use plan::{extract_ms_plans, validate_ms_plan, MsPlan, PlanError};

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

use crate::logic::{
    parse_formula, Formula, ParseError, Predicate, PredicateKind, PredicateTable,
    PredicateValuation,
};
use crate::scalar::{convert_usize, Scalar};

pub type VertexId = usize;
pub type AgentId = usize;
pub type RequestId = usize;

/// Undirected environment graph over integer vertex ids.
#[derive(Debug, Clone)]
pub struct EnvGraph {
    n: usize,
    adj: Vec<Vec<VertexId>>,
}

impl EnvGraph {
    /// Grid with two-way edges between side-adjacent cells, vertices numbered
    /// row-major: vertex `r * width + c` sits at row `r`, column `c`.
    pub fn grid(width: usize, height: usize) -> Self {
        let n = width * height;
        let mut adj = vec![Vec::new(); n];
        for r in 0..height {
            for c in 0..width {
                let v = r * width + c;
                if c + 1 < width {
                    adj[v].push(v + 1);
                    adj[v + 1].push(v);
                }
                if r + 1 < height {
                    adj[v].push(v + width);
                    adj[v + width].push(v);
                }
            }
        }
        let mut g = Self { n, adj };
        g.normalize();
        g
    }

    /// Graph from an undirected edge list; both directions are inserted.
    pub fn from_undirected_edges(
        n: usize,
        edges: &[(VertexId, VertexId)],
    ) -> Result<Self, WorldError> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(WorldError::VertexOutOfRange { vertex: u.max(v), vertices: n });
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut g = Self { n, adj };
        g.normalize();
        Ok(g)
    }

    fn normalize(&mut self) {
        for list in &mut self.adj {
            list.sort_unstable();
            list.dedup();
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.adj[v]
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Unweighted shortest-path distance; `None` when disconnected.
    pub fn distance(&self, u: VertexId, v: VertexId) -> Option<u32> {
        let field = self.distance_field(v);
        (field[u] != u32::MAX).then_some(field[u])
    }

    /// Breadth-first distance from every vertex to `target`; `u32::MAX`
    /// marks unreachable vertices.
    pub fn distance_field(&self, target: VertexId) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = VecDeque::new();
        dist[target] = 0;
        queue.push_back(target);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }
}

/// Set of request indices completed at a step. At most 64 requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RequestSet(u64);

impl RequestSet {
    pub const MAX_REQUESTS: usize = 64;

    pub fn empty() -> Self {
        Self(0)
    }

    pub fn insert(&mut self, r: RequestId) {
        debug_assert!(r < Self::MAX_REQUESTS);
        self.0 |= 1 << r;
    }

    pub fn remove(&mut self, r: RequestId) {
        self.0 &= !(1 << r);
    }

    pub fn contains(&self, r: RequestId) -> bool {
        self.0 & (1 << r) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = RequestId> + '_ {
        (0..Self::MAX_REQUESTS).filter(|&r| self.contains(r))
    }
}

/// One team-trajectory state: per-agent vertices plus the requests finished
/// at this step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TeamState {
    pub positions: Vec<VertexId>,
    pub completed: RequestSet,
}

/// One agent action: try to move to a vertex, conduct a service, or idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentAction {
    Goto(VertexId),
    Service(RequestId),
    Idle,
}

/// A service request: where it occurs and which agents own it.
#[derive(Debug, Clone)]
pub struct Request {
    /// Id used in predicate names (`go<id>` / `do<id>`) and scenario files.
    pub display_id: usize,
    pub locations: Vec<VertexId>,
    /// Owner agent indices, derived from agent capabilities. A request with
    /// one owner is independent; with several it is shared and requires all
    /// owners to act together.
    pub owners: Vec<AgentId>,
}

impl Request {
    pub fn is_shared(&self) -> bool {
        self.owners.len() > 1
    }
}

/// Agent model: start vertex, reachable vertices, capabilities, and the
/// derived discrete action set (reachable vertices, own services, idle).
#[derive(Debug, Clone)]
pub struct AgentModel {
    pub start: VertexId,
    /// Sorted vertex set the agent may occupy and target.
    pub reachable: Vec<VertexId>,
    /// Sorted request indices the agent can service.
    pub capabilities: Vec<RequestId>,
    actions: Vec<AgentAction>,
}

impl AgentModel {
    fn new(start: VertexId, mut reachable: Vec<VertexId>, mut capabilities: Vec<RequestId>) -> Self {
        reachable.sort_unstable();
        reachable.dedup();
        capabilities.sort_unstable();
        capabilities.dedup();
        let mut actions: Vec<AgentAction> =
            reachable.iter().map(|&v| AgentAction::Goto(v)).collect();
        actions.extend(capabilities.iter().map(|&r| AgentAction::Service(r)));
        actions.push(AgentAction::Idle);
        Self { start, reachable, capabilities, actions }
    }

    /// The agent's full action set in a fixed order: moves, services, idle.
    pub fn actions(&self) -> &[AgentAction] {
        &self.actions
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn can_reach(&self, v: VertexId) -> bool {
        self.reachable.binary_search(&v).is_ok()
    }

    pub fn can_service(&self, r: RequestId) -> bool {
        self.capabilities.binary_search(&r).is_ok()
    }

    pub fn action_in_set(&self, action: &AgentAction) -> bool {
        match action {
            AgentAction::Goto(v) => self.can_reach(*v),
            AgentAction::Service(r) => self.can_service(*r),
            AgentAction::Idle => true,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum WorldError {
    #[error("vertex {vertex} out of range (graph has {vertices} vertices)")]
    VertexOutOfRange { vertex: VertexId, vertices: usize },
    #[error("scenario declares no agents")]
    NoAgents,
    #[error("agent {agent} has an empty reachable set")]
    EmptyReachable { agent: usize },
    #[error("agent {agent} starts outside its reachable set")]
    StartOutsideReachable { agent: usize },
    #[error("duplicate request id {id}")]
    DuplicateRequestId { id: usize },
    #[error("request {id} has no locations")]
    EmptyLocations { id: usize },
    #[error("request id {id} is not declared")]
    UnknownRequest { id: usize },
    #[error("request {id} has no owner; every request needs at least one capable agent")]
    NoOwner { id: usize },
    #[error("at most {max} requests are supported, got {got}")]
    TooManyRequests { max: usize, got: usize },
    #[error("declared owners of request {id} do not match agent capabilities")]
    OwnersMismatch { id: usize },
    #[error("action {action:?} is outside the action set of agent {agent}")]
    ActionOutsideSet { agent: usize, action: AgentAction },
    #[error("mission formula: {0}")]
    Formula(#[from] ParseError),
}

/// Request declaration used to assemble a scenario.
#[derive(Debug, Clone)]
pub struct RequestSpec {
    pub display_id: usize,
    pub locations: Vec<VertexId>,
}

/// Agent declaration used to assemble a scenario. Capabilities reference
/// request display ids; `reachable = None` means the whole vertex set.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub start: VertexId,
    pub reachable: Option<Vec<VertexId>>,
    pub capabilities: Vec<usize>,
}

/// A validated world: graph, requests, agents, predicate constants, horizon,
/// and the optional mission formula.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub name: String,
    pub graph: EnvGraph,
    pub requests: Vec<Request>,
    pub agents: Vec<AgentModel>,
    pub go_constant: T,
    pub do_constant: T,
    pub horizon: usize,
    pub formula: Option<Formula<T>>,
    /// Per request, per site: breadth-first distance field over all vertices.
    site_fields: Vec<Vec<Vec<u32>>>,
}

pub const DEFAULT_GO_CONSTANT: f64 = 0.5;
pub const DEFAULT_DO_CONSTANT: f64 = 1.0;
pub const DEFAULT_HORIZON: usize = 100;

impl<T: Scalar> Scenario<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        graph: EnvGraph,
        request_specs: Vec<RequestSpec>,
        agent_specs: Vec<AgentSpec>,
        go_constant: T,
        do_constant: T,
        horizon: usize,
        formula_text: Option<&str>,
    ) -> Result<Self, WorldError> {
        if agent_specs.is_empty() {
            return Err(WorldError::NoAgents);
        }
        if request_specs.len() > RequestSet::MAX_REQUESTS {
            return Err(WorldError::TooManyRequests {
                max: RequestSet::MAX_REQUESTS,
                got: request_specs.len(),
            });
        }
        let n = graph.num_vertices();

        let mut requests = Vec::with_capacity(request_specs.len());
        for spec in &request_specs {
            if request_specs.iter().filter(|s| s.display_id == spec.display_id).count() > 1 {
                return Err(WorldError::DuplicateRequestId { id: spec.display_id });
            }
            if spec.locations.is_empty() {
                return Err(WorldError::EmptyLocations { id: spec.display_id });
            }
            for &v in &spec.locations {
                if v >= n {
                    return Err(WorldError::VertexOutOfRange { vertex: v, vertices: n });
                }
            }
            requests.push(Request {
                display_id: spec.display_id,
                locations: spec.locations.clone(),
                owners: Vec::new(),
            });
        }
        let index_of: std::collections::BTreeMap<usize, RequestId> =
            requests.iter().enumerate().map(|(r, req)| (req.display_id, r)).collect();
        let request_index = |display_id: usize| -> Result<RequestId, WorldError> {
            index_of.get(&display_id).copied().ok_or(WorldError::UnknownRequest { id: display_id })
        };

        let mut agents = Vec::with_capacity(agent_specs.len());
        for (i, spec) in agent_specs.iter().enumerate() {
            let reachable = match &spec.reachable {
                Some(set) => {
                    for &v in set {
                        if v >= n {
                            return Err(WorldError::VertexOutOfRange { vertex: v, vertices: n });
                        }
                    }
                    set.clone()
                }
                None => (0..n).collect(),
            };
            if reachable.is_empty() {
                return Err(WorldError::EmptyReachable { agent: i });
            }
            let mut capabilities = Vec::with_capacity(spec.capabilities.len());
            for &display_id in &spec.capabilities {
                let r = request_index(display_id)?;
                capabilities.push(r);
                requests[r].owners.push(i);
            }
            let agent = AgentModel::new(spec.start, reachable, capabilities);
            if !agent.can_reach(spec.start) {
                return Err(WorldError::StartOutsideReachable { agent: i });
            }
            agents.push(agent);
        }
        for req in &mut requests {
            req.owners.sort_unstable();
            req.owners.dedup();
            if req.owners.is_empty() {
                return Err(WorldError::NoOwner { id: req.display_id });
            }
        }

        let site_fields = requests
            .iter()
            .map(|req| req.locations.iter().map(|&v| graph.distance_field(v)).collect())
            .collect();

        let mut scenario = Self {
            name: name.into(),
            graph,
            requests,
            agents,
            go_constant,
            do_constant,
            horizon,
            formula: None,
            site_fields,
        };
        if let Some(text) = formula_text {
            let table = scenario.predicate_table();
            scenario.formula = Some(parse_formula(text, &table)?);
        }
        Ok(scenario)
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// Predicate table with `go<id>` / `do<id>` entries for every request.
    pub fn predicate_table(&self) -> PredicateTable<T> {
        let mut table = PredicateTable::new();
        for (r, req) in self.requests.iter().enumerate() {
            table.insert(
                Predicate::go(format!("go{}", req.display_id), r, self.go_constant)
                    .expect("go constant validated positive"),
            );
            table.insert(
                Predicate::service_done(format!("do{}", req.display_id), r, self.do_constant)
                    .expect("do constant validated positive"),
            );
        }
        table
    }

    /// The team state at mission start: agents at their start vertices and
    /// nothing completed.
    pub fn initial_team_state(&self) -> TeamState {
        TeamState {
            positions: self.agents.iter().map(|a| a.start).collect(),
            completed: RequestSet::empty(),
        }
    }

    /// Deterministic motion: moving to an adjacent reachable vertex succeeds,
    /// anything else keeps the agent in place.
    pub fn agent_step(
        &self,
        agent: AgentId,
        v: VertexId,
        action: &AgentAction,
    ) -> Result<VertexId, WorldError> {
        let model = &self.agents[agent];
        if !model.action_in_set(action) {
            return Err(WorldError::ActionOutsideSet { agent, action: *action });
        }
        Ok(match action {
            AgentAction::Goto(target) if self.graph.has_edge(v, *target) => *target,
            _ => v,
        })
    }

    /// Requests completed by the joint action, evaluated at the post-motion
    /// positions: an independent request needs its owner on a site choosing
    /// the service; a shared one needs every owner choosing it on the same
    /// site vertex.
    pub fn completed_requests(
        &self,
        positions: &[VertexId],
        actions: &[AgentAction],
    ) -> RequestSet {
        let mut done = RequestSet::empty();
        'requests: for (r, req) in self.requests.iter().enumerate() {
            for &i in &req.owners {
                if actions[i] != AgentAction::Service(r) {
                    continue 'requests;
                }
            }
            let site = positions[req.owners[0]];
            if !req.locations.contains(&site) {
                continue;
            }
            for &i in &req.owners {
                if positions[i] != site {
                    continue 'requests;
                }
            }
            done.insert(r);
        }
        done
    }

    /// Distance-to-request value: the constant minus the smallest over sites
    /// of the largest owner distance to that site. Positive exactly when the
    /// owners stand on a common site (for constants below one).
    pub fn go_value(&self, state: &TeamState, request: RequestId, constant: T) -> T {
        let req = &self.requests[request];
        let mut best = u32::MAX;
        for field in &self.site_fields[request] {
            let mut worst = 0u32;
            for &i in &req.owners {
                worst = worst.max(field[state.positions[i]]);
            }
            best = best.min(worst);
        }
        if best == u32::MAX {
            return -T::infinity();
        }
        constant - convert_usize(best as usize)
    }

    /// Completion value: `+constant` when the request finished at this step,
    /// `-constant` otherwise.
    pub fn do_value(&self, state: &TeamState, request: RequestId, constant: T) -> T {
        if state.completed.contains(request) {
            constant
        } else {
            -constant
        }
    }

    /// Binds a team state to this scenario for predicate evaluation.
    pub fn ground<'a>(&'a self, state: &'a TeamState) -> Grounded<'a, T> {
        Grounded { scenario: self, state }
    }

    /// Grounds a whole trajectory for formula evaluation.
    pub fn ground_trajectory<'a>(&'a self, states: &'a [TeamState]) -> Vec<Grounded<'a, T>> {
        states.iter().map(|s| self.ground(s)).collect()
    }
}

/// A team state paired with its scenario; evaluates `go`/`do` predicates.
#[derive(Clone, Copy)]
pub struct Grounded<'a, T> {
    pub scenario: &'a Scenario<T>,
    pub state: &'a TeamState,
}

impl<'a, T: Scalar> PredicateValuation<T> for Grounded<'a, T> {
    fn predicate_value(&self, pred: &Predicate<T>) -> T {
        let request = pred.request.unwrap_or_else(|| {
            unreachable!("scenario predicates always carry a request index")
        });
        match pred.kind {
            PredicateKind::Go => self.scenario.go_value(self.state, request, pred.constant),
            PredicateKind::Do => self.scenario.do_value(self.state, request, pred.constant),
            PredicateKind::Custom => {
                unreachable!("custom predicates cannot be grounded on team states")
            }
        }
    }
}

#[cfg(test)]
mod tests;
