//! Per-agent motion and service plans extracted from team trajectories.
//!
//! A plan is a sequence of (vertex, proposition) pairs: the proposition is a
//! request the agent serviced to completion at that step, or nothing. Plans
//! satisfy four structural properties: they start at the agent's start vertex
//! with no service, every service happens on a site of that request, a step
//! that moves carries no service, and successive vertices are connected by
//! some action.

use thiserror::Error;

use super::{AgentAction, RequestId, Scenario, TeamState, VertexId};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MsPlan {
    pub steps: Vec<(VertexId, Option<RequestId>)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("trajectory has {states} states but {actions} action steps")]
    LengthMismatch { states: usize, actions: usize },
    #[error("agent {agent}: plan must start at the start vertex with no service")]
    BadStart { agent: usize },
    #[error("agent {agent}, step {step}: service outside its request sites or capabilities")]
    ServiceOffSite { agent: usize, step: usize },
    #[error("agent {agent}, step {step}: the agent moved and serviced in the same step")]
    MoveWithService { agent: usize, step: usize },
    #[error("agent {agent}, step {step}: vertices are not connected by any action")]
    Disconnected { agent: usize, step: usize },
}

/// Rebuilds every agent's plan from a team trajectory and the action log.
/// `actions[t]` is the joint action taken between `states[t]` and
/// `states[t + 1]`. The extracted plans are re-validated; a violation means
/// the trajectory was not produced by the game dynamics.
pub fn extract_ms_plans<T: Scalar>(
    scenario: &Scenario<T>,
    states: &[TeamState],
    actions: &[Vec<AgentAction>],
) -> Result<Vec<MsPlan>, PlanError> {
    if states.len() != actions.len() + 1 {
        return Err(PlanError::LengthMismatch { states: states.len(), actions: actions.len() });
    }
    let mut plans = Vec::with_capacity(scenario.num_agents());
    for agent in 0..scenario.num_agents() {
        let mut steps = Vec::with_capacity(states.len());
        steps.push((states[0].positions[agent], None));
        for (t, joint) in actions.iter().enumerate() {
            let state = &states[t + 1];
            let service = match joint[agent] {
                AgentAction::Service(r) if state.completed.contains(r) => Some(r),
                _ => None,
            };
            steps.push((state.positions[agent], service));
        }
        let plan = MsPlan { steps };
        validate_ms_plan(scenario, agent, &plan)?;
        plans.push(plan);
    }
    Ok(plans)
}

/// Checks the four plan properties for one agent.
pub fn validate_ms_plan<T: Scalar>(
    scenario: &Scenario<T>,
    agent: usize,
    plan: &MsPlan,
) -> Result<(), PlanError> {
    let model = &scenario.agents[agent];
    match plan.steps.first() {
        Some(&(v, prop)) if v == model.start && prop.is_none() => {}
        _ => return Err(PlanError::BadStart { agent }),
    }
    for (step, &(v, prop)) in plan.steps.iter().enumerate() {
        if let Some(r) = prop {
            let on_site = scenario.requests[r].locations.contains(&v);
            if !on_site || !model.can_service(r) {
                return Err(PlanError::ServiceOffSite { agent, step });
            }
        }
        if step > 0 {
            let (prev, _) = plan.steps[step - 1];
            if prev != v {
                if prop.is_some() {
                    return Err(PlanError::MoveWithService { agent, step });
                }
                if !scenario.graph.has_edge(prev, v) || !model.can_reach(v) {
                    return Err(PlanError::Disconnected { agent, step });
                }
            }
        }
    }
    Ok(())
}
