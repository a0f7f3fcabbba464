use proptest::prelude::*;

use super::*;
use crate::logic::robustness;

/// Two agents on a 5x5 grid: request 1 owned by agent 1 at vertex 21,
/// request 2 owned by agent 2 at vertex 9, request 3 shared at vertex 12.
fn team_scenario() -> Scenario<f64> {
    Scenario::new(
        "team",
        EnvGraph::grid(5, 5),
        vec![
            RequestSpec { display_id: 1, locations: vec![21] },
            RequestSpec { display_id: 2, locations: vec![9] },
            RequestSpec { display_id: 3, locations: vec![12] },
        ],
        vec![
            AgentSpec { start: 4, reachable: None, capabilities: vec![1, 3] },
            AgentSpec { start: 18, reachable: None, capabilities: vec![2, 3] },
        ],
        0.5,
        1.0,
        100,
        None,
    )
    .unwrap()
}

fn state(positions: Vec<usize>, completed: &[usize]) -> TeamState {
    let mut set = RequestSet::empty();
    for &r in completed {
        set.insert(r);
    }
    TeamState { positions, completed: set }
}

#[test]
fn grid_neighbors_are_side_adjacent() {
    let g = EnvGraph::grid(5, 5);
    assert_eq!(g.num_vertices(), 25);
    assert!(g.has_edge(4, 3));
    assert!(g.has_edge(4, 9));
    assert!(!g.has_edge(4, 20));
    assert!(!g.has_edge(4, 4));
    assert_eq!(g.neighbors(12), &[7, 11, 13, 17]);
}

#[test]
fn grid_distance_is_manhattan() {
    let g = EnvGraph::grid(5, 5);
    assert_eq!(g.distance(4, 21), Some(7));
    assert_eq!(g.distance(0, 24), Some(8));
    assert_eq!(g.distance(7, 7), Some(0));
}

#[test]
fn distance_is_symmetric_on_undirected_graphs() {
    let g = EnvGraph::grid(4, 3);
    for u in 0..g.num_vertices() {
        for v in 0..g.num_vertices() {
            assert_eq!(g.distance(u, v), g.distance(v, u));
        }
    }
}

#[test]
fn disconnected_vertices_have_no_distance() {
    let g = EnvGraph::from_undirected_edges(4, &[(0, 1), (2, 3)]).unwrap();
    assert_eq!(g.distance(0, 1), Some(1));
    assert_eq!(g.distance(0, 3), None);
}

#[test]
fn moving_to_adjacent_vertex_succeeds() {
    let s = team_scenario();
    assert_eq!(s.agent_step(0, 4, &AgentAction::Goto(3)).unwrap(), 3);
}

#[test]
fn moving_to_non_adjacent_vertex_stays() {
    let s = team_scenario();
    assert_eq!(s.agent_step(0, 4, &AgentAction::Goto(20)).unwrap(), 4);
}

#[test]
fn service_actions_never_move() {
    let s = team_scenario();
    assert_eq!(s.agent_step(0, 4, &AgentAction::Service(0)).unwrap(), 4);
    assert_eq!(s.agent_step(0, 4, &AgentAction::Idle).unwrap(), 4);
}

#[test]
fn actions_outside_the_agent_set_are_rejected() {
    let s = team_scenario();
    // agent 1 does not own request 2 (index 1)
    let err = s.agent_step(0, 4, &AgentAction::Service(1)).unwrap_err();
    assert!(matches!(err, WorldError::ActionOutsideSet { agent: 0, .. }));
}

#[test]
fn independent_completion_needs_owner_on_site() {
    let s = team_scenario();
    let done = s.completed_requests(&[21, 18], &[AgentAction::Service(0), AgentAction::Idle]);
    assert!(done.contains(0) && done.len() == 1);
    // same action away from the site does nothing
    let none = s.completed_requests(&[20, 18], &[AgentAction::Service(0), AgentAction::Idle]);
    assert!(none.is_empty());
}

#[test]
fn shared_completion_needs_all_owners_together() {
    let s = team_scenario();
    let both = s.completed_requests(&[12, 12], &[AgentAction::Service(2), AgentAction::Service(2)]);
    assert!(both.contains(2));
    // one owner acting alone achieves nothing
    let alone = s.completed_requests(&[12, 11], &[AgentAction::Service(2), AgentAction::Idle]);
    assert!(alone.is_empty());
    let apart = s.completed_requests(&[12, 11], &[AgentAction::Service(2), AgentAction::Service(2)]);
    assert!(apart.is_empty());
}

#[test]
fn removing_an_owner_action_never_adds_completions() {
    let s = team_scenario();
    let actions = vec![AgentAction::Service(2), AgentAction::Service(2)];
    let full = s.completed_requests(&[12, 12], &actions);
    for drop in 0..2 {
        let mut weakened = actions.clone();
        weakened[drop] = AgentAction::Idle;
        let fewer = s.completed_requests(&[12, 12], &weakened);
        for r in fewer.iter() {
            assert!(full.contains(r));
        }
    }
}

#[test]
fn go_value_is_constant_on_site() {
    let s = team_scenario();
    let x = state(vec![21, 18], &[]);
    assert_eq!(s.go_value(&x, 0, 0.5), 0.5);
}

#[test]
fn shared_go_value_uses_worst_owner_distance() {
    let s = team_scenario();
    // vertex 10 is distance 2 from vertex 12, vertex 24 distance 4
    let x = state(vec![10, 24], &[]);
    assert_eq!(s.go_value(&x, 2, 0.5), 0.5 - 4.0);
}

#[test]
fn go_value_takes_nearest_site() {
    let s = Scenario::<f64>::new(
        "two-site",
        EnvGraph::grid(5, 1),
        vec![RequestSpec { display_id: 1, locations: vec![0, 3] }],
        vec![AgentSpec { start: 4, reachable: None, capabilities: vec![1] }],
        0.5,
        1.0,
        10,
        None,
    )
    .unwrap();
    // agent at vertex 4: distance 4 to site 0, distance 1 to site 3
    let x = state(vec![4], &[]);
    assert_eq!(s.go_value(&x, 0, 0.5), -0.5);
}

#[test]
fn do_value_reads_the_completed_set() {
    let s = team_scenario();
    let done = state(vec![21, 18], &[0]);
    let pending = state(vec![21, 18], &[]);
    assert_eq!(s.do_value(&done, 0, 1.0), 1.0);
    assert_eq!(s.do_value(&pending, 0, 1.0), -1.0);
    for r in 0..3 {
        assert_eq!(s.do_value(&pending, r, 1.0), -1.0);
    }
}

#[test]
fn grounded_states_evaluate_formulas() {
    let s = team_scenario();
    let table = s.predicate_table();
    let phi = crate::logic::parse_formula("go1", &table).unwrap();
    let traj = vec![state(vec![21, 18], &[])];
    let grounded = s.ground_trajectory(&traj);
    assert_eq!(robustness(&grounded, &phi, 0).unwrap(), 0.5);
}

#[test]
fn stationary_episode_extracts_idle_plans() {
    let s = team_scenario();
    let states = vec![s.initial_team_state(); 4];
    let actions = vec![vec![AgentAction::Idle, AgentAction::Idle]; 3];
    let plans = extract_ms_plans(&s, &states, &actions).unwrap();
    assert_eq!(plans[0].steps, vec![(4, None); 4]);
    assert_eq!(plans[1].steps, vec![(18, None); 4]);
}

#[test]
fn move_then_service_extracts_expected_plan() {
    let s = Scenario::<f64>::new(
        "line",
        EnvGraph::grid(3, 1),
        vec![RequestSpec { display_id: 1, locations: vec![1] }],
        vec![AgentSpec { start: 0, reachable: None, capabilities: vec![1] }],
        0.5,
        1.0,
        10,
        None,
    )
    .unwrap();
    let states = vec![
        state(vec![0], &[]),
        state(vec![1], &[]),
        state(vec![1], &[0]),
    ];
    let actions = vec![vec![AgentAction::Goto(1)], vec![AgentAction::Service(0)]];
    let plans = extract_ms_plans(&s, &states, &actions).unwrap();
    assert_eq!(plans[0].steps, vec![(0, None), (1, None), (1, Some(0))]);
}

#[test]
fn plan_validation_rejects_moving_while_servicing() {
    let s = team_scenario();
    // walking onto the request site and servicing in the same step
    let plan = MsPlan {
        steps: vec![
            (4, None),
            (9, None),
            (8, None),
            (7, None),
            (6, None),
            (11, None),
            (16, None),
            (21, Some(0)),
        ],
    };
    assert_eq!(
        validate_ms_plan(&s, 0, &plan).unwrap_err(),
        PlanError::MoveWithService { agent: 0, step: 7 }
    );
    // servicing away from every site is rejected as well
    let off_site = MsPlan { steps: vec![(4, None), (4, Some(0))] };
    assert_eq!(
        validate_ms_plan(&s, 0, &off_site).unwrap_err(),
        PlanError::ServiceOffSite { agent: 0, step: 1 }
    );
}

#[test]
fn plan_validation_rejects_teleports() {
    let s = team_scenario();
    let plan = MsPlan { steps: vec![(4, None), (20, None)] };
    assert_eq!(
        validate_ms_plan(&s, 0, &plan).unwrap_err(),
        PlanError::Disconnected { agent: 0, step: 1 }
    );
}

#[test]
fn scenario_requires_an_owner_per_request() {
    let err = Scenario::<f64>::new(
        "orphan",
        EnvGraph::grid(2, 2),
        vec![RequestSpec { display_id: 1, locations: vec![0] }],
        vec![AgentSpec { start: 0, reachable: None, capabilities: vec![] }],
        0.5,
        1.0,
        10,
        None,
    )
    .unwrap_err();
    assert_eq!(err, WorldError::NoOwner { id: 1 });
}

#[test]
fn scenario_document_round_trips_core_fields() {
    let doc = r#"
name = "pair"
horizon = 42
formula = "<> do1"

[graph]
grid = [3, 2]

[constants]
go = 0.25
do = 2.0

[[requests]]
id = 1
locations = [5]
owners = [1]

[[agents]]
id = 1
start = 0
capabilities = [1]
"#;
    let (s, warnings) = load_scenario::<f64>(doc).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(s.name, "pair");
    assert_eq!(s.horizon, 42);
    assert_eq!(s.go_constant, 0.25);
    assert_eq!(s.do_constant, 2.0);
    assert_eq!(s.graph.num_vertices(), 6);
    assert!(s.formula.is_some());
    assert_eq!(s.requests[0].owners, vec![0]);
}

#[test]
fn scenario_document_rejects_owner_capability_mismatch() {
    let doc = r#"
name = "bad"
[graph]
grid = [2, 2]

[[requests]]
id = 1
locations = [0]
owners = [1]

[[agents]]
id = 1
start = 0
capabilities = []

[[agents]]
id = 2
start = 1
capabilities = [1]
"#;
    let err = load_scenario::<f64>(doc).unwrap_err();
    assert!(matches!(err, ScenarioLoadError::World(WorldError::OwnersMismatch { id: 1 })));
}

#[test]
fn scenario_document_rejects_unknown_formula_predicates() {
    let doc = r#"
name = "bad"
formula = "<> do7"
[graph]
grid = [2, 2]

[[requests]]
id = 1
locations = [0]

[[agents]]
id = 1
start = 0
capabilities = [1]
"#;
    let err = load_scenario::<f64>(doc).unwrap_err();
    assert!(matches!(err, ScenarioLoadError::World(WorldError::Formula(_))));
}

proptest! {
    // one motion step changes any go value by at most one
    #[test]
    fn go_value_is_one_lipschitz_under_single_moves(
        positions in (0usize..25, 0usize..25),
        request in 0usize..3,
        mover in 0usize..2,
        step in 0usize..4,
    ) {
        let s = team_scenario();
        let x = state(vec![positions.0, positions.1], &[]);
        let before = s.go_value(&x, request, 0.5);
        let from = x.positions[mover];
        let neighbors = s.graph.neighbors(from);
        let to = neighbors[step % neighbors.len()];
        let mut moved = x.clone();
        moved.positions[mover] = to;
        let after = s.go_value(&moved, request, 0.5);
        prop_assert!((after - before).abs() <= 1.0 + 1e-12);
    }

    // motion output always stays inside the agent's reachable set
    #[test]
    fn agent_step_is_closed_over_reachable(
        v in 0usize..25,
        target in 0usize..25,
    ) {
        let s = team_scenario();
        let out = s.agent_step(0, v, &AgentAction::Goto(target)).unwrap();
        prop_assert!(s.agents[0].can_reach(out));
        prop_assert!(out == v || out == target);
    }
}
