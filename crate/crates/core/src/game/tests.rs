use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::automaton::Fspa;
use crate::logic::parse_guard;
use crate::scalar::RHO_MAX;
use crate::world::{AgentSpec, EnvGraph, RequestSpec};

/// Two agents on a 5x5 grid; requests 1 (agent 1, vertex 21), 2 (agent 2,
/// vertex 9), 3 (shared, vertex 12). Mission: finish 1 or 2, then 3.
fn scenario() -> Scenario<f64> {
    Scenario::new(
        "mission",
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
        Some("(<> do1 || <> do2) && <> do3 && (!do3 U (do1 || do2))"),
    )
    .unwrap()
}

fn mission_fspa(scenario: &Scenario<f64>) -> Fspa<f64> {
    let table = scenario.predicate_table();
    let g = |text: &str| parse_guard(text, &table).unwrap();
    let s = |names: &[&str]| names.iter().map(|n| n.to_string()).collect::<Vec<_>>();
    Fspa::new(
        s(&["start", "post", "ready", "acc", "trap"]),
        "start",
        &s(&["acc"]),
        &s(&["trap"]),
        vec![
            ("start".into(), "trap".into(), g("do3 && !do1 && !do2"), 1.0),
            ("start".into(), "post".into(), g("(do1 || do2) && !do3"), 1.0),
            ("post".into(), "ready".into(), g("go3 && !do3"), 1.0),
            ("ready".into(), "acc".into(), g("do3"), 1.0),
        ],
    )
    .unwrap()
}

fn game<'a>(scenario: &'a Scenario<f64>, fspa: &'a Fspa<f64>) -> FspaGame<'a, f64> {
    FspaGame::new(scenario, fspa, scenario.horizon, 1.0).unwrap()
}

fn idle(n: usize) -> Vec<AgentAction> {
    vec![AgentAction::Idle; n]
}

#[test]
fn reset_places_agents_at_their_starts() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let s = game.reset();
    assert_eq!(s.team.positions, vec![4, 18]);
    assert!(s.team.completed.is_empty());
    assert_eq!(s.q, fspa.state_index("start").unwrap());
    assert_eq!(s.t, 0);
    assert_eq!(game.reset(), s);
    assert!(game.energy_table().get(s.q).is_finite());
}

#[test]
fn joint_idle_is_a_no_op_with_zero_rewards() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let s = game.reset();
    let out = game.step(&s, &idle(2)).unwrap();
    assert_eq!(out.next.team, s.team);
    assert_eq!(out.next.q, s.q);
    assert_eq!(out.base_reward, 0.0);
    assert_eq!(out.shaped_energy, 0.0);
    assert_eq!(out.shaped_rho, vec![0.0, 0.0]);
    assert!(!out.done && !out.success);
}

#[test]
fn identical_inputs_yield_identical_outcomes() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let s = game.reset();
    let actions = vec![AgentAction::Goto(3), AgentAction::Goto(13)];
    assert_eq!(game.step(&s, &actions).unwrap(), game.step(&s, &actions).unwrap());
}

#[test]
fn entering_the_final_set_pays_plus_c() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let s = GameState {
        team: TeamState { positions: vec![12, 12], completed: RequestSet::empty() },
        q: fspa.state_index("ready").unwrap(),
        t: 10,
    };
    let out = game.step(&s, &[AgentAction::Service(2), AgentAction::Service(2)]).unwrap();
    assert_eq!(out.base_reward, 1.0);
    assert!(out.done && out.success);
    // energy drops by one unit along the final edge
    assert_eq!(out.shaped_energy, 1.0);
}

#[test]
fn entering_the_trap_pays_minus_c() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let s = GameState {
        team: TeamState { positions: vec![12, 12], completed: RequestSet::empty() },
        q: fspa.state_index("start").unwrap(),
        t: 0,
    };
    let out = game.step(&s, &[AgentAction::Service(2), AgentAction::Service(2)]).unwrap();
    assert_eq!(out.base_reward, -1.0);
    assert!(out.done && !out.success);
    assert_eq!(out.shaped_energy, -RHO_MAX);
}

#[test]
fn base_reward_fires_only_on_first_entry() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let acc = fspa.state_index("acc").unwrap();
    let start = fspa.state_index("start").unwrap();
    assert_eq!(game.base_reward(acc, acc), 0.0);
    assert_eq!(game.base_reward(start, start), 0.0);
    assert_eq!(game.base_reward(start, acc), 1.0);
}

#[test]
fn stepping_a_finished_episode_is_an_error() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let done = GameState {
        team: sc.initial_team_state(),
        q: fspa.state_index("acc").unwrap(),
        t: 5,
    };
    assert_eq!(game.step(&done, &idle(2)).unwrap_err(), GameError::EpisodeFinished);
}

#[test]
fn horizon_exhaustion_finishes_without_success() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = FspaGame::new(&sc, &fspa, 2, 1.0).unwrap();
    let s = game.reset();
    let out1 = game.step(&s, &idle(2)).unwrap();
    assert!(!out1.done);
    let out2 = game.step(&out1.next, &idle(2)).unwrap();
    assert!(out2.done && !out2.success);
}

#[test]
fn idle_agents_predict_the_realized_state() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let s = game.reset();
    let actions = vec![AgentAction::Goto(3), AgentAction::Idle];
    let out = game.step(&s, &actions).unwrap();
    let (team_hat, q_hat) = game.predicted_state(1, &s, &out.next.team);
    assert_eq!(team_hat, out.next.team);
    assert_eq!(q_hat, out.next.q);
    assert_eq!(out.shaped_rho[1], 0.0);
}

#[test]
fn prediction_removes_completions_requiring_the_agent() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    // shared request 3 completed by both owners; predicting either owner idle
    // removes it
    let s = GameState {
        team: TeamState { positions: vec![12, 12], completed: RequestSet::empty() },
        q: fspa.state_index("post").unwrap(),
        t: 3,
    };
    let out = game.step(&s, &[AgentAction::Service(2), AgentAction::Service(2)]).unwrap();
    assert!(out.next.team.completed.contains(2));
    let (team_hat, _) = game.predicted_state(0, &s, &out.next.team);
    assert!(team_hat.completed.is_empty());
}

#[test]
fn prediction_keeps_completions_not_involving_the_agent() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    // agent 1 finishes request 1 alone; predicting agent 2 idle keeps it
    let s = GameState {
        team: TeamState { positions: vec![21, 18], completed: RequestSet::empty() },
        q: fspa.state_index("start").unwrap(),
        t: 3,
    };
    let out = game.step(&s, &[AgentAction::Service(0), AgentAction::Goto(13)]).unwrap();
    assert!(out.next.team.completed.contains(0));
    let (team_hat, q_hat) = game.predicted_state(1, &s, &out.next.team);
    assert!(team_hat.completed.contains(0));
    assert_eq!(q_hat, out.next.q);
}

/// Automaton whose only non-trap exit from the initial state is guarded by
/// go1, so the outgoing disjunction has a distance gradient.
fn go_gradient_fspa(scenario: &Scenario<f64>) -> Fspa<f64> {
    let table = scenario.predicate_table();
    let g = |text: &str| parse_guard(text, &table).unwrap();
    Fspa::new(
        vec!["far".into(), "near".into(), "acc".into()],
        "far",
        &["acc".to_string()],
        &[],
        vec![
            ("far".into(), "near".into(), g("go1"), 1.0),
            ("near".into(), "acc".into(), g("do1"), 1.0),
        ],
    )
    .unwrap()
}

#[test]
fn moving_toward_the_guarded_site_pays_one() {
    let sc = scenario();
    let fspa = go_gradient_fspa(&sc);
    let game = FspaGame::new(&sc, &fspa, 100, 1.0).unwrap();
    // vertex 11 is distance 3 from vertex 21; vertex 16 distance 2
    let s = GameState {
        team: TeamState { positions: vec![11, 18], completed: RequestSet::empty() },
        q: 0,
        t: 0,
    };
    let toward = game.step(&s, &[AgentAction::Goto(16), AgentAction::Idle]).unwrap();
    assert_eq!(toward.shaped_rho[0], 1.0);
    let away = game.step(&s, &[AgentAction::Goto(6), AgentAction::Idle]).unwrap();
    assert_eq!(away.shaped_rho[0], -1.0);
}

#[test]
fn energy_difference_is_negative_on_backward_moves() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let post = fspa.state_index("post").unwrap();
    let ready = fspa.state_index("ready").unwrap();
    assert_eq!(game.shaped_energy(post, post), 0.0);
    assert_eq!(game.shaped_energy(post, ready), 1.0);
    // the reverse hop regains the lost energy as a penalty
    assert_eq!(game.shaped_energy(ready, post), -1.0);
}

#[test]
fn observation_is_the_own_vertex_only() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let a = GameState {
        team: TeamState { positions: vec![7, 18], completed: RequestSet::empty() },
        q: 0,
        t: 0,
    };
    let b = GameState {
        team: TeamState { positions: vec![7, 3], completed: RequestSet::empty() },
        q: 1,
        t: 4,
    };
    assert_eq!(game.observe(0, &a), 7);
    assert_eq!(game.observe(0, &a), game.observe(0, &b));
    assert_eq!(game.observe(1, &a), 18);
}

#[test]
fn random_episodes_keep_the_shaping_invariants() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let mut state = game.reset();
        let mut trace = EpisodeTrace::new(state.clone());
        let mut energy_sum = 0.0;
        let mut base_nonzero = 0;
        loop {
            let joint: Vec<AgentAction> = sc
                .agents
                .iter()
                .map(|a| a.actions()[rng.random_range(0..a.num_actions())])
                .collect();
            let out = game.step(&state, &joint).unwrap();
            energy_sum += out.shaped_energy;
            if out.base_reward != 0.0 {
                base_nonzero += 1;
            }
            for (i, action) in joint.iter().enumerate() {
                if *action == AgentAction::Idle {
                    assert_eq!(out.shaped_rho[i], 0.0);
                }
            }
            let done = out.done;
            state = out.next.clone();
            trace.push(joint, out);
            if done {
                break;
            }
        }
        assert!(base_nonzero <= 1);
        assert!(trace.validate_chain());
        let start_energy = game.energy_table().get(trace.start.q);
        let end_energy = game.energy_table().get(state.q);
        if start_energy.is_finite() && end_energy.is_finite() {
            assert_eq!(energy_sum, start_energy - end_energy);
        }
    }
}

#[test]
fn trace_records_follow_the_steps() {
    let sc = scenario();
    let fspa = mission_fspa(&sc);
    let game = game(&sc, &fspa);
    let s = game.reset();
    let mut trace = EpisodeTrace::new(s.clone());
    let actions = vec![AgentAction::Goto(3), AgentAction::Goto(17)];
    let out = game.step(&s, &actions).unwrap();
    trace.push(actions, out);
    let records = trace.records(&fspa);
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].step, 1);
    assert_eq!(records[0].positions, vec![3, 17]);
    assert_eq!(records[0].q, "start");
    let json = serde_json::to_string(&records[0]).unwrap();
    let back: TraceRecord<f64> = serde_json::from_str(&json).unwrap();
    assert_eq!(back, records[0]);
}
