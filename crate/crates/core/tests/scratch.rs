use std::path::Path;

use tltl_marl::learning::{train, Learner, TrainConfig};
use tltl_marl::world::load_scenario;

#[test]
fn probe() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/example1");
    let text = std::fs::read_to_string(root.join("scenario.toml")).unwrap();
    let (scenario, _) = load_scenario::<f64>(&text).unwrap();
    let table = scenario.predicate_table();
    let fspa_text = std::fs::read_to_string(root.join("fspa.toml")).unwrap();
    let (fspa, _) = tltl_marl::automaton::load_fspa::<f64>(&fspa_text, &table).unwrap();

    let config = TrainConfig { episodes: 10_000, seed: 1, ..TrainConfig::default() };
    let out = train(&scenario, &fspa, &config, Learner::PolicyGraph).unwrap();
    for chunk in out.metrics.chunks(1000) {
        // deepest automaton state reached per episode, counted per block
        let mut reach = [0usize; 8];
        let mut successes = 0;
        for m in chunk {
            let max_q = m.automaton_path.iter().map(|&q| q as usize).filter(|&q| q != 7).max().unwrap_or(0);
            reach[max_q] += 1;
            if m.success {
                successes += 1;
            }
            if m.automaton_path.iter().any(|&q| q == 7) {
                reach[7] += 1;
            }
        }
        println!(
            "ep {:>5}: depth histogram q0..q6 {:?} trapped {} success {}",
            chunk[0].episode, &reach[..7], reach[7], successes
        );
    }
}
