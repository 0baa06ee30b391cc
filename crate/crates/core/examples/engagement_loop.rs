//! The full loop against random and greedy baselines on the launch game.

use egpf::scenarios::launch_game;
use egpf::sim::{run_experiment, ScenarioConfig};

fn main() -> egpf::Result<()> {
    let mut cfg = ScenarioConfig::new(launch_game(), 200);
    cfg.replications = 200;
    cfg.seed = 2024;
    cfg.drift = None;
    let res = run_experiment(&cfg, false)?;
    for s in &res.summary.strategies {
        let steps: Vec<String> = s
            .steps_to_confidence
            .iter()
            .map(|c| format!("type {}: {:.1}", c.true_type, c.steps.mean))
            .collect();
        println!(
            "{:?}: regret {:.2} ± {:.2}, steps to 90% [{}]",
            s.strategy,
            s.final_regret.mean,
            s.final_regret.ci95,
            steps.join(", ")
        );
    }
    Ok(())
}
