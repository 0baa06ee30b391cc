//! Population shares before and after a competitor enters at t = 100.

use egpf::population::{ess_audit, integrate_replicator, PharmaStrategy, Policy, PopulationState};
use egpf::scenarios::{competitor_entry, launch_game, market_shift_game};

fn main() -> egpf::Result<()> {
    let x0 = PopulationState::new(vec![0.35, 0.45, 0.20], 0.0)?;
    let traj = integrate_replicator(
        &x0,
        &market_shift_game(),
        &Policy::Fixed(PharmaStrategy::Pure(0)),
        200.0,
        0.05,
        &[competitor_entry(100.0)],
    )?;
    for s in traj.states.iter().step_by(400) {
        println!("t={:5.1} shares {:.3?}", s.time, s.shares());
    }
    println!("final {:.3?}; events {:?}", traj.last().shares(), traj.events);

    let mono = PopulationState::vertex(3, 0);
    let mutants: Vec<_> = (1..3).map(|k| PopulationState::vertex(3, k)).collect();
    let ess = ess_audit(&mono, &launch_game(), 0, &mutants)?;
    println!("evidence-driven monomorphism under clinical content is an ESS: {}", ess.passed);
    Ok(())
}
