//! Commitment value: Stackelberg against Bayesian Nash on random games.

use egpf::game::{qre_distribution, solve_bne, solve_stackelberg};
use egpf::scenarios::launch_game;
use egpf::types::{sample_type_set, PayoffTensor};
use egpf::{Belief, GameSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> egpf::Result<()> {
    let g = launch_game();
    let bne = solve_bne(&g);
    println!("launch game BNE: pharma {:?}, leader payoff {:.3}", bne.pharma_strategy, bne.leader_payoff);
    for k in 0..g.num_types() {
        println!("  QRE response of type {k} to a1: {:.3?}", qre_distribution(&g, 0, k));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut gap = 0.0_f64;
    for i in 0..200 {
        let (k, m, l) = (rng.random_range(1..=4), rng.random_range(2..=5), rng.random_range(2..=3));
        let u_p = PayoffTensor::from_fn(m, l, k, |_, _, _| rng.random_range(-1.0..1.0));
        let u_d = PayoffTensor::from_fn(m, l, k, |_, _, _| rng.random_range(-1.0..1.0));
        let prior = Belief::from_masses((0..k).map(|_| rng.random_range(0.1..1.0)).collect())?;
        let game = GameSpec::new(
            sample_type_set(k, 0.05, i)?,
            (0..m).map(|a| format!("a{a}")).collect(),
            (0..l).map(|d| format!("d{d}")).collect(),
            u_p,
            u_d,
            prior,
            2.0,
        )?;
        let lead = solve_stackelberg(&game, game.prior()).1 - solve_bne(&game).leader_payoff;
        assert!(lead >= 0.0);
        gap = gap.max(lead);
    }
    println!("200 random games: Stackelberg never below BNE (largest lead {gap:.3})");
    Ok(())
}
