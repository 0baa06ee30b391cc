//! The launch game: expected utilities under the prior, one deferral, and
//! the leader switching to clinical content.

use egpf::belief::{bayes_update, entropy};
use egpf::game::{expected_pharma_utility, solve_stackelberg, Responder};
use egpf::info::{channel_capacity, qre_channels};
use egpf::scenarios::{launch_game, DEFER_LIKELIHOODS};
use egpf::sim::content_plan;

fn main() -> egpf::Result<()> {
    let game = launch_game();
    let prior = game.prior().clone();
    for (a, name) in game.pharma_actions().iter().enumerate() {
        let u = expected_pharma_utility(&game, a, &prior, Responder::BestResponse);
        println!("E[u_P | {name}] = {u:.3}");
    }
    let (a, v) = solve_stackelberg(&game, &prior);
    println!("leader plays {} ({v:.3}); H = {:.3} bits", game.pharma_actions()[a], entropy(&prior, 1.0));

    let post = bayes_update(&prior, &DEFER_LIKELIHOODS)?;
    println!("after a deferral: {:.4?}", post.weights());
    let (a, v) = solve_stackelberg(&game, &post);
    println!("leader switches to {} ({v:.3})", game.pharma_actions()[a]);

    let (map, _) = post.map_estimate();
    let cap = channel_capacity(&qre_channels(&game)[map], 1e-9, 10_000).capacity;
    let plan = content_plan(a, &post, game.type_set(), cap)?;
    println!("{}", serde_json::to_string_pretty(&plan)?);
    Ok(())
}
