//! Capacity of each type's response channel and the information gain of
//! each action under the prior.

use egpf::info::{channel_capacity, information_gain, qre_channels, ChannelMatrix};
use egpf::scenarios::launch_game;

fn main() {
    let g = launch_game();
    let channels = qre_channels(&g);
    for (k, ch) in channels.iter().enumerate() {
        let r = channel_capacity(ch, 1e-9, 10_000);
        println!(
            "type {k}: {:.4} bits after {} iterations, input {:.3?}",
            r.capacity, r.iterations, r.input
        );
    }
    for (a, name) in g.pharma_actions().iter().enumerate() {
        println!("I(D; type | {name}) = {:.4} bits", information_gain(g.prior(), a, &channels));
    }
    let z = ChannelMatrix::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
    let r = channel_capacity(&z, 1e-12, 10_000);
    println!("Z-channel: {:.6} bits (log2 1.25 = {:.6})", r.capacity, 1.25f64.log2());
}
