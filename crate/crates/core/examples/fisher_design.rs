//! Fisher information of each action at the current type estimate and the
//! D-optimal choice.

use egpf::info::{d_optimal_action, design_score, fisher_information, DesignMode, QreFeatureFamily};
use egpf::scenarios::{archetypes, launch_game};
use egpf::types::UtilityFeatures;

fn main() -> egpf::Result<()> {
    let family = QreFeatureFamily {
        features: UtilityFeatures {
            evidence: vec![0.9, 0.3, 0.2],
            peer: vec![0.2, 0.9, 0.3],
            outcome: vec![vec![0.6, 0.0], vec![0.4, 0.0], vec![0.8, 0.0]],
            access: vec![0.3, 0.0],
            variance: vec![0.2, 0.4, 0.3],
            load: vec![0.5, 0.2, 0.3],
        },
        tau: 3.0,
        status_quo: 1,
    };
    let g = launch_game();
    let estimate = g.type_set().mean_type(g.prior());
    let theta = estimate.to_array();
    for a in 0..3 {
        let fim = fisher_information(&theta, a, &family, 1e-5)?;
        let (rank, det) = design_score(&fim, &DesignMode::Det);
        println!("action {a}: rank {rank}, pseudo-determinant {det:.3e}, min eigenvalue {:.1e}", fim.min_eigenvalue());
    }
    println!("D-optimal at the prior mean: {}", d_optimal_action(&estimate, &family, &DesignMode::Det, 1e-5)?);
    println!("D-optimal for the evidence archetype: {}", d_optimal_action(&archetypes()[0], &family, &DesignMode::Det, 1e-5)?);
    Ok(())
}
