//! How many bits of type information personalization needs for a given
//! relevance loss.

use egpf::info::{is_monotone_convex, personalization_distortion, rate_distortion_curve, DistortionWeights};
use egpf::Belief;

fn main() -> egpf::Result<()> {
    // three types, four content variants
    let relevance = vec![
        vec![0.95, 0.40, 0.30, 0.60],
        vec![0.35, 0.90, 0.45, 0.60],
        vec![0.25, 0.45, 0.90, 0.60],
    ];
    let regulatory = vec![0.05, 0.10, 0.20, 0.0];
    let privacy = vec![vec![0.1, 0.0, 0.0, 0.0], vec![0.0, 0.1, 0.0, 0.0], vec![0.0, 0.0, 0.2, 0.0]];
    let weights = DistortionWeights { lambda_r: 0.5, lambda_p: 0.3 };
    let d = personalization_distortion(&relevance, &regulatory, &privacy, weights)?;
    let slopes: Vec<f64> = (0..=16).map(|i| 0.5 * i as f64).collect();
    let curve = rate_distortion_curve(&Belief::new(vec![0.35, 0.45, 0.20])?, &d, weights, &slopes, 1e-9, 10_000)?;
    for p in &curve {
        println!("s={:4.1}  D={:.4}  R={:.4} bits", p.lambda, p.distortion, p.rate);
    }
    println!("monotone and convex: {}", is_monotone_convex(&curve, 1e-6));
    Ok(())
}
