//! Property tests over randomly drawn beliefs, likelihoods and channels.

use egpf::belief::bayes_update;
use egpf::compose::tv_distance;
use egpf::info::{channel_capacity, mutual_information, ChannelMatrix};
use egpf::Belief;
use proptest::prelude::*;

fn masses(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, k)
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let z: f64 = v.iter().sum();
    v.into_iter().map(|x| x / z).collect()
}

proptest! {
    #[test]
    fn sequential_updates_match_one_batched_update(
        (prior, steps) in (2usize..7).prop_flat_map(|k| (masses(k), prop::collection::vec(masses(k), 1..6)))
    ) {
        let mu0 = Belief::from_masses(prior).unwrap();
        let mut seq = mu0.clone();
        let mut product = vec![1.0; mu0.len()];
        for l in &steps {
            seq = bayes_update(&seq, l).unwrap();
            for (p, x) in product.iter_mut().zip(l) {
                *p *= x;
            }
        }
        let batch = bayes_update(&mu0, &product).unwrap();
        prop_assert!(tv_distance(seq.weights(), batch.weights()) < 1e-12);
        prop_assert!((seq.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_bounds_every_input(
        (rows, input) in (2usize..5, 2usize..5).prop_flat_map(|(m, n)| {
            (prop::collection::vec(masses(n), m), masses(m))
        })
    ) {
        let ch = ChannelMatrix::new(rows.into_iter().map(normalized).collect()).unwrap();
        let cap = channel_capacity(&ch, 1e-7, 20_000);
        // the returned gap certifies an upper bound even without convergence
        let mi = mutual_information(&normalized(input), &ch);
        prop_assert!(mi <= cap.capacity + cap.gap + 1e-12);
        prop_assert!(cap.history.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let ceiling = (ch.inputs().min(ch.outputs()) as f64).log2();
        prop_assert!(cap.capacity <= ceiling + 1e-9);
    }
}
