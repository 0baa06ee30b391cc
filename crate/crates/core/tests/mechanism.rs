//! Envelope transfers against an exhaustive IC/IR evaluation on random
//! instances with increasing differences.

use egpf::game::{audit_mechanism, derive_transfers, Mechanism};
use egpf::types::{PayoffTensor, TypeSet, TypeVector};
use egpf::{Belief, GameSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    game: GameSpec,
    value: Vec<Vec<f64>>,
    allocation: Vec<usize>,
}

fn instance(rng: &mut ChaCha8Rng) -> Instance {
    let k = rng.random_range(2..=5);
    let m = rng.random_range(2..=5);
    let mut alphas: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.9)).collect();
    alphas.sort_by(f64::total_cmp);
    for j in 1..k {
        alphas[j] = alphas[j].max(alphas[j - 1] + 1e-3);
    }
    let mut evidence: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0)).collect();
    evidence.sort_by(f64::total_cmp);
    let cost: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    // V(a, θ_j) = α_j·e(a) + c(a), supermodular in (α, e)
    let value: Vec<Vec<f64>> = (0..m)
        .map(|a| alphas.iter().map(|al| al * evidence[a] + cost[a]).collect())
        .collect();
    let types = alphas
        .iter()
        .map(|&a| TypeVector::new(a, 1.0 - a, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0))
        .collect();
    let game = GameSpec::new(
        TypeSet::new(types, 0.0).unwrap(),
        (0..m).map(|a| format!("a{a}")).collect(),
        vec!["adopt".into(), "defer".into()],
        PayoffTensor::zeros(m, 2, k),
        PayoffTensor::from_fn(m, 2, k, |a, d, j| if d == 0 { value[a][j] } else { -100.0 }),
        Belief::uniform(k),
        1.0,
    )
    .unwrap();
    let mut allocation: Vec<usize> = (0..k).map(|_| rng.random_range(0..m)).collect();
    allocation.sort();
    Instance { game, value, allocation }
}

#[test]
fn envelope_transfers_pass_exhaustive_ic() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..500 {
        let inst = instance(&mut rng);
        let base = rng.random_range(-1.0..1.0);
        let t = derive_transfers(&inst.game, &inst.allocation, base).unwrap();
        let k = t.len();
        for truth in 0..k {
            let own = inst.value[inst.allocation[truth]][truth] + t[truth];
            for report in 0..k {
                let lie = inst.value[inst.allocation[report]][truth] + t[report];
                assert!(own >= lie - 1e-12, "type {truth} gains by reporting {report}");
            }
        }
        let outside: Vec<f64> = (0..k).map(|j| inst.value[inst.allocation[j]][j] + t[j] - 0.01).collect();
        let mech = Mechanism { allocation: inst.allocation.clone(), transfers: t, outside_option: outside };
        let audit = audit_mechanism(&inst.game, &mech).unwrap();
        assert!(audit.passed, "{audit:?}");
        assert!((audit.min_ir_slack - 0.01).abs() < 1e-12);
    }
}

#[test]
fn raising_an_outside_option_breaks_ir() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let inst = instance(&mut rng);
    let t = derive_transfers(&inst.game, &inst.allocation, 0.0).unwrap();
    let mut outside = vec![-10.0; t.len()];
    outside[0] = inst.value[inst.allocation[0]][0] + t[0] + 0.5;
    let mech = Mechanism { allocation: inst.allocation, transfers: t, outside_option: outside };
    let audit = audit_mechanism(&inst.game, &mech).unwrap();
    assert!(audit.ic_violations.is_empty());
    assert_eq!(audit.ir_violations.len(), 1);
    assert!((audit.ir_violations[0].slack + 0.5).abs() < 1e-12);
}
