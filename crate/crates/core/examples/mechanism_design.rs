//! Transfers that make truthful type reports optimal, then an audit.

use egpf::game::{audit_mechanism, derive_transfers, Mechanism};
use egpf::types::{PayoffTensor, TypeSet, TypeVector};
use egpf::{Belief, GameSpec};

fn main() -> egpf::Result<()> {
    // types ordered by evidence sensitivity; evidence-rich content is worth
    // more to the more sensitive types
    let alphas = [0.2, 0.45, 0.7];
    let evidence = [0.0, 0.6, 1.2];
    let cost = [0.5, 0.35, 0.1];
    let types = alphas
        .iter()
        .map(|&a| TypeVector::new(a, 1.0 - a, 0.0, 0.0, 1.0, 0.3, 0.8, 0.9))
        .collect();
    let game = GameSpec::new(
        TypeSet::new(types, 0.0)?,
        vec!["summary".into(), "deep_dive".into(), "trial_data".into()],
        vec!["engage".into(), "ignore".into()],
        PayoffTensor::zeros(3, 2, 3),
        PayoffTensor::from_fn(3, 2, 3, |a, d, k| if d == 0 { alphas[k] * evidence[a] + cost[a] } else { 0.0 }),
        Belief::uniform(3),
        3.0,
    )?;
    let allocation = vec![0, 1, 2];
    let transfers = derive_transfers(&game, &allocation, 0.0)?;
    println!("transfers {transfers:.3?}");
    let mech = Mechanism { allocation, transfers, outside_option: vec![0.4; 3] };
    let audit = audit_mechanism(&game, &mech)?;
    println!(
        "passed {} (min IC slack {:.3}, min IR slack {:.3})",
        audit.passed, audit.min_ic_slack, audit.min_ir_slack
    );
    Ok(())
}
