//! Functor laws of updating, type mixing, a domain-transfer defect and the
//! cross-scale consistency loss.

use std::collections::BTreeMap;

use egpf::compose::{
    aggregate_beliefs, functor_law_check, naturality_residual, reassociate, sheaf_loss, tensor_compose,
    BeliefUpdateMap, ScalePoset, TransferMap,
};
use egpf::scenarios::archetypes;
use egpf::Belief;

fn main() -> egpf::Result<()> {
    let mu = Belief::new(vec![0.35, 0.45, 0.20])?;
    let f = BeliefUpdateMap::new(vec![0.65, 0.20, 0.40])?;
    let g = BeliefUpdateMap::new(vec![0.3, 0.7, 0.5])?;
    println!("{:?}", functor_law_check(&mu, &f, &g)?);

    let types = archetypes();
    let visits = 12.0;
    let w = |n: &f64| (n / 20.0).min(1.0);
    let mixed = tensor_compose(&types[0], &types[1], w, &visits)?;
    println!("mixed type alpha_E {:.3}, alpha_P {:.3}", mixed.alpha_e, mixed.alpha_p);
    println!("regrouping weights for (0.4, 0.7): {:?}", reassociate(0.4, 0.7));

    let eta = TransferMap::new(vec![vec![0.9, 0.1, 0.0], vec![0.1, 0.8, 0.1], vec![0.0, 0.2, 0.8]])?;
    println!("naturality defect {:.4}", naturality_residual(&eta, &f, &f, &mu)?);

    let poset = ScalePoset::standard(3);
    let weekly = aggregate_beliefs(&[mu.clone(), f.apply(&mu)?])?;
    let mut sections = BTreeMap::new();
    sections.insert("interaction".to_string(), f.apply(&mu)?);
    sections.insert("weekly".to_string(), weekly.clone());
    sections.insert("monthly".to_string(), weekly.clone());
    sections.insert("quarterly".to_string(), mu.clone());
    let report = sheaf_loss(&sections, &poset)?;
    println!("sheaf loss {:.4}", report.loss);
    for (pair, term) in &report.pairs {
        println!("  {pair}: {term:.4}");
    }
    Ok(())
}
