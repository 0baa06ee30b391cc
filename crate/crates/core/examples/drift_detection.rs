//! A physician whose responses stop matching the model halfway through.

use egpf::belief::{drift_detect, DriftSettings, Interaction, InteractionHistory};
use egpf::info::qre_channels;
use egpf::scenarios::launch_game;
use egpf::sim::simulate_response;
use egpf::Belief;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> egpf::Result<()> {
    let g = launch_game();
    let channels = qre_channels(&g);
    // the model believes type 0; the physician behaves as type 2 from t = 60
    let model = Belief::point_mass(3, 0);
    let settings = DriftSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut history = InteractionHistory::new();
    for t in 1..=120u64 {
        let action = (t % 3) as usize;
        let k = if t < 60 { 0 } else { 2 };
        let response = simulate_response(&g, action, k, &mut rng);
        history.push(Interaction { t, action, response })?;
        if t as usize >= settings.window && t % 10 == 0 {
            let r = drift_detect(&history, &channels, &model, &settings)?;
            println!("t={t:3} statistic {:.3} triggered {}", r.statistic, r.triggered);
        }
    }
    Ok(())
}
