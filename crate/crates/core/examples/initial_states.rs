//! Generate a set of three-finger grasps, save it and check it after reloading.
//!
//! `cargo run --release --example initial_states -- 50`

use stickhand::config::Config;
use stickhand::env::initial_states::{generate_initial_states, InitialStateSet};

fn main() -> anyhow::Result<()> {
    let n: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50);
    let config = Config::default();
    let world = config.world()?;
    let set = generate_initial_states(&world, &config.sampler, &config.task.sensor, n, 3)?;
    println!("{} states from {} candidates ({:.1}% accepted)", set.records.len(), set.provenance.attempts, 100.0 * set.acceptance_rate());

    let dir = std::env::temp_dir().join("stickhand_states");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("initial_states.csv");
    set.save(&path)?;
    let loaded = InitialStateSet::load(&path)?;
    println!("reloaded from {}: {:.0}% still touch with all three fingers", path.display(), 100.0 * loaded.verify(&world, &config.task.sensor));
    if let Some(first) = loaded.records.first() {
        println!("first record: q {:.3?}", first.q);
    }
    Ok(())
}
