//! PPO on the single-joint reach task, compared against the oracle controller.
//!
//! `cargo run --release --example train_toy -- 0`

use stickhand::learning::toy::{mean_return, ReachTask};
use stickhand::learning::{train, PpoConfig, TrainConfig};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let cfg = TrainConfig {
        n_envs: 8,
        steps_per_env: 256,
        total_steps: 200_000,
        seed,
        ppo: PpoConfig { minibatch_size: 256, learning_rate: 1e-3, ..PpoConfig::default() },
        ..TrainConfig::default()
    };
    let out = train(|_| Ok(ReachTask::new()), &cfg, |c, _| {
        if c.iteration % 10 == 0 {
            println!("iter {:3} steps {:6} return {:.2}", c.iteration, c.env_steps, c.mean_return);
        }
        Ok(())
    })?;
    let task = ReachTask::new();
    let oracle = mean_return(&task, 100, |_, t| Ok(t.oracle_action()))?;
    let learned = mean_return(&task, 100, |o, _| Ok(out.model.act(o)?[0]))?;
    println!("learned {learned:.3}  oracle {oracle:.3}  ratio {:.1}%", 100.0 * learned / oracle);
    Ok(())
}
