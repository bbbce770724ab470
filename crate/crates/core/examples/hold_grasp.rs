//! Step the hand environment with zero actions and watch the grasp.
//!
//! `cargo run --release --example hold_grasp`

use std::sync::Arc;

use stickhand::config::Config;
use stickhand::env::initial_states::generate_initial_states;
use stickhand::env::task::HandEnv;
use stickhand::hand::model::N_ACTUATED;

fn main() -> anyhow::Result<()> {
    let config = Config::default();
    let world = config.world()?;
    let states = generate_initial_states(&world, &config.sampler, &config.task.sensor, 20, 5)?;
    let mut env = HandEnv::new(world, config.task.clone(), config.reward, config.randomization(), Arc::new(states.records))?;

    let mut held = 0;
    for episode in 0..10u64 {
        env.reset(episode)?;
        let mut ret = 0.0;
        let mut steps = 0;
        loop {
            let out = env.step(&[0.0; N_ACTUATED])?;
            ret += out.reward;
            steps += 1;
            if steps % 100 == 0 {
                let c = out.info.actual.p2;
                println!("  ep {episode} t {:.1}s lower end [{:.4}, {:.4}, {:.4}] p_err {:.2} cm", env.time(), c[0], c[1], c[2], 100.0 * out.info.p_err_lower);
            }
            if out.terminated || out.truncated {
                held += usize::from(!out.terminated);
                println!("episode {episode}: {steps} steps, return {ret:.2}, {}", if out.terminated { "dropped" } else { "held" });
                break;
            }
        }
    }
    println!("held {held}/10");
    Ok(())
}
