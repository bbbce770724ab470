//! Train a hand policy on the circle task and evaluate it.
//!
//! `cargo run --release --example train_hand -- contact_centers 5000000 0 policy.txt`

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use stickhand::config::Config;
use stickhand::env::initial_states::generate_initial_states;
use stickhand::env::observation::ObservationVariant;
use stickhand::env::task::HandEnv;
use stickhand::eval::evaluate;
use stickhand::learning::{checkpoint, train};

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut config = Config::default();
    config.task.observation = args.first().map(|s| s.parse::<ObservationVariant>()).transpose()?.unwrap_or(ObservationVariant::ContactCenters);
    config.train.total_steps = args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(5_000_000);
    config.train.seed = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let path = PathBuf::from(args.get(3).cloned().unwrap_or_else(|| "policy.txt".into()));

    let world = config.world()?;
    let states = Arc::new(generate_initial_states(&world, &config.sampler, &config.task.sensor, 300, 1)?.records);
    let randomization = config.randomization();
    let started = Instant::now();
    let out = train(
        |_| HandEnv::new(world.clone(), config.task.clone(), config.reward, randomization.clone(), states.clone()),
        &config.train,
        |c, _| {
            println!(
                "iter {:4} steps {:8} return {:7.2} p_err {:.2} cm q_err {:5.2} deg episodes {:3} kl {:.4} {:.0}s",
                c.iteration,
                c.env_steps,
                c.mean_return,
                100.0 * c.mean_p_err,
                c.mean_q_err,
                c.episodes,
                c.update.approx_kl,
                started.elapsed().as_secs_f64()
            );
            Ok(())
        },
    )?;
    checkpoint::save(&path, &out.model)?;

    let mut env = HandEnv::new(world, config.task.clone(), config.reward, randomization, states)?;
    let report = evaluate(&mut env, |o| out.model.act(o), 10, 123, |_, _| Ok(()))?;
    println!(
        "eval: retained {}/10, p_err {:.3} cm, q_err {:.2} deg, return {:.2}",
        report.retained(),
        report.mean_p_err_cm(),
        report.mean_q_err_deg(),
        report.mean_return()
    );
    Ok(())
}
