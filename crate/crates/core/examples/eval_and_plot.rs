//! Evaluate a policy on the circle task, write episode logs and SVG plots.
//!
//! With a checkpoint path the trained policy is used, otherwise zero actions.
//!
//! `cargo run --release --example eval_and_plot -- [checkpoint.txt]`

use std::path::PathBuf;
use std::sync::Arc;

use stickhand::config::Config;
use stickhand::env::initial_states::generate_initial_states;
use stickhand::env::task::HandEnv;
use stickhand::eval::{evaluate, save_log};
use stickhand::hand::model::N_ACTUATED;
use stickhand::learning::checkpoint;
use stickhand::plot::{contact_timelines_svg, joint_timelines_svg, xy_trace_svg};

fn main() -> anyhow::Result<()> {
    let model = std::env::args().nth(1).map(|p| checkpoint::load(PathBuf::from(p).as_path())).transpose()?;
    let config = Config::default();
    let world = config.world()?;
    let states = generate_initial_states(&world, &config.sampler, &config.task.sensor, 50, 1)?;
    let mut env = HandEnv::new(world, config.task.clone(), config.reward, config.randomization(), Arc::new(states.records))?;

    let out = std::env::temp_dir().join("stickhand_eval");
    std::fs::create_dir_all(&out)?;
    let report = evaluate(
        &mut env,
        |o| match &model {
            Some(m) => m.act(o),
            None => Ok(vec![0.0; N_ACTUATED]),
        },
        3,
        7,
        |i, rows| {
            save_log(&out.join(format!("episode_{i:02}.csv")), rows)?;
            if i == 0 {
                std::fs::write(out.join("xy.svg"), xy_trace_svg(rows))?;
                std::fs::write(out.join("joints.svg"), joint_timelines_svg(rows))?;
                std::fs::write(out.join("contacts.svg"), contact_timelines_svg(rows))?;
            }
            Ok(())
        },
    )?;
    for e in &report.episodes {
        println!("episode {}: {} steps, retained {}, p_err {:.2} cm, q_err {:.2} deg", e.episode, e.steps, e.retained, e.p_err_cm, e.q_err_deg);
    }
    println!("retention {:.0}%, outputs in {}", 100.0 * report.retention(), out.display());
    Ok(())
}
