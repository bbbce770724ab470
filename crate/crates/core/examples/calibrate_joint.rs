//! Recover PD gains and the backlash gap of a joint from simulated data.
//!
//! `cargo run --release --example calibrate_joint`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stickhand::calibration::{estimate_backlash, fit_gains, probe_positions, synthetic_recording, CmaOptions, ProbeOptions, ReferenceSignal};
use stickhand::hand::joint_rig::JointRig;
use stickhand::hand::model::HandModel;

fn main() -> anyhow::Result<()> {
    let model = HandModel::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let (kp, kd) = (5.1, 0.13);
    let recording = synthetic_recording(&model, 0, kp, kd, &ReferenceSignal::default(), 1e-3, &mut rng)?;
    let fit = fit_gains(&model, 0, &recording, &CmaOptions { max_generations: 150, tol_x: 1e-6, seed: 1, ..CmaOptions::default() })?;
    println!("true   kp {kp:.4}  kd {kd:.4}");
    println!("fitted kp {:.4}  kd {:.4}  ({} generations, residual {:.3e})", fit.kp.mean, fit.kd.mean, fit.generations, fit.residual);

    let mut rig = JointRig::from_model(&model, 0);
    rig.spec.backlash_range = [-0.012, 0.018];
    let est = estimate_backlash(&rig, &probe_positions(&rig, 5), 0.02, &ProbeOptions::default(), &mut rng)?;
    println!("backlash true {:?}  estimated [{:.5}, {:.5}]", rig.spec.backlash_range, est.range[0], est.range[1]);
    for (q, r) in &est.per_probe {
        println!("  probe at {q:.3} rad -> [{:.5}, {:.5}]", r[0], r[1]);
    }
    Ok(())
}
