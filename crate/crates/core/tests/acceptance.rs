//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line with
//! the measured value and its tolerance, then asserts.
//!
//! Criteria 10-12 train full hand policies (hours of CPU time) and are
//! `#[ignore]`d; run them with
//! `cargo test --release -p stickhand --test acceptance -- --ignored --test-threads=1`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stickhand::calibration::{
    cma_es_minimize, estimate_backlash, fit_gains, probe_positions, synthetic_recording, CmaOptions, ProbeOptions, ReferenceSignal,
};
use stickhand::config::Config;
use stickhand::env::initial_states::{generate_initial_states, InitialState, InitialStateSet};
use stickhand::env::observation::ObservationVariant;
use stickhand::env::reference::ReferenceSample;
use stickhand::env::reward::{reward_from_terms, RewardWeights, StickPose};
use stickhand::env::task::HandEnv;
use stickhand::eval::evaluate;
use stickhand::hand::dynamics::{StepOptions, World};
use stickhand::hand::joint_rig::JointRig;
use stickhand::hand::kinematics::forward_kinematics;
use stickhand::hand::model::{HandModel, StickModel, N_ACTUATED};
use stickhand::hand::state::SimState;
use stickhand::learning::gae::gae;
use stickhand::learning::mlp::Mlp;
use stickhand::learning::toy::{mean_return, ReachTask};
use stickhand::learning::{checkpoint, train, ActorCritic, PpoConfig, TrainConfig};
use stickhand::tactile::contact::{detect_contacts, ContactParams};
use stickhand::tactile::layout::{TaxelLayout, N_TAXELS, TAXELS_PER_PAD};
use stickhand::tactile::signal::{binarize, calibrate_offsets, contact_center, synthesize_raw, Crosstalk, TactileFrame};

/// Writes past the test harness capture so the line always shows up.
fn report(criterion: u32, passed: bool, detail: String) {
    let line = format!("criterion {criterion}: {} {detail}\n", if passed { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_01_reward_examples() {
    let p1 = Vector3::new(0.01, -0.02, 0.05);
    let p2 = Vector3::new(-0.01, 0.02, -0.10);
    let u = (p1 - p2).normalize();
    let reference = ReferenceSample { p1, p2, u };
    let w = RewardWeights::default();
    let perfect = StickPose { p1, p2, u };
    // any unit vector orthogonal to u: ‖u - v‖ = √2
    let v = u.cross(&Vector3::x()).normalize();
    let orthogonal = StickPose { p1, p2, u: v };
    let cases = [
        (reward_from_terms(&w, &perfect, &reference, 0.0), 0.5),
        (reward_from_terms(&w, &orthogonal, &reference, 0.0), 0.5 - 1.5 * 2f64.sqrt()),
        (reward_from_terms(&w, &perfect, &reference, 100.0), 0.0),
    ];
    let worst = cases.iter().map(|(got, want)| (got - want).abs()).fold(0.0, f64::max);
    let ok = worst <= 1e-12;
    report(1, ok, format!("max |error| = {worst:.2e} (tol 1e-12)"));
    assert!(ok);
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_02_offset_calibration_and_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let threshold = 0.15;
    let mut mismatches = 0usize;
    for _ in 0..10_000 {
        let raw: Vec<f64> = (0..N_TAXELS).map(|_| rng.random_range(0.0..5.0)).collect();
        let offsets: Vec<f64> = (0..N_TAXELS).map(|_| rng.random_range(0.0..5.0)).collect();
        let mut frame = TactileFrame::new(raw.clone(), offsets.clone(), threshold);
        binarize(&mut frame);
        for i in 0..N_TAXELS {
            let want = if raw[i] > offsets[i] { raw[i] - offsets[i] } else { 0.0 };
            if frame.calibrated[i] != want || frame.active[i] != (want > threshold) {
                mismatches += 1;
            }
        }
    }
    // drift-only frames: offsets from drift-only history, noise-free
    let layout = TaxelLayout::from_pad(&HandModel::canonical().pad);
    let mut drift_active = 0usize;
    for _ in 0..1000 {
        let drift: Vec<f64> = (0..N_TAXELS).map(|_| rng.random_range(0.0..0.5)).collect();
        let history: Vec<Vec<f64>> = (0..10).map(|_| synthesize_raw(&Vec::new(), &layout, 10.0, &Crosstalk::none(), 0.0, Some(&drift), &mut rng)).collect();
        let offsets = calibrate_offsets(&history).unwrap();
        let raw = synthesize_raw(&Vec::new(), &layout, 10.0, &Crosstalk::none(), 0.0, Some(&drift), &mut rng);
        let mut frame = TactileFrame::new(raw, offsets, threshold);
        binarize(&mut frame);
        drift_active += frame.active.iter().filter(|&&a| a).count();
    }
    let ok = mismatches == 0 && drift_active == 0;
    report(2, ok, format!("{mismatches} calibration mismatches over 10000 frames, {drift_active} active taxels in 1000 drift-only frames (tol: exact, 0)"));
    assert!(ok);
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_contact_center_oracle() {
    let layout = TaxelLayout::from_pad(&HandModel::canonical().pad);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut presence_errors = 0;
    for m in 0..1000 {
        let density = [0.01, 0.05, 0.3, 0.9][m % 4];
        let active: Vec<bool> = (0..N_TAXELS).map(|_| rng.random_bool(density)).collect();
        let mut frame = TactileFrame::new(vec![0.0; N_TAXELS], vec![0.0; N_TAXELS], 0.0);
        frame.active = active.clone();
        for finger in 0..3 {
            let mut sum = [0.0f64; 3];
            let mut n = 0usize;
            for i in 0..TAXELS_PER_PAD {
                if active[finger * TAXELS_PER_PAD + i] {
                    let p = layout.positions[i];
                    sum[0] += p.x;
                    sum[1] += p.y;
                    sum[2] += p.z;
                    n += 1;
                }
            }
            match (contact_center(&frame, &layout, finger), n) {
                (None, 0) => {}
                (Some(c), n) if n > 0 => {
                    for k in 0..3 {
                        worst = worst.max((c[k] - sum[k] / n as f64).abs());
                    }
                }
                _ => presence_errors += 1,
            }
        }
    }
    let ok = worst <= 1e-12 && presence_errors == 0;
    report(3, ok, format!("max |error| = {worst:.2e} over 1000 masks, {presence_errors} presence errors (tol 1e-12)"));
    assert!(ok);
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_04_backlash_hysteresis_and_estimate() {
    let model = HandModel::canonical();
    let configured = [-0.015, 0.025];
    let mut rig = JointRig::from_model(&model, 0);
    rig.spec.backlash_range = configured;
    let center = 0.5;
    let amplitude = 0.3;
    let speed = 0.5;
    let period = 4.0 * amplitude / speed;
    let dt = 1e-3;
    rig.reset(center - amplitude);
    let steps = (3.0 * period / dt) as usize;
    let (mut up, mut down) = (Vec::new(), Vec::new());
    for k in 0..steps {
        let t = k as f64 * dt;
        let phase = (t / period).fract();
        let tri = if phase < 0.5 { -1.0 + 4.0 * phase } else { 3.0 - 4.0 * phase };
        rig.step(center + amplitude * tri, 0.0, dt).unwrap();
        // loop branches sampled mid-sweep, after the first period
        if t > period && (rig.q - center).abs() < 0.1 {
            let lag = rig.effective() - rig.q;
            if rig.qdot > 0.05 {
                up.push(lag);
            } else if rig.qdot < -0.05 {
                down.push(lag);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let width = mean(&down) - mean(&up);
    let expected = configured[1] - configured[0];
    let width_ok = !up.is_empty() && !down.is_empty() && (width - expected).abs() <= 1e-6;

    let hidden = [-0.02, 0.02];
    let mut probe_rig = JointRig::from_model(&model, 0);
    probe_rig.spec.backlash_range = hidden;
    let est = estimate_backlash(&probe_rig, &probe_positions(&probe_rig, 5), 0.02, &ProbeOptions::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
    let rel = [(est.range[0] - hidden[0]).abs() / 0.02, (est.range[1] - hidden[1]).abs() / 0.02];
    let est_ok = est.per_probe.len() == 5 && rel.iter().all(|r| *r <= 0.05);
    let ok = width_ok && est_ok;
    report(
        4,
        ok,
        format!(
            "loop width {width:.9} vs {expected} (|err| {:.1e}, tol 1e-6); estimate [{:.5}, {:.5}] from {} probes, rel err {:.2}%/{:.2}% (tol 5%)",
            (width - expected).abs(),
            est.range[0],
            est.range[1],
            est.per_probe.len(),
            100.0 * rel[0],
            100.0 * rel[1]
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_05_cma_es_and_gain_recovery() {
    let c = [1.5, -0.7];
    let sphere = move |x: &[f64]| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
    let opts = CmaOptions { sigma0: 1.0, max_generations: 200, tol_x: 1e-12, seed: 5, ..CmaOptions::default() };
    let s1 = cma_es_minimize(sphere, &[-2.0, 3.0], &opts).unwrap();
    let s2 = cma_es_minimize(sphere, &[-2.0, 3.0], &opts).unwrap();
    let dist = ((s1.x_best[0] - c[0]).powi(2) + (s1.x_best[1] - c[1]).powi(2)).sqrt();
    let sphere_ok = dist < 1e-6 && s1.history.len() <= 200 && s1 == s2;

    let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
    let ropts = CmaOptions { sigma0: 0.5, max_generations: 2000, target: Some(1e-10), tol_x: 1e-14, seed: 5, ..CmaOptions::default() };
    let r1 = cma_es_minimize(rosen, &[-1.2, 1.0], &ropts).unwrap();
    let r2 = cma_es_minimize(rosen, &[-1.2, 1.0], &ropts).unwrap();
    let rosen_ok = r1.f_best < 1e-6 && r1.history.len() <= 2000 && r1 == r2;

    let model = HandModel::canonical();
    let mut worst: f64 = 0.0;
    let mut gains = String::new();
    for (index, kp, kd) in [(0usize, 6.0, 0.15), (1, 3.6, 0.1), (2, 4.2, 0.09)] {
        let mut rng = ChaCha8Rng::seed_from_u64(50 + index as u64);
        let rec = synthetic_recording(&model, index, kp, kd, &ReferenceSignal::default(), 1e-3, &mut rng).unwrap();
        let fit = fit_gains(&model, index, &rec, &CmaOptions { max_generations: 150, tol_x: 1e-6, seed: 1, ..CmaOptions::default() }).unwrap();
        let e = ((fit.kp.mean - kp).abs() / kp).max((fit.kd.mean - kd).abs() / kd);
        worst = worst.max(e);
        gains += &format!(" J{}: kp {:.4}/{kp} kd {:.4}/{kd};", fit.joint, fit.kp.mean, fit.kd.mean);
    }
    let gains_ok = worst <= 0.10;
    let ok = sphere_ok && rosen_ok && gains_ok;
    report(
        5,
        ok,
        format!(
            "sphere |x-c| {dist:.1e} in {} gens (tol 1e-6, 200); rosenbrock f {:.1e} in {} gens (tol 1e-6, 2000); deterministic {}; gain rel err max {:.2}% (tol 10%):{gains}",
            s1.history.len(),
            r1.f_best,
            r1.history.len(),
            s1 == s2 && r1 == r2,
            100.0 * worst
        ),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- 6

/// Per-tensor relative error `‖g − fd‖ / max(‖fd‖, ‖g‖)` of every weight and
/// bias against central differences (h = 1e-5) of `½‖f(x) − y‖²`.
fn worst_layer_error(net: &Mlp, rng: &mut ChaCha8Rng) -> f64 {
    let batch = 3;
    let x = DMatrix::from_fn(net.input_dim(), batch, |_, _| rng.random_range(-2.0..2.0));
    let y = DMatrix::from_fn(net.output_dim(), batch, |_, _| rng.random_range(-1.0..1.0));
    let loss = |n: &Mlp| 0.5 * (n.forward(&x).unwrap() - &y).norm_squared();
    let (out, cache) = net.forward_cached(&x).unwrap();
    let (grad, _) = net.backward(&cache, &(out - &y));
    let analytic: Vec<Vec<f64>> = grad.slices().iter().map(|s| s.to_vec()).collect();
    let mut probe = net.clone();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, g) in analytic.iter().enumerate() {
        let mut diff2 = 0.0;
        let mut fd2 = 0.0;
        let mut g2 = 0.0;
        for i in 0..g.len() {
            let orig = probe.slices()[k][i];
            probe.slices_mut()[k][i] = orig + h;
            let up = loss(&probe);
            probe.slices_mut()[k][i] = orig - h;
            let dn = loss(&probe);
            probe.slices_mut()[k][i] = orig;
            let fd = (up - dn) / (2.0 * h);
            diff2 += (fd - g[i]).powi(2);
            fd2 += fd * fd;
            g2 += g[i] * g[i];
        }
        let scale = fd2.sqrt().max(g2.sqrt());
        if scale > 0.0 {
            worst = worst.max(diff2.sqrt() / scale);
        }
    }
    worst
}

fn gae_oracle(r: &[f64], v: &[f64], d: &[bool], last: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = r.len();
    let value_after = |k: usize| if k + 1 < n { v[k + 1] } else { last };
    (0..n)
        .map(|t| {
            let mut total = 0.0;
            for k in t..n {
                // weight (γλ)^(k−t), zero once an episode boundary lies in [t, k)
                if (t..k).any(|j| d[j]) {
                    break;
                }
                let delta = r[k] + gamma * value_after(k) * if d[k] { 0.0 } else { 1.0 } - v[k];
                total += (gamma * lambda).powi((k - t) as i32) * delta;
            }
            total
        })
        .collect()
}

#[test]
fn criterion_06_gradient_and_gae_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_grad: f64 = 0.0;
    let mut shapes = Vec::new();
    for variant in [
        ObservationVariant::ContactCenters,
        ObservationVariant::ObjectPose,
        ObservationVariant::PosePlusCenters,
        ObservationVariant::PosePlusBinary,
        ObservationVariant::RawTactile,
    ] {
        let model = ActorCritic::new(variant.dim(), N_ACTUATED, &[64, 64], 0.3f64.ln(), true, &mut rng);
        // a non-trivial output layer so its gradients are not tiny
        let policy = Mlp::random(&model.policy.sizes(), 1.0, &mut rng);
        for net in [&policy, &model.value] {
            worst_grad = worst_grad.max(worst_layer_error(net, &mut rng));
            shapes.push(format!("{:?}", net.sizes()));
        }
    }
    worst_grad = worst_grad.max(worst_layer_error(&Mlp::random(&[3, 64, 64, 1], 1.0, &mut rng), &mut rng));

    let mut worst_gae: f64 = 0.0;
    for t in [1usize, 2, 7, 50, 123, 200] {
        for _ in 0..5 {
            let r: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
            let d: Vec<bool> = (0..t).map(|_| rng.random_bool(0.05)).collect();
            let last = rng.random_range(-2.0..2.0);
            let gamma = rng.random_range(0.9..1.0);
            let lambda = rng.random_range(0.0..1.0);
            let (a, ret) = gae(&r, &v, &d, last, gamma, lambda);
            let oracle = gae_oracle(&r, &v, &d, last, gamma, lambda);
            for i in 0..t {
                worst_gae = worst_gae.max((a[i] - oracle[i]).abs());
                worst_gae = worst_gae.max((ret[i] - (oracle[i] + v[i])).abs());
            }
        }
    }
    let ok = worst_grad <= 1e-4 && worst_gae <= 1e-10;
    report(6, ok, format!("max layer gradient rel err {worst_grad:.2e} (tol 1e-4) over {} nets; GAE max |err| {worst_gae:.2e} for T<=200 (tol 1e-10)", shapes.len() + 1));
    assert!(ok);
}

// ---------------------------------------------------------------- 7

/// Three-finger contact recomputed from kinematics, detection, penalty
/// normal forces and noise-free thresholded readings.
fn all_fingers_touch(world: &World, state: &SimState, config: &Config) -> bool {
    let kin = forward_kinematics(&world.hand, &world.layout, &state.q, &state.backlash.map(|b| b.offset));
    let mut contacts = detect_contacts(&kin, world.layout.sensing_radius, world.hand.pad.bounding_radius(), &state.stick_position, &state.stick_orientation, &world.stick);
    for c in contacts.iter_mut() {
        c.normal_force = world.contact.stiffness * c.penetration;
    }
    let s = &config.task.sensor;
    let raw = synthesize_raw(&contacts, &world.layout, s.gain, &s.crosstalk, 0.0, None, &mut ChaCha8Rng::seed_from_u64(0));
    let frame = TactileFrame::from_raw(raw, s.threshold);
    (0..3).all(|f| frame.any_active(f))
}

#[test]
fn criterion_07_initial_state_generator() {
    let config = Config::default();
    let world = config.world().unwrap();
    let set = generate_initial_states(&world, &config.sampler, &config.task.sensor, 100, 7).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("states.csv");
    set.save(&path).unwrap();
    let loaded = InitialStateSet::load(&path).unwrap();
    let verified = loaded.records.iter().filter(|r| all_fingers_touch(&world, &r.to_sim_state(), &config)).count();
    let again = generate_initial_states(&world, &config.sampler, &config.task.sensor, 100, 7).unwrap();
    let deterministic = again.records == set.records && loaded.records == set.records;
    let ok = loaded.records.len() == 100 && verified == 100 && deterministic;
    report(
        7,
        ok,
        format!("{verified}/100 reloaded states re-verify three-finger contact; deterministic {deterministic}; acceptance rate {:.1}% (tol 100/100)", 100.0 * set.acceptance_rate()),
    );
    assert!(ok);
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_free_fall_and_grasp_hold() {
    let config = Config::default();
    let world = World::new(HandModel::canonical(), StickModel::default(), ContactParams::default()).unwrap();
    let mut s = SimState::new([0.0; N_ACTUATED], Vector3::new(0.0, 0.3, 0.0), nalgebra::UnitQuaternion::identity());
    let z0 = s.stick_position.z;
    for _ in 0..200 {
        world.step(&mut s, &[0.0; N_ACTUATED], 1e-3, StepOptions::default()).unwrap();
    }
    let t = 0.2;
    let expected = -0.5 * world.hand.gravity * t * t;
    let fall_rel = ((s.stick_position.z - z0) - expected).abs() / expected.abs();

    let world = config.world().unwrap();
    let set = generate_initial_states(&world, &config.sampler, &config.task.sensor, 100, 8).unwrap();
    let mut held = 0;
    for (i, state) in set.records.iter().enumerate() {
        let states: Arc<Vec<InitialState>> = Arc::new(vec![state.clone()]);
        let mut env = HandEnv::new(world.clone(), config.task.clone(), config.reward, config.randomization(), states).unwrap();
        env.reset(1000 + i as u64).unwrap();
        let mut dropped = false;
        for _ in 0..500 {
            let out = env.step(&[0.0; N_ACTUATED]).unwrap();
            if out.terminated {
                dropped = true;
                break;
            }
        }
        if !dropped {
            held += 1;
        }
    }
    let ok = fall_rel <= 0.01 && held >= 80;
    report(8, ok, format!("free fall rel err {fall_rel:.2e} at t = {t} s (tol 1%); zero-action hold {held}/100 for 500 steps (tol >= 80)"));
    assert!(ok);
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_09_toy_reach_learning() {
    let task = ReachTask::new();
    let oracle = mean_return(&task, 100, |_, t| Ok(t.oracle_action())).unwrap();
    let mut ratios = Vec::new();
    for seed in 0..3 {
        let cfg = TrainConfig {
            n_envs: 8,
            steps_per_env: 256,
            total_steps: 200_000,
            seed,
            ppo: PpoConfig { minibatch_size: 256, learning_rate: 1e-3, ..PpoConfig::default() },
            ..TrainConfig::default()
        };
        let out = train(|_| Ok(ReachTask::new()), &cfg, |_, _| Ok(())).unwrap();
        let steps = out.curve.last().unwrap().env_steps;
        assert!(steps <= 200_000 + cfg.steps_per_iteration());
        let learned = mean_return(&task, 100, |o, _| Ok(out.model.act(o)?[0])).unwrap();
        ratios.push(learned / oracle);
    }
    let ok = ratios.iter().all(|r| *r >= 0.95);
    let shown: Vec<String> = ratios.iter().map(|r| format!("{:.1}%", 100.0 * r)).collect();
    report(9, ok, format!("learned/oracle return per seed [{}] with oracle {oracle:.2} (tol >= 95%, 3/3 seeds)", shown.join(", ")));
    assert!(ok);
}

// ---------------------------------------------------------------- 10-12

fn hand_setup(config: &Config) -> (World, Arc<Vec<InitialState>>) {
    let world = config.world().unwrap();
    let set = generate_initial_states(&world, &config.sampler, &config.task.sensor, 300, 1).unwrap();
    (world, Arc::new(set.records))
}

fn train_hand(variant: ObservationVariant, steps: usize, seed: u64) -> (ActorCritic, Vec<stickhand::learning::CurvePoint>) {
    let mut config = Config::default();
    config.task.observation = variant;
    config.train.total_steps = steps;
    config.train.seed = seed;
    let (world, states) = hand_setup(&config);
    let rand = config.randomization();
    let out = train(|_| HandEnv::new(world.clone(), config.task.clone(), config.reward, rand.clone(), states.clone()), &config.train, |c, _| {
        let line = format!("  [{} seed {seed}] iter {} steps {} return {:.2} p_err {:.4} q_err {:.2}\n", variant.name(), c.iteration, c.env_steps, c.mean_return, c.mean_p_err, c.mean_q_err);
        let _ = std::io::stderr().write_all(line.as_bytes());
        Ok(())
    })
    .unwrap();
    (out.model, out.curve)
}

fn eval_circle(model: &ActorCritic, omega: f64, radius: f64) -> stickhand::eval::EvalReport {
    let mut config = Config::default();
    config.task.reference.omega = omega;
    config.task.reference.radius = radius;
    let (world, states) = hand_setup(&config);
    let mut env = HandEnv::new(world, config.task.clone(), config.reward, config.randomization(), states).unwrap();
    evaluate(&mut env, |o| model.act(o), 10, 2024, |_, _| Ok(())).unwrap()
}

#[test]
fn criteria_10_to_12_long_runs_are_opt_in() {
    for c in 10..=12 {
        let _ = std::io::stderr().write_all(format!("criterion {c}: SKIPPED (hours of training; run the ignored tests of this target)\n").as_bytes());
    }
}

#[test]
#[ignore = "trains a 5M-step hand policy"]
fn criteria_10_and_12_circle_policy() {
    use std::f64::consts::PI;
    let (model, _) = train_hand(ObservationVariant::ContactCenters, 5_000_000, 0);
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("circle_contact_centers.ckpt");
    checkpoint::save(&path, &model).unwrap();

    let base = eval_circle(&model, PI, 0.02);
    let ok10 = base.retained() >= 8 && base.mean_p_err_cm() <= 1.0 && base.mean_q_err_deg() <= 6.0;
    report(
        10,
        ok10,
        format!(
            "retained {}/10 (tol >= 8), p_err {:.3} cm (tol <= 1.0), q_err {:.2} deg (tol <= 6)",
            base.retained(),
            base.mean_p_err_cm(),
            base.mean_q_err_deg()
        ),
    );

    let mut ok12 = true;
    let mut detail = String::new();
    for (omega, radius) in [(0.5 * PI, 0.02), (1.5 * PI, 0.02), (PI, 0.01), (PI, 0.03)] {
        let r = eval_circle(&model, omega, radius);
        let ok = r.retained() >= 7 && r.mean_p_err_cm() <= 2.0 * base.mean_p_err_cm();
        ok12 &= ok;
        detail += &format!(" [omega {:.2}pi r {:.0} cm: retained {}/10, p_err {:.3} cm]", omega / PI, radius * 100.0, r.retained(), r.mean_p_err_cm());
    }
    report(12, ok12, format!("tol retained >= 7/10 and p_err <= 2 x {:.3} cm per setting:{detail}", base.mean_p_err_cm()));
    assert!(ok10, "criterion 10");
    assert!(ok12, "criterion 12");
}

#[test]
#[ignore = "trains nine 2M-step hand policies"]
fn criterion_11_observation_ablation_ordering() {
    let steps = 2_000_000;
    let mut means = Vec::new();
    for variant in [ObservationVariant::ContactCenters, ObservationVariant::ObjectPose, ObservationVariant::PosePlusBinary] {
        let mut total = 0.0;
        for seed in 0..3 {
            let (_, curve) = train_hand(variant, steps, seed);
            // learning-curve value at the end: mean over the last 10 iterations
            let tail = &curve[curve.len().saturating_sub(10)..];
            let finite: Vec<f64> = tail.iter().map(|c| c.mean_return).filter(|v| v.is_finite()).collect();
            total += finite.iter().sum::<f64>() / finite.len().max(1) as f64;
        }
        means.push((variant, total / 3.0));
    }
    let cc = means[0].1;
    let ok = cc >= means[1].1 && cc >= means[2].1;
    let shown: Vec<String> = means.iter().map(|(v, m)| format!("{} {m:.2}", v.name())).collect();
    report(11, ok, format!("mean return at 2M steps over 3 seeds: {} (tol: contact_centers >= both)", shown.join(", ")));
    assert!(ok);
}
