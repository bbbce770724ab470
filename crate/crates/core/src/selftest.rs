//! Quick oracle checks behind the `selftest` command. The full suites live
//! in the test targets; these run in well under a second.

use nalgebra::{DMatrix, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calibration::{cma_es_minimize, CmaOptions};
use crate::env::reference::ReferenceSample;
use crate::env::reward::{reward_from_terms, RewardWeights, StickPose};
use crate::hand::dynamics::{StepOptions, World};
use crate::hand::model::{HandModel, StickModel, N_ACTUATED};
use crate::hand::state::SimState;
use crate::learning::gae::gae;
use crate::learning::mlp::Mlp;
use crate::learning::ppo::clipped_objective;
use crate::tactile::contact::ContactParams;
use crate::tactile::layout::{TaxelLayout, N_TAXELS, TAXELS_PER_PAD};
use crate::tactile::signal::{binarize, contact_center, TactileFrame};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn reward_examples() -> CheckResult {
    let p1 = Vector3::new(0.0, 0.0, 0.04);
    let p2 = Vector3::new(0.0, 0.0, -0.11);
    let r = ReferenceSample { p1, p2, u: Vector3::z() };
    let w = RewardWeights::default();
    let a = StickPose { p1, p2, u: Vector3::z() };
    let tilted = StickPose { u: Vector3::x(), ..a };
    let errs = [
        (reward_from_terms(&w, &a, &r, 0.0) - 0.5).abs(),
        (reward_from_terms(&w, &tilted, &r, 0.0) - (0.5 - 1.5 * 2f64.sqrt())).abs(),
        reward_from_terms(&w, &a, &r, 100.0).abs(),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    check("reward examples", worst <= 1e-12, format!("max error {worst:.1e}"))
}

fn binarization(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut ok = true;
    for _ in 0..200 {
        let raw: Vec<f64> = (0..N_TAXELS).map(|_| rng.random_range(0.0..2.0)).collect();
        let off: Vec<f64> = (0..N_TAXELS).map(|_| rng.random_range(0.0..2.0)).collect();
        let mut f = TactileFrame::new(raw.clone(), off.clone(), 0.15);
        binarize(&mut f);
        ok &= (0..N_TAXELS).all(|i| f.calibrated[i] == (raw[i] - off[i]).max(0.0) && f.active[i] == (f.calibrated[i] > 0.15));
        // drift only: the offsets equal the raw readings
        let mut d = TactileFrame::new(raw.clone(), raw, 0.15);
        binarize(&mut d);
        ok &= d.active.iter().all(|&a| !a);
    }
    check("offset calibration and threshold", ok, "200 random frames".into())
}

fn contact_centers(rng: &mut ChaCha8Rng) -> CheckResult {
    let layout = TaxelLayout::from_pad(&HandModel::canonical().pad);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let active: Vec<bool> = (0..N_TAXELS).map(|_| rng.random_bool(0.1)).collect();
        let frame = TactileFrame { active: active.clone(), ..TactileFrame::new(vec![0.0; N_TAXELS], vec![], 0.0) };
        for f in 0..3 {
            let sel: Vec<_> = (0..TAXELS_PER_PAD).filter(|&i| active[f * TAXELS_PER_PAD + i]).collect();
            let got = contact_center(&frame, &layout, f);
            match got {
                None => worst = worst.max(if sel.is_empty() { 0.0 } else { f64::INFINITY }),
                Some(c) => {
                    let mut sum = [0.0; 3];
                    for &i in &sel {
                        for k in 0..3 {
                            sum[k] += layout.positions[i][k];
                        }
                    }
                    for k in 0..3 {
                        worst = worst.max((c[k] - sum[k] / sel.len() as f64).abs());
                    }
                }
            }
        }
    }
    check("contact center mean", worst <= 1e-12, format!("max error {worst:.1e}"))
}

fn gae_oracle(rng: &mut ChaCha8Rng) -> CheckResult {
    let t = 60;
    let (gamma, lambda) = (0.97, 0.9);
    let r: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
    let d: Vec<bool> = (0..t).map(|_| rng.random_bool(0.1)).collect();
    let last = 0.3;
    let (a, _) = gae(&r, &v, &d, last, gamma, lambda);
    let next = |k: usize| if k + 1 < t { v[k + 1] } else { last };
    let mut worst: f64 = 0.0;
    for s in 0..t {
        let mut sum = 0.0;
        let mut w = 1.0;
        for k in s..t {
            let live = if d[k] { 0.0 } else { 1.0 };
            sum += w * (r[k] + gamma * next(k) * live - v[k]);
            if d[k] {
                break;
            }
            w *= gamma * lambda;
        }
        worst = worst.max((sum - a[s]).abs());
    }
    check("GAE double-sum oracle", worst <= 1e-10, format!("max error {worst:.1e}"))
}

fn gradient(rng: &mut ChaCha8Rng) -> CheckResult {
    let net = Mlp::random(&[5, 7, 6, 3], 1.0, rng);
    let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
    let y = DMatrix::from_fn(3, 4, |_, _| rng.random_range(-1.0..1.0));
    let loss = |n: &Mlp| 0.5 * (n.forward(&x).unwrap() - &y).norm_squared();
    let (out, cache) = net.forward_cached(&x).unwrap();
    let (g, _) = net.backward(&cache, &(out - &y));
    let gs = g.slices();
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    for (k, gslice) in gs.iter().enumerate() {
        let mut num = vec![0.0; gslice.len()];
        for i in 0..gslice.len() {
            let orig = probe.slices()[k][i];
            probe.slices_mut()[k][i] = orig + 1e-5;
            let up = loss(&probe);
            probe.slices_mut()[k][i] = orig - 1e-5;
            let dn = loss(&probe);
            probe.slices_mut()[k][i] = orig;
            num[i] = (up - dn) / 2e-5;
        }
        let diff: f64 = num.iter().zip(gslice.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = num.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / scale);
    }
    check("MLP gradient vs finite differences", worst <= 1e-4, format!("max relative error {worst:.1e}"))
}

fn cma_sphere() -> CheckResult {
    let c = [0.3, -1.2];
    let f = |x: &[f64]| (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
    let r = cma_es_minimize(f, &[2.0, 2.0], &CmaOptions { max_generations: 200, sigma0: 0.5, seed: 1, ..CmaOptions::default() });
    match r {
        Ok(r) => {
            let d = ((r.x_best[0] - c[0]).powi(2) + (r.x_best[1] - c[1]).powi(2)).sqrt();
            check("CMA-ES sphere", d < 1e-6, format!("distance {d:.1e} after {} generations", r.history.len()))
        }
        Err(e) => check("CMA-ES sphere", false, e.to_string()),
    }
}

fn free_fall() -> CheckResult {
    let world = World::new(HandModel::canonical(), StickModel::default(), ContactParams::default()).expect("canonical world");
    let mut s = SimState::new([0.0; N_ACTUATED], Vector3::new(0.0, 0.3, 0.0), UnitQuaternion::identity());
    let z0 = s.stick_position.z;
    for _ in 0..100 {
        if let Err(e) = world.step(&mut s, &[0.0; N_ACTUATED], 1e-3, StepOptions::default()) {
            return check("free fall", false, e.to_string());
        }
    }
    let expected = -0.5 * 9.81 * 0.01;
    let rel = ((s.stick_position.z - z0) - expected).abs() / expected.abs();
    check("free fall", rel <= 0.01, format!("relative error {rel:.2e} at t = 0.1 s"))
}

fn clip_rule() -> CheckResult {
    let v = clipped_objective(1.5, 1.0, 0.2);
    check("PPO clip rule", (v - 1.2).abs() < 1e-15, format!("min(1.5A, 1.2A) = {v}"))
}

pub fn run_all() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    vec![
        reward_examples(),
        binarization(&mut rng),
        contact_centers(&mut rng),
        gae_oracle(&mut rng),
        gradient(&mut rng),
        cma_sphere(),
        free_fall(),
        clip_rule(),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for r in super::run_all() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
