//! Backlash characterization by pushing a held joint both ways.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hand::joint_rig::JointRig;

/// Backlash range from one probe: hold reading `q_a`, extreme under a
/// positive push `q_b`, extreme under a negative push `q_c`.
pub fn range_from_readings(q_a: f64, q_b: f64, q_c: f64) -> [f64; 2] {
    [q_c - q_a, q_b - q_a]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Time to settle on each probe position before locking (s).
    pub settle: f64,
    /// Duration of each push (s).
    pub push: f64,
    pub dt: f64,
    /// Std of the link-angle encoder noise (rad).
    pub noise_std: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self { settle: 1.0, push: 0.5, dt: 1e-3, noise_std: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacklashEstimate {
    pub range: [f64; 2],
    pub per_probe: Vec<(f64, [f64; 2])>,
    pub discarded: Vec<f64>,
}

fn probe<R: Rng + ?Sized>(rig: &mut JointRig, q_d: f64, push_torque: f64, opts: &ProbeOptions, noise: &Normal<f64>, rng: &mut R) -> Result<[f64; 2]> {
    rig.reset(q_d);
    let steps = |t: f64| (t / opts.dt).round() as usize;
    for _ in 0..steps(opts.settle) {
        rig.step(q_d, 0.0, opts.dt)?;
    }
    // hold exactly where the gear stopped so the worm gear locks
    let hold = rig.q;
    let mut read = |rig: &JointRig| rig.effective() + noise.sample(rng);
    let q_a = read(rig);
    let push = |rig: &mut JointRig, torque: f64| -> Result<f64> {
        let mut extreme: f64 = if torque > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
        for _ in 0..steps(opts.push) {
            rig.step(hold, torque, opts.dt)?;
            extreme = if torque > 0.0 { extreme.max(rig.effective()) } else { extreme.min(rig.effective()) };
        }
        for _ in 0..steps(opts.push) {
            rig.step(hold, 0.0, opts.dt)?;
        }
        Ok(extreme)
    };
    let q_b = push(rig, push_torque)?;
    let q_c = push(rig, -push_torque)?;
    let [lo, hi] = rig.spec.limits;
    if q_b >= hi || q_c <= lo || rig.q != hold {
        return Err(Error::SaturatedProbe { q_d });
    }
    Ok(range_from_readings(q_a, q_b + noise.sample(rng), q_c + noise.sample(rng)))
}

/// Mean backlash range over probe positions. Probes whose extremes reach a
/// joint limit (or that back-drive the gear) are discarded and logged.
pub fn estimate_backlash<R: Rng + ?Sized>(
    rig: &JointRig,
    probe_positions: &[f64],
    push_torque: f64,
    opts: &ProbeOptions,
    rng: &mut R,
) -> Result<BacklashEstimate> {
    if !(push_torque > 0.0) {
        return Err(Error::InvalidConfig("push torque must be positive".into()));
    }
    let noise = Normal::new(0.0, opts.noise_std.max(0.0)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rig = rig.clone();
    let mut per_probe = Vec::new();
    let mut discarded = Vec::new();
    for &q_d in probe_positions {
        match probe(&mut rig, q_d, push_torque, opts, &noise, rng) {
            Ok(r) => per_probe.push((q_d, r)),
            Err(Error::SaturatedProbe { q_d }) => {
                log::warn!("backlash probe at {q_d:.4} rad saturated; discarded");
                discarded.push(q_d);
            }
            Err(e) => return Err(e),
        }
    }
    if per_probe.is_empty() {
        return Err(Error::SaturatedProbe { q_d: probe_positions.first().copied().unwrap_or(f64::NAN) });
    }
    let n = per_probe.len() as f64;
    let lo = per_probe.iter().map(|(_, r)| r[0]).sum::<f64>() / n;
    let hi = per_probe.iter().map(|(_, r)| r[1]).sum::<f64>() / n;
    Ok(BacklashEstimate { range: [lo, hi], per_probe, discarded })
}

/// Evenly spaced probe positions strictly inside the joint limits.
pub fn probe_positions(rig: &JointRig, count: usize) -> Vec<f64> {
    let [lo, hi] = rig.spec.limits;
    (0..count).map(|i| lo + (hi - lo) * (i as f64 + 1.0) / (count as f64 + 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::model::HandModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn readings_to_range() {
        let r = range_from_readings(0.50, 0.55, 0.47);
        assert!((r[0] + 0.03).abs() < 1e-12 && (r[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn recovers_the_configured_gap() {
        let rig = JointRig::from_model(&HandModel::canonical(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = estimate_backlash(&rig, &probe_positions(&rig, 5), 0.02, &ProbeOptions::default(), &mut rng).unwrap();
        assert!((est.range[0] + 0.02).abs() < 1e-3, "{:?}", est.range);
        assert!((est.range[1] - 0.02).abs() < 1e-3, "{:?}", est.range);
    }

    #[test]
    fn zero_backlash_joint_reads_zero() {
        let mut rig = JointRig::from_model(&HandModel::canonical(), 0);
        rig.spec.backlash_range = [0.0, 0.0];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = estimate_backlash(&rig, &probe_positions(&rig, 3), 0.02, &ProbeOptions::default(), &mut rng).unwrap();
        assert!(est.range[0].abs() < 1e-6 && est.range[1].abs() < 1e-6);
    }

    #[test]
    fn probes_at_a_limit_are_discarded() {
        let rig = JointRig::from_model(&HandModel::canonical(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let upper = rig.spec.upper();
        let est = estimate_backlash(&rig, &[0.5, upper], 0.02, &ProbeOptions::default(), &mut rng).unwrap();
        assert_eq!(est.discarded, vec![upper]);
        assert_eq!(est.per_probe.len(), 1);
    }
}
