//! Joint identification: PD gains by CMA-ES trajectory matching, backlash
//! range by push probing, and export of the fitted distributions.

pub mod backlash;
pub mod cmaes;
pub mod recording;

use serde::{Deserialize, Serialize};

pub use backlash::{estimate_backlash, probe_positions, range_from_readings, BacklashEstimate, ProbeOptions};
pub use cmaes::{cma_es_minimize, CmaEsState, CmaOptions, CmaResult, GenerationRecord};
pub use recording::{simulate_joint, synthetic_recording, trajectory_loss, ReferenceRecording, ReferenceSignal};

use crate::env::randomization::{JointGains, RandomizationSpec, TruncatedNormal};
use crate::error::{Error, Result};
use crate::hand::model::HandModel;

/// Fitted parameters of one actuated joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointCalibration {
    pub joint: usize,
    pub kp: TruncatedNormal,
    pub kd: TruncatedNormal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backlash_range: Option<[f64; 2]>,
    /// Trajectory loss at the fitted gains.
    pub residual: f64,
    pub generations: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub joints: Vec<JointCalibration>,
}

impl CalibrationResult {
    pub fn validate(&self) -> Result<()> {
        for j in &self.joints {
            j.kp.validate(&format!("kp of J{}", j.joint))?;
            j.kd.validate(&format!("kd of J{}", j.joint))?;
        }
        Ok(())
    }

    /// Human-readable report (TOML).
    pub fn to_report(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_report(text: &str) -> Result<Self> {
        let r: Self = toml::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    pub fn merge(&mut self, joint: JointCalibration) {
        match self.joints.iter_mut().find(|j| j.joint == joint.joint) {
            Some(existing) => *existing = joint,
            None => self.joints.push(joint),
        }
        self.joints.sort_by_key(|j| j.joint);
    }
}

/// Fits `(kp, kd)` of actuated joint `index` to `recording` by minimizing
/// [`trajectory_loss`]. The search runs on gains relative to the model's
/// nominal values; bounds keep both gains positive.
pub fn fit_gains(model: &HandModel, index: usize, recording: &ReferenceRecording, opts: &CmaOptions) -> Result<JointCalibration> {
    recording.validate()?;
    let joint = model.actuated()[index];
    let scale = [joint.kp, joint.kd];
    let objective = |x: &[f64]| trajectory_loss(x[0] * scale[0], x[1] * scale[1], recording, model, index).unwrap_or(f64::INFINITY);
    let mut opts = opts.clone();
    opts.bounds.get_or_insert_with(|| vec![[1e-3, 20.0]; 2]);
    let r = cma_es_minimize(objective, &[1.0, 1.0], &opts)?;
    if !r.f_best.is_finite() {
        return Err(Error::NonFiniteState { t: 0.0 });
    }
    Ok(JointCalibration {
        joint: joint.id,
        kp: TruncatedNormal { mean: r.x_best[0] * scale[0], std: r.std[0] * scale[0] },
        kd: TruncatedNormal { mean: r.x_best[1] * scale[1], std: r.std[1] * scale[1] },
        backlash_range: None,
        residual: r.f_best,
        generations: r.history.len(),
    })
}

/// Replaces the gain distributions (and backlash ranges, when calibrated) in
/// `base` with the calibrated ones. Each std is raised to at least
/// `std_floor` times its mean.
pub fn export_randomization(result: &CalibrationResult, base: &RandomizationSpec, std_floor: f64) -> Result<RandomizationSpec> {
    result.validate()?;
    let floor = |d: TruncatedNormal| TruncatedNormal { mean: d.mean, std: d.std.max(std_floor * d.mean) };
    let mut spec = base.clone();
    for j in &result.joints {
        let entry = JointGains { joint: j.joint, kp: floor(j.kp), kd: floor(j.kd) };
        match spec.gains.iter_mut().find(|g| g.joint == j.joint) {
            Some(g) => *g = entry,
            None => spec.gains.push(entry),
        }
        if let Some(range) = j.backlash_range {
            let finger = match j.joint {
                0 => 0,
                3 => 1,
                6 => 2,
                _ => continue,
            };
            let canonical = HandModel::canonical();
            let ranges = spec
                .backlash_range
                .get_or_insert_with(|| canonical.fingers.iter().map(|f| f.proximal.backlash_range).collect());
            ranges[finger] = range;
        }
    }
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hand::model::StickModel;

    fn result() -> CalibrationResult {
        CalibrationResult {
            joints: vec![JointCalibration {
                joint: 3,
                kp: TruncatedNormal { mean: 10.0, std: 2.0 },
                kd: TruncatedNormal { mean: 0.2, std: 0.0 },
                backlash_range: Some([-0.03, 0.05]),
                residual: 0.1,
                generations: 12,
            }],
        }
    }

    #[test]
    fn export_replaces_gains_and_backlash() {
        let base = RandomizationSpec::around(&HandModel::canonical(), &StickModel::default(), 0.1);
        let spec = export_randomization(&result(), &base, 0.0).unwrap();
        let g = spec.gains.iter().find(|g| g.joint == 3).unwrap();
        assert_eq!(g.kp, TruncatedNormal { mean: 10.0, std: 2.0 });
        assert_eq!(g.kd.std, 0.0);
        assert_eq!(spec.backlash_range.unwrap()[1], [-0.03, 0.05]);
    }

    #[test]
    fn std_floor_applies() {
        let base = RandomizationSpec::around(&HandModel::canonical(), &StickModel::default(), 0.1);
        let spec = export_randomization(&result(), &base, 0.05).unwrap();
        let g = spec.gains.iter().find(|g| g.joint == 3).unwrap();
        assert!((g.kd.std - 0.01).abs() < 1e-15);
    }

    #[test]
    fn report_round_trip() {
        let r = result();
        assert_eq!(CalibrationResult::from_report(&r.to_report().unwrap()).unwrap(), r);
    }
}
