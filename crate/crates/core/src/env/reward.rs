//! Tracking reward and termination.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::reference::ReferenceSample;
use crate::error::{Error, Result};
use crate::tactile::contact::Contact;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub c: f64,
    pub w_axis: f64,
    pub w_position: f64,
    pub w_force: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { c: 0.5, w_axis: 1.5, w_position: 2.0, w_force: 0.005 }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || [self.w_axis, self.w_position, self.w_force].iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidConfig(format!("reward weights need C > 0 and non-negative weights, got {self:?}")));
        }
        Ok(())
    }
}

/// Actual stick pose in reward terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StickPose {
    pub p1: Vector3<f64>,
    pub p2: Vector3<f64>,
    pub u: Vector3<f64>,
}

/// `C - w_axis‖uᵈ−u‖ - w_position(‖P1ᵈ−P1‖ + ‖P2ᵈ−P2‖) - w_force Σf`.
pub fn reward_from_terms(weights: &RewardWeights, actual: &StickPose, reference: &ReferenceSample, total_force: f64) -> f64 {
    weights.c
        - weights.w_axis * (reference.u - actual.u).norm()
        - weights.w_position * ((reference.p1 - actual.p1).norm() + (reference.p2 - actual.p2).norm())
        - weights.w_force * total_force
}

/// Sum of the contact force magnitudes over all taxels.
pub fn total_contact_force(contacts: &[Contact]) -> f64 {
    contacts.iter().map(|c| (c.normal * c.normal_force + c.tangential_force).norm()).sum()
}

pub fn reward(weights: &RewardWeights, actual: &StickPose, contacts: &[Contact], reference: &ReferenceSample) -> f64 {
    reward_from_terms(weights, actual, reference, total_contact_force(contacts))
}

/// True once the stick center is below `threshold`.
pub fn terminate(stick_center_z: f64, threshold: f64) -> bool {
    stick_center_z < threshold
}

/// Angle between two unit vectors in degrees.
pub fn axis_angle_deg(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.dot(b).clamp(-1.0, 1.0).acos().to_degrees()
}
