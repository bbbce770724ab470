use nalgebra::{UnitQuaternion, Vector3};

use super::model::{HandModel, N_ACTUATED, N_FINGERS};

/// Position of the uncontrolled sub-joint inside the gear gap.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BacklashState {
    pub offset: f64,
    pub offset_velocity: f64,
}

/// Full simulation state of the hand and the stick.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    /// Actuated (gear-side) joint positions, (proximal, distal) per finger.
    pub q: [f64; N_ACTUATED],
    pub qdot: [f64; N_ACTUATED],
    /// Backlash sub-joints of the proximal worm-gear joints (J0, J3, J6).
    pub backlash: [BacklashState; N_FINGERS],
    pub stick_position: Vector3<f64>,
    /// Rotates the stick body frame (z along the axis, toward the upper end) into the world.
    pub stick_orientation: UnitQuaternion<f64>,
    pub stick_linear_velocity: Vector3<f64>,
    pub stick_angular_velocity: Vector3<f64>,
    pub t: f64,
}

impl SimState {
    pub fn new(q: [f64; N_ACTUATED], stick_position: Vector3<f64>, stick_orientation: UnitQuaternion<f64>) -> Self {
        Self {
            q,
            qdot: [0.0; N_ACTUATED],
            backlash: [BacklashState::default(); N_FINGERS],
            stick_position,
            stick_orientation,
            stick_linear_velocity: Vector3::zeros(),
            stick_angular_velocity: Vector3::zeros(),
            t: 0.0,
        }
    }

    /// Unit vector along the stick, pointing at the upper endpoint.
    pub fn stick_axis(&self) -> Vector3<f64> {
        self.stick_orientation * Vector3::z()
    }

    /// Upper (P1) and lower (P2) stick endpoints.
    pub fn stick_endpoints(&self, length: f64) -> (Vector3<f64>, Vector3<f64>) {
        let half = 0.5 * length * self.stick_axis();
        (self.stick_position + half, self.stick_position - half)
    }

    /// Link-side angles: proximal joints include the backlash offset.
    pub fn effective_angles(&self) -> [f64; N_ACTUATED] {
        let mut out = self.q;
        for f in 0..N_FINGERS {
            out[2 * f] = super::dynamics::effective_joint_angle(self.q[2 * f], &self.backlash[f]);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qdot).all(|v| v.is_finite())
            && self.backlash.iter().all(|b| b.offset.is_finite() && b.offset_velocity.is_finite())
            && self.stick_position.iter().all(|v| v.is_finite())
            && self.stick_orientation.coords.iter().all(|v| v.is_finite())
            && self.stick_linear_velocity.iter().all(|v| v.is_finite())
            && self.stick_angular_velocity.iter().all(|v| v.is_finite())
    }

    /// Normalized joint positions in `[0, 1]` by the joint limits.
    pub fn normalized_joints(&self, model: &HandModel) -> [f64; N_ACTUATED] {
        let lower = model.lower_limits();
        let upper = model.upper_limits();
        std::array::from_fn(|i| ((self.q[i] - lower[i]) / (upper[i] - lower[i])).clamp(0.0, 1.0))
    }
}
