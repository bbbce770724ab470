use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::layout::TAXELS_PER_PAD;
use crate::hand::kinematics::HandKinematics;
use crate::hand::model::{StickModel, N_FINGERS};

/// Penalty-contact parameters shared by every taxel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactParams {
    /// Normal stiffness, N/m.
    pub stiffness: f64,
    /// Normal damping, N·s/m (approach only).
    pub damping: f64,
    /// Viscous tangential coefficient below the slip threshold, N·s/m.
    pub tangential_damping: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { stiffness: 5000.0, damping: 50.0, tangential_damping: 500.0 }
    }
}

/// One taxel touching the stick.
#[derive(Debug, Clone, PartialEq)]
pub struct Contact {
    /// Global taxel id (`finger * 128 + local id`).
    pub taxel: usize,
    /// Point on the stick surface facing the taxel.
    pub point: Vector3<f64>,
    /// Unit normal from the stick axis toward the taxel center.
    pub normal: Vector3<f64>,
    pub penetration: f64,
    pub normal_force: f64,
    /// Tangential force on the taxel, orthogonal to `normal`.
    pub tangential_force: Vector3<f64>,
}

impl Contact {
    pub fn finger(&self) -> usize {
        self.taxel / TAXELS_PER_PAD
    }
}

pub type ContactSet = Vec<Contact>;

/// Stick axis as a segment.
#[derive(Debug, Clone, Copy)]
pub struct StickSegment {
    pub center: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub half_length: f64,
    pub radius: f64,
}

impl StickSegment {
    pub fn new(position: &Vector3<f64>, orientation: &UnitQuaternion<f64>, stick: &StickModel) -> Self {
        Self { center: *position, axis: orientation * Vector3::z(), half_length: 0.5 * stick.length, radius: stick.radius }
    }

    /// Closest point on the axis segment to `p`.
    pub fn closest_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let s = (p - self.center).dot(&self.axis).clamp(-self.half_length, self.half_length);
        self.center + s * self.axis
    }

    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        (p - self.closest_point(p)).norm()
    }
}

/// Finds every taxel whose sensing sphere overlaps the stick capsule.
///
/// Pads whose bounding sphere cannot reach the capsule are skipped. A taxel is
/// in contact iff its center is closer to the axis segment than
/// `stick.radius + sensing_radius`. Forces are left at zero; see [`penalty_force`].
pub fn detect_contacts(
    kin: &HandKinematics,
    sensing_radius: f64,
    pad_bounding_radius: f64,
    stick_position: &Vector3<f64>,
    stick_orientation: &UnitQuaternion<f64>,
    stick: &StickModel,
) -> ContactSet {
    let seg = StickSegment::new(stick_position, stick_orientation, stick);
    let reach = stick.radius + sensing_radius;
    let mut contacts = Vec::new();
    for finger in 0..N_FINGERS {
        let pad_center = kin.fingers[finger].pad.translation.vector;
        if seg.distance(&pad_center) > reach + pad_bounding_radius {
            continue;
        }
        let start = finger * TAXELS_PER_PAD;
        for (offset, p) in kin.taxel_positions[start..start + TAXELS_PER_PAD].iter().enumerate() {
            let on_axis = seg.closest_point(p);
            let delta = p - on_axis;
            let d = delta.norm();
            if d < reach {
                let normal = if d > 1e-12 { delta / d } else { kin.taxel_normals[start + offset] };
                contacts.push(Contact {
                    taxel: start + offset,
                    point: on_axis + seg.radius * normal,
                    normal,
                    penetration: reach - d,
                    normal_force: 0.0,
                    tangential_force: Vector3::zeros(),
                });
            }
        }
    }
    contacts
}

/// Normal and tangential penalty forces on the taxel side of a contact.
///
/// `relative_velocity` is the taxel velocity minus the stick surface velocity.
/// Normal: `k·pen + c·max(pen_rate, 0)`, floored at zero. Tangential:
/// viscous `-c_t·v_t` capped at `mu·normal`.
pub fn penalty_force(
    contact: &Contact,
    params: &ContactParams,
    mu: f64,
    relative_velocity: &Vector3<f64>,
) -> (f64, Vector3<f64>) {
    if contact.penetration <= 0.0 {
        return (0.0, Vector3::zeros());
    }
    let n = contact.normal;
    let vn = n.dot(relative_velocity);
    let rate = (-vn).max(0.0);
    let normal = (params.stiffness * contact.penetration + params.damping * rate).max(0.0);
    let vt = relative_velocity - vn * n;
    let speed = vt.norm();
    let viscous = params.tangential_damping * speed;
    let cap = mu * normal;
    let tangential = if speed < 1e-15 {
        Vector3::zeros()
    } else if viscous <= cap {
        -params.tangential_damping * vt
    } else {
        -(cap / speed) * vt
    };
    (normal, tangential)
}
