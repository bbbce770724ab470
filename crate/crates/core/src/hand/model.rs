use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of actuated joints (J0, J1, J3, J4, J6, J7).
pub const N_ACTUATED: usize = 6;
pub const N_FINGERS: usize = 3;

/// One revolute joint of the hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    /// Index in the J0..J7 numbering of the physical hand.
    pub id: usize,
    /// Unit rotation axis in the parent (finger base) frame.
    pub axis: [f64; 3],
    /// `[lower, upper]` in radians.
    pub limits: [f64; 2],
    pub kp: f64,
    pub kd: f64,
    /// `[lo, hi]` of the passive backlash sub-joint, relative to the gear position.
    pub backlash_range: [f64; 2],
    pub self_lock: bool,
    /// Reflected rotor inertia, kg·m².
    pub armature: f64,
    /// Passive joint damping, N·m·s/rad.
    pub damping: f64,
    /// Fixed joints are held at zero and contribute no degree of freedom.
    pub fixed: bool,
}

impl JointSpec {
    pub fn lower(&self) -> f64 {
        self.limits[0]
    }

    pub fn upper(&self) -> f64 {
        self.limits[1]
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.limits[0], self.limits[1])
    }

    pub fn has_backlash(&self) -> bool {
        self.backlash_range[0] < self.backlash_range[1]
    }

    pub fn validate(&self) -> Result<()> {
        let name = format!("J{}", self.id);
        let axis_norm = self.axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (axis_norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("{name}: axis is not unit length")));
        }
        if !(self.limits[0] < self.limits[1]) {
            return Err(Error::InvalidConfig(format!("{name}: lower limit must be below upper")));
        }
        if self.fixed {
            return Ok(());
        }
        if !(self.kp > 0.0 && self.kd > 0.0) || !self.kp.is_finite() || !self.kd.is_finite() {
            return Err(Error::InvalidConfig(format!("{name}: kp and kd must be positive")));
        }
        if !(self.backlash_range[0] <= 0.0 && 0.0 <= self.backlash_range[1]) {
            return Err(Error::InvalidConfig(format!("{name}: backlash range must bracket zero")));
        }
        if !(self.armature > 0.0) || self.damping < 0.0 {
            return Err(Error::InvalidConfig(format!("{name}: armature must be positive, damping non-negative")));
        }
        Ok(())
    }
}

/// Geometry of the curved tactile pad on a fingertip.
///
/// Taxels are laid out on a cylindrical patch whose axis runs along the distal
/// link. Pad-local frame: x along the finger, z the outward normal at the patch
/// center, y = z × x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadGeometry {
    pub radius: f64,
    /// Full arc angle in radians.
    pub arc: f64,
    pub length: f64,
    /// Taxels along the finger.
    pub columns: usize,
    /// Taxels around the arc.
    pub rows: usize,
    /// Distance of the pad center from the distal joint along the link.
    pub center_along_link: f64,
    /// Inward offset of the pad surface from the link center line.
    pub surface_offset: f64,
    /// Sensing sphere radius of each taxel.
    pub taxel_radius: f64,
}

impl Default for PadGeometry {
    fn default() -> Self {
        Self {
            radius: 0.012,
            arc: 120f64.to_radians(),
            length: 0.03,
            columns: 16,
            rows: 8,
            center_along_link: 0.025,
            surface_offset: 0.008,
            taxel_radius: 0.001,
        }
    }
}

impl PadGeometry {
    pub fn taxels(&self) -> usize {
        self.rows * self.columns
    }

    pub fn column_pitch(&self) -> f64 {
        self.length / self.columns as f64
    }

    /// Radius of a sphere around the pad center enclosing every taxel sphere.
    pub fn bounding_radius(&self) -> f64 {
        let half = 0.5 * self.length;
        let half_arc = 0.5 * self.arc;
        let lateral = self.radius * half_arc.sin();
        let depth = self.radius * (1.0 - half_arc.cos());
        (half * half + lateral * lateral + depth * depth).sqrt() + self.taxel_radius
    }
}

/// A finger: fixed base frame, an optional fixed spread joint, a proximal
/// worm-gear joint and a distal joint, both flexing about the base z axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerSpec {
    pub name: String,
    pub base_position: [f64; 3],
    /// Finger pointing direction in world coordinates (base x).
    pub pointing: [f64; 3],
    /// Flexion direction in world coordinates (base y); base z = x × y.
    pub inner: [f64; 3],
    pub spread: Option<JointSpec>,
    pub proximal: JointSpec,
    pub distal: JointSpec,
    pub proximal_length: f64,
    pub distal_length: f64,
    /// Inertia of the finger links about the proximal axis, carried by the
    /// backlash sub-joint.
    pub link_inertia: f64,
}

/// Kinematic and dynamic description of the three-finger hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandModel {
    pub fingers: Vec<FingerSpec>,
    pub pad: PadGeometry,
    /// Passive stiffness of the backlash sub-joints, N·m/rad.
    pub backlash_stiffness: f64,
    /// Passive damping of the backlash sub-joints, N·m·s/rad.
    pub backlash_damping: f64,
    /// Largest resultant fingertip force, N; sets the per-joint torque cap.
    pub max_fingertip_force: f64,
    pub gravity: f64,
}

impl Default for HandModel {
    fn default() -> Self {
        Self::canonical()
    }
}

fn flexion_joint(id: usize, limits: [f64; 2], proximal: bool) -> JointSpec {
    JointSpec {
        id,
        axis: [0.0, 0.0, 1.0],
        limits,
        kp: if proximal { 5.0 } else { 3.0 },
        kd: if proximal { 0.12 } else { 0.08 },
        backlash_range: if proximal { [-0.02, 0.02] } else { [0.0, 0.0] },
        self_lock: proximal,
        armature: if proximal { 5e-4 } else { 3e-4 },
        damping: if proximal { 0.01 } else { 0.005 },
        fixed: false,
    }
}

fn spread_joint(id: usize) -> JointSpec {
    JointSpec {
        id,
        axis: [0.0, 1.0, 0.0],
        limits: [-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2],
        kp: 1.0,
        kd: 0.1,
        backlash_range: [0.0, 0.0],
        self_lock: false,
        armature: 1e-4,
        damping: 0.0,
        fixed: true,
    }
}

impl HandModel {
    /// The canonical hand: the thumb (finger 1) opposes fingers 2 and 3, which
    /// are stacked vertically on the other side of the palm. The palm is the
    /// vertical plane y = -0.067; every finger points along +y and flexes about
    /// a vertical axis.
    pub fn canonical() -> Self {
        let proximal_limits = [-0.2, 1.4];
        let distal_limits = [-1.4, 1.0];
        let palm_y = -0.067;
        let half_width = 0.04;
        let finger = |name: &str, x: f64, z: f64, inner_x: f64, ids: [usize; 2], spread: Option<usize>| FingerSpec {
            name: name.to_string(),
            base_position: [x, palm_y, z],
            pointing: [0.0, 1.0, 0.0],
            inner: [inner_x, 0.0, 0.0],
            spread: spread.map(spread_joint),
            proximal: flexion_joint(ids[0], proximal_limits, true),
            distal: flexion_joint(ids[1], distal_limits, false),
            proximal_length: 0.05,
            distal_length: 0.04,
            link_inertia: 2e-5,
        };
        Self {
            fingers: vec![
                finger("thumb", -half_width, 0.0, 1.0, [0, 1], Some(2)),
                finger("finger2", half_width, 0.02, -1.0, [3, 4], Some(5)),
                finger("finger3", half_width, -0.02, -1.0, [6, 7], None),
            ],
            pad: PadGeometry::default(),
            backlash_stiffness: 0.1,
            backlash_damping: 0.01,
            max_fingertip_force: 15.0,
            gravity: 9.81,
        }
    }

    /// Actuated joints in observation/action order: (proximal, distal) per finger.
    pub fn actuated(&self) -> [&JointSpec; N_ACTUATED] {
        let f = &self.fingers;
        [&f[0].proximal, &f[0].distal, &f[1].proximal, &f[1].distal, &f[2].proximal, &f[2].distal]
    }

    pub fn actuated_mut(&mut self, index: usize) -> &mut JointSpec {
        let finger = &mut self.fingers[index / 2];
        if index % 2 == 0 {
            &mut finger.proximal
        } else {
            &mut finger.distal
        }
    }

    pub fn lower_limits(&self) -> [f64; N_ACTUATED] {
        self.actuated().map(|j| j.lower())
    }

    pub fn upper_limits(&self) -> [f64; N_ACTUATED] {
        self.actuated().map(|j| j.upper())
    }

    /// Per-joint torque cap so that the resultant fingertip force stays under
    /// `max_fingertip_force`.
    pub fn torque_cap(&self, finger: usize) -> f64 {
        self.max_fingertip_force * self.fingers[finger].distal_length
    }

    /// Looks up an actuated joint by its J-number.
    pub fn actuated_index(&self, joint_id: usize) -> Option<usize> {
        self.actuated().iter().position(|j| j.id == joint_id)
    }

    pub fn validate(&self) -> Result<()> {
        if self.fingers.len() != N_FINGERS {
            return Err(Error::InvalidConfig(format!("expected {N_FINGERS} fingers, got {}", self.fingers.len())));
        }
        if self.pad.taxels() != 128 {
            return Err(Error::InvalidConfig(format!("pad must carry 128 taxels, got {}", self.pad.taxels())));
        }
        for finger in &self.fingers {
            finger.proximal.validate()?;
            finger.distal.validate()?;
            if let Some(spread) = &finger.spread {
                spread.validate()?;
                if !spread.fixed {
                    return Err(Error::InvalidConfig(format!("{}: spread joint must be fixed", finger.name)));
                }
            }
            let dot: f64 = finger.pointing.iter().zip(&finger.inner).map(|(a, b)| a * b).sum();
            if dot.abs() > 1e-9 {
                return Err(Error::InvalidConfig(format!("{}: pointing and inner must be orthogonal", finger.name)));
            }
            if !(finger.proximal_length > 0.0 && finger.distal_length > 0.0 && finger.link_inertia > 0.0) {
                return Err(Error::InvalidConfig(format!("{}: link lengths and inertia must be positive", finger.name)));
            }
        }
        if self.backlash_stiffness < 0.0 || self.backlash_damping < 0.0 {
            return Err(Error::InvalidConfig("backlash stiffness/damping must be non-negative".into()));
        }
        Ok(())
    }
}

/// The manipulated slender cylinder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StickModel {
    pub length: f64,
    pub radius: f64,
    pub mass: f64,
    pub friction_mu: f64,
}

impl Default for StickModel {
    fn default() -> Self {
        Self { length: 0.15, radius: 0.004, mass: 0.03, friction_mu: 0.8 }
    }
}

impl StickModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.radius > 0.0 && self.mass > 0.0 && self.friction_mu > 0.0) {
            return Err(Error::InvalidConfig("stick parameters must be strictly positive".into()));
        }
        if self.radius / self.length >= 0.2 {
            return Err(Error::InvalidConfig("stick must be slender (radius/length < 0.2)".into()));
        }
        Ok(())
    }

    /// Principal inertia of a solid cylinder: (transverse, transverse, axial).
    pub fn principal_inertia(&self) -> [f64; 3] {
        let r2 = self.radius * self.radius;
        let transverse = self.mass * (3.0 * r2 + self.length * self.length) / 12.0;
        [transverse, transverse, 0.5 * self.mass * r2]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_model_is_valid() {
        HandModel::canonical().validate().unwrap();
        StickModel::default().validate().unwrap();
    }

    #[test]
    fn joint_numbering_follows_hand_layout() {
        let hand = HandModel::canonical();
        let ids: Vec<usize> = hand.actuated().iter().map(|j| j.id).collect();
        assert_eq!(ids, vec![0, 1, 3, 4, 6, 7]);
        let locked: Vec<usize> = hand.actuated().iter().filter(|j| j.self_lock).map(|j| j.id).collect();
        assert_eq!(locked, vec![0, 3, 6]);
        assert!(hand.fingers[0].spread.as_ref().unwrap().fixed);
        assert_eq!(hand.fingers[1].spread.as_ref().unwrap().id, 5);
    }

    #[test]
    fn rejects_bad_gains_and_backlash() {
        let mut hand = HandModel::canonical();
        hand.fingers[0].proximal.kp = 0.0;
        assert!(hand.validate().is_err());
        let mut hand = HandModel::canonical();
        hand.fingers[1].proximal.backlash_range = [0.01, 0.02];
        assert!(hand.validate().is_err());
        let mut hand = HandModel::canonical();
        hand.fingers[2].distal.limits = [0.5, 0.5];
        assert!(hand.validate().is_err());
    }

    #[test]
    fn torque_cap_matches_fingertip_force() {
        let hand = HandModel::canonical();
        assert!((hand.torque_cap(0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn stick_must_be_slender() {
        let stick = StickModel { length: 0.05, radius: 0.011, ..StickModel::default() };
        assert!(stick.validate().is_err());
    }
}
