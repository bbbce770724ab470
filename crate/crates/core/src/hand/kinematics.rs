use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion, Vector3};

use super::model::{FingerSpec, HandModel, N_ACTUATED, N_FINGERS};
use crate::tactile::layout::{TaxelLayout, TAXELS_PER_PAD};

/// World poses of one finger's frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerPose {
    pub base: Isometry3<f64>,
    pub proximal_link: Isometry3<f64>,
    pub distal_link: Isometry3<f64>,
    /// Pad-local frame (x along the finger, z the patch-center normal).
    pub pad: Isometry3<f64>,
    /// World direction of the flexion axis (shared by both joints).
    pub flexion_axis: Vector3<f64>,
}

impl FingerPose {
    pub fn proximal_origin(&self) -> Vector3<f64> {
        self.proximal_link.translation.vector
    }

    pub fn distal_origin(&self) -> Vector3<f64> {
        self.distal_link.translation.vector
    }
}

/// Output of [`forward_kinematics`].
#[derive(Debug, Clone, PartialEq)]
pub struct HandKinematics {
    pub fingers: [FingerPose; N_FINGERS],
    /// Taxel centers in world coordinates, indexed by global taxel id.
    pub taxel_positions: Vec<Vector3<f64>>,
    pub taxel_normals: Vec<Vector3<f64>>,
}

/// Maps pad-local axes into distal-link axes: pad x → link x, pad y → -link z, pad z → link y.
fn pad_in_link() -> UnitQuaternion<f64> {
    let m = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

pub fn finger_base(finger: &FingerSpec) -> Isometry3<f64> {
    let x = Vector3::from(finger.pointing).normalize();
    let y = Vector3::from(finger.inner).normalize();
    let z = x.cross(&y);
    let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
    Isometry3::from_parts(Translation3::from(Vector3::from(finger.base_position)), UnitQuaternion::from_rotation_matrix(&rot))
}

fn rotation_about(axis: [f64; 3], angle: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::from(axis)), angle)
}

/// Chains the fixed base transform, the (zero) spread joint and the two
/// flexion joints with the given link-side angles.
pub fn finger_pose(model: &HandModel, finger: usize, proximal_angle: f64, distal_angle: f64) -> FingerPose {
    let spec = &model.fingers[finger];
    let base = finger_base(spec);
    let spread = spec.spread.as_ref().map(|j| rotation_about(j.axis, 0.0)).unwrap_or_else(UnitQuaternion::identity);
    let root = base * Isometry3::from_parts(Translation3::identity(), spread);
    let proximal_link = root * Isometry3::from_parts(Translation3::identity(), rotation_about(spec.proximal.axis, proximal_angle));
    let distal_link = proximal_link
        * Isometry3::from_parts(
            Translation3::new(spec.proximal_length, 0.0, 0.0),
            rotation_about(spec.distal.axis, distal_angle),
        );
    let pad = distal_link
        * Isometry3::from_parts(
            Translation3::new(model.pad.center_along_link, model.pad.surface_offset, 0.0),
            pad_in_link(),
        );
    let flexion_axis = proximal_link.rotation * Vector3::from(spec.proximal.axis);
    FingerPose { base, proximal_link, distal_link, pad, flexion_axis }
}

/// Link poses and taxel world positions for the given actuated angles and
/// backlash offsets. Pure and deterministic.
pub fn forward_kinematics(
    model: &HandModel,
    layout: &TaxelLayout,
    q: &[f64; N_ACTUATED],
    backlash_offsets: &[f64; N_FINGERS],
) -> HandKinematics {
    let fingers: [FingerPose; N_FINGERS] =
        std::array::from_fn(|f| finger_pose(model, f, q[2 * f] + backlash_offsets[f], q[2 * f + 1]));
    let mut taxel_positions = Vec::with_capacity(N_FINGERS * TAXELS_PER_PAD);
    let mut taxel_normals = Vec::with_capacity(N_FINGERS * TAXELS_PER_PAD);
    for pose in &fingers {
        let rot = pose.pad.rotation.to_rotation_matrix();
        let origin = pose.pad.translation.vector;
        for (p, n) in layout.positions.iter().zip(&layout.normals) {
            taxel_positions.push(origin + rot * p);
            taxel_normals.push(rot * n);
        }
    }
    HandKinematics { fingers, taxel_positions, taxel_normals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_pose_matches_hand_computed_chain() {
        let model = HandModel::canonical();
        let layout = TaxelLayout::from_pad(&model.pad);
        let kin = forward_kinematics(&model, &layout, &[0.0; 6], &[0.0; 3]);
        for (f, finger) in model.fingers.iter().enumerate() {
            let x = Vector3::from(finger.pointing);
            let y = Vector3::from(finger.inner);
            let z = x.cross(&y);
            let pad_center = Vector3::from(finger.base_position)
                + (finger.proximal_length + model.pad.center_along_link) * x
                + model.pad.surface_offset * y;
            for (i, p) in layout.positions.iter().enumerate() {
                let expected = pad_center + p.x * x - p.y * z + p.z * y;
                assert!((kin.taxel_positions[f * 128 + i] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pad_normal_faces_flexion_side() {
        let model = HandModel::canonical();
        let pose = finger_pose(&model, 1, 0.4, -0.4);
        let normal = pose.pad.rotation * Vector3::z();
        // finger 2 flexes toward -x; with the distal joint undoing the proximal
        // rotation the pad faces straight at -x
        assert!((normal - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn identical_inputs_give_bitwise_identical_output() {
        let model = HandModel::canonical();
        let layout = TaxelLayout::from_pad(&model.pad);
        let q = [0.3, -0.2, 0.5, -0.4, 0.1, 0.05];
        let a = forward_kinematics(&model, &layout, &q, &[0.01, -0.02, 0.0]);
        let b = forward_kinematics(&model, &layout, &q, &[0.01, -0.02, 0.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn backlash_offset_adds_to_proximal_angle() {
        let model = HandModel::canonical();
        let layout = TaxelLayout::from_pad(&model.pad);
        let a = forward_kinematics(&model, &layout, &[0.53, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0; 3]);
        let b = forward_kinematics(&model, &layout, &[0.50, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.03, 0.0, 0.0]);
        for (pa, pb) in a.taxel_positions.iter().zip(&b.taxel_positions) {
            assert!((pa - pb).norm() < 1e-14);
        }
    }
}
