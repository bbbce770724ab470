//! Nominal grasp posture used to seed the initial-state sampler and examples.

use nalgebra::{UnitQuaternion, Vector3};

use super::dynamics::World;
use super::kinematics::finger_pose;
use super::model::{N_ACTUATED, N_FINGERS};
use super::state::SimState;

/// Stick center in the nominal grasp; the grasp pivot is the world origin.
pub fn nominal_stick_center(stick_length: f64) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, 0.04 - 0.5 * stick_length)
}

/// Distance from the pad-center surface point of `finger` to the vertical line
/// through the origin, with the distal joint at `-alpha` so the distal link
/// stays parallel to the finger's pointing direction.
fn pad_gap(world: &World, finger: usize, alpha: f64) -> f64 {
    let pose = finger_pose(&world.hand, finger, alpha, -alpha);
    let p = pose.pad.translation.vector;
    (p.x * p.x + p.y * p.y).sqrt()
}

/// Proximal flexion at which the pad center of `finger` is `clearance` away
/// from the stick surface of a vertical stick through the pivot. Bisection on
/// the proximal angle; the gap shrinks monotonically while the pad closes.
pub fn touching_angle(world: &World, finger: usize, clearance: f64) -> f64 {
    let goal = world.stick.radius + clearance;
    let spec = &world.hand.fingers[finger].proximal;
    let (mut lo, mut hi) = (0.0_f64, spec.upper().min(std::f64::consts::FRAC_PI_2));
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let pose = finger_pose(&world.hand, finger, mid, -mid);
        let p = pose.pad.translation.vector;
        let n = pose.pad.rotation * Vector3::z();
        // past the axis the pad faces away from it
        let facing = n.dot(&(-Vector3::new(p.x, p.y, 0.0))) > 0.0;
        if facing && pad_gap(world, finger, mid) > goal {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Joint angles with every pad just at sensing distance of a vertical stick.
pub fn nominal_joints(world: &World) -> [f64; N_ACTUATED] {
    let mut q = [0.0; N_ACTUATED];
    for f in 0..N_FINGERS {
        let alpha = touching_angle(world, f, world.layout.sensing_radius);
        q[2 * f] = alpha;
        q[2 * f + 1] = -alpha;
    }
    q
}

/// Vertical stick held at the nominal posture, at rest.
pub fn nominal_state(world: &World) -> SimState {
    SimState::new(nominal_joints(world), nominal_stick_center(world.stick.length), UnitQuaternion::identity())
}
