//! Kinematics and forward dynamics of the three-finger hand and the stick.

pub mod dynamics;
pub mod grasp;
pub mod joint_rig;
pub mod kinematics;
pub mod model;
pub mod state;

pub use dynamics::{
    apply_self_lock, commanded_direction, effective_joint_angle, pd_torque, Direction, StepOptions, World,
};
pub use kinematics::{forward_kinematics, HandKinematics};
pub use model::{FingerSpec, HandModel, JointSpec, PadGeometry, StickModel, N_ACTUATED, N_FINGERS};
pub use state::{BacklashState, SimState};
