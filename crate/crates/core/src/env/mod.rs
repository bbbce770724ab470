//! The manipulation task: references, observations, rewards, initial states
//! and per-episode randomization.

pub mod initial_states;
pub mod observation;
pub mod randomization;
pub mod reference;
pub mod reward;
pub mod task;

pub use initial_states::{generate_initial_states, InitialState, InitialStateSet, SamplerConfig};
pub use observation::{build_observation, ObservationVariant, CONTACT_SCALE};
pub use randomization::{JointGains, PhysicalParams, RandomizationSpec, TruncatedNormal};
pub use reference::{desired_axis, sample_reference, Anchor, ReferenceKind, ReferenceParams, ReferenceSample, ReferenceTrajectory};
pub use reward::{reward, terminate, RewardWeights, StickPose};
pub use task::{apply_action, HandEnv, StepInfo, StepOutcome, TaskConfig};
