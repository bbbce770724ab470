//! Policy optimization: MLPs with hand-written backprop, GAE, PPO and
//! parallel rollout collection.

pub mod checkpoint;
pub mod gae;
pub mod mlp;
pub mod normalizer;
pub mod optim;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod toy;
pub mod train;

pub use mlp::Mlp;
pub use policy::ActorCritic;
pub use ppo::{ppo_update, Batch, PpoConfig};
pub use rollout::{Environment, EpisodeStats, Transition};
pub use train::{train, CurvePoint, TrainConfig, TrainOutcome};
