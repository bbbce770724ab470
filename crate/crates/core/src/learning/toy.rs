//! One-joint reach task: drive a single position-controlled finger joint to a
//! random target angle by integrating bounded target increments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::rollout::{Environment, Transition};
use crate::error::Result;
use crate::hand::joint_rig::JointRig;
use crate::hand::model::HandModel;

#[derive(Debug, Clone)]
pub struct ReachTask {
    pub rig: JointRig,
    pub physics_dt: f64,
    pub substeps: usize,
    pub max_increment: f64,
    pub horizon: usize,
    /// Start and goal angles are drawn from `center ± spread`.
    pub center: f64,
    pub spread: f64,
    pub goal: f64,
    pub command: f64,
    pub steps: usize,
}

impl ReachTask {
    /// Distal joint of finger 0 of the default hand.
    pub fn new() -> Self {
        let rig = JointRig::from_model(&HandModel::default(), 1);
        Self { rig, physics_dt: 1e-3, substeps: 20, max_increment: 0.05, horizon: 50, center: 0.0, spread: 0.5, goal: 0.0, command: 0.0, steps: 0 }
    }

    fn observation(&self) -> Vec<f64> {
        vec![self.rig.q - self.goal, 0.05 * self.rig.qdot, self.command - self.goal]
    }

    pub fn reward(&self) -> f64 {
        let e = (self.rig.q - self.goal) / 0.5;
        1.0 - e * e
    }

    /// Action that moves the command straight toward the goal at full rate.
    pub fn oracle_action(&self) -> f64 {
        ((self.goal - self.command) / self.max_increment).clamp(-1.0, 1.0)
    }
}

impl Default for ReachTask {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for ReachTask {
    fn observation_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = self.center + rng.random_range(-self.spread..=self.spread);
        self.goal = self.center + rng.random_range(-self.spread..=self.spread);
        self.rig.reset(start);
        self.command = start;
        self.steps = 0;
        Ok(self.observation())
    }

    fn step(&mut self, action: &[f64]) -> Result<Transition> {
        let delta = (action[0] * self.max_increment).clamp(-self.max_increment, self.max_increment);
        self.command = self.rig.spec.clamp(self.command + delta);
        for _ in 0..self.substeps {
            self.rig.step(self.command, 0.0, self.physics_dt)?;
        }
        self.steps += 1;
        let err = (self.rig.q - self.goal).abs();
        Ok(Transition {
            observation: self.observation(),
            reward: self.reward(),
            terminated: false,
            truncated: self.steps >= self.horizon,
            errors: Some((err, 0.0)),
        })
    }
}

/// Mean return of `policy(obs, task) -> action` over episodes seeded `0..n`.
pub fn mean_return(task: &ReachTask, episodes: u64, mut policy: impl FnMut(&[f64], &ReachTask) -> Result<f64>) -> Result<f64> {
    let mut env = task.clone();
    let mut total = 0.0;
    for seed in 0..episodes {
        let mut obs = env.reset(seed)?;
        loop {
            let a = policy(&obs, &env)?;
            let tr = env.step(&[a])?;
            total += tr.reward;
            obs = tr.observation;
            if tr.terminated || tr.truncated {
                break;
            }
        }
    }
    Ok(total / episodes as f64)
}
