//! The stick-tracking environment.

use std::sync::Arc;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::initial_states::InitialState;
use super::observation::{build_observation, scaled_contact_centers, ObservationVariant, CONTACT_SCALE};
use super::randomization::{PhysicalParams, RandomizationSpec};
use super::reference::{Anchor, ReferenceKind, ReferenceParams, ReferenceSample, ReferenceTrajectory};
use super::reward::{axis_angle_deg, reward_from_terms, terminate, total_contact_force, RewardWeights, StickPose};
use crate::error::{Error, Result};
use crate::hand::dynamics::{StepOptions, World};
use crate::hand::model::{N_ACTUATED, N_FINGERS};
use crate::hand::state::SimState;
use crate::seed::{rng_for, Subsystem};
use crate::tactile::contact::ContactSet;
use crate::tactile::layout::N_TAXELS;
use crate::tactile::signal::{binarize, calibrate_offsets, synthesize_raw, SensorModel, TactileFrame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskConfig {
    pub kind: ReferenceKind,
    pub reference: ReferenceParams,
    /// Draw a fresh line direction every episode.
    pub random_line_direction: bool,
    pub observation: ObservationVariant,
    pub physics_dt: f64,
    /// Physics steps per policy step.
    pub substeps: usize,
    /// Joint displacement per unit action (rad).
    pub action_scale: f64,
    /// Per-step displacement clamp (rad).
    pub max_displacement: f64,
    /// The commanded target never leads the measured joint by more than this (rad).
    pub max_lead: f64,
    /// Squeeze added to the stored proximal and distal angles at reset (rad).
    pub preload: [f64; 2],
    /// Gravity-free settle at reset (s).
    pub settle_time: f64,
    pub contact_scale: f64,
    pub sensor: SensorModel,
    /// Per-taxel sensor drift is uniform in [0, drift_max] each episode.
    pub drift_max: f64,
    /// No-contact frames averaged into the offsets at reset.
    pub offset_frames: usize,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            kind: ReferenceKind::Circle,
            reference: ReferenceParams::default(),
            random_line_direction: true,
            observation: ObservationVariant::ContactCenters,
            physics_dt: 1e-3,
            substeps: 20,
            action_scale: 0.05,
            max_displacement: 0.05,
            max_lead: 0.15,
            preload: [0.03, 0.03],
            settle_time: 0.1,
            contact_scale: CONTACT_SCALE,
            sensor: SensorModel::default(),
            drift_max: 0.5,
            offset_frames: 10,
        }
    }
}

impl TaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.physics_dt > 0.0) || self.substeps == 0 || !(self.max_displacement > 0.0) || !(self.action_scale > 0.0) {
            return Err(Error::InvalidConfig("task needs positive physics_dt, substeps, action_scale and max_displacement".into()));
        }
        if self.offset_frames == 0 {
            return Err(Error::InvalidConfig("offset_frames must be at least 1".into()));
        }
        Ok(())
    }

    pub fn control_dt(&self) -> f64 {
        self.physics_dt * self.substeps as f64
    }
}

/// New joint targets: previous targets moved by the clamped displacement,
/// kept within the joint limits and within `max_lead` of the measured joints.
pub fn apply_action(
    previous_target: &[f64; N_ACTUATED],
    measured: &[f64; N_ACTUATED],
    action: &[f64],
    cfg: &TaskConfig,
    lower: &[f64; N_ACTUATED],
    upper: &[f64; N_ACTUATED],
) -> [f64; N_ACTUATED] {
    std::array::from_fn(|i| {
        let d = (action[i] * cfg.action_scale).clamp(-cfg.max_displacement, cfg.max_displacement);
        let lead_lo = measured[i] - cfg.max_lead;
        let lead_hi = measured[i] + cfg.max_lead;
        (previous_target[i] + d).clamp(lead_lo.min(previous_target[i]), lead_hi.max(previous_target[i])).clamp(lower[i], upper[i])
    })
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub t: f64,
    pub reference: ReferenceSample,
    pub actual: StickPose,
    /// Lower-endpoint position error (m).
    pub p_err_lower: f64,
    pub p_err_upper: f64,
    /// Angle between desired and actual axis (deg).
    pub q_err_deg: f64,
    pub total_force: f64,
    pub q: [f64; N_ACTUATED],
    pub q_target: [f64; N_ACTUATED],
    pub contact_centers: [Option<Vector3<f64>>; N_FINGERS],
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub info: StepInfo,
}

/// One environment instance. Independent of every other instance.
#[derive(Debug, Clone)]
pub struct HandEnv {
    pub nominal: World,
    pub world: World,
    pub task: TaskConfig,
    pub weights: RewardWeights,
    pub randomization: RandomizationSpec,
    states: Arc<Vec<InitialState>>,
    pub state: SimState,
    pub q_target: [f64; N_ACTUATED],
    pub steps: usize,
    pub reference: ReferenceTrajectory,
    pub params: Option<PhysicalParams>,
    pub frame: TactileFrame,
    pub contacts: ContactSet,
    offsets: Vec<f64>,
    drift: Vec<f64>,
    noise_rng: ChaCha8Rng,
    /// Index of the initial state used by the current episode.
    pub initial_index: usize,
}

impl HandEnv {
    pub fn new(world: World, task: TaskConfig, weights: RewardWeights, randomization: RandomizationSpec, states: Arc<Vec<InitialState>>) -> Result<Self> {
        task.validate()?;
        weights.validate()?;
        randomization.validate()?;
        if states.is_empty() {
            return Err(Error::InvalidConfig("environment needs at least one initial state".into()));
        }
        let reference = ReferenceTrajectory::new(task.kind, task.reference.clone(), Anchor::nominal(world.stick.length));
        let state = states[0].to_sim_state();
        let q_target = state.q;
        Ok(Self {
            nominal: world.clone(),
            world,
            task,
            weights,
            randomization,
            states,
            state,
            q_target,
            steps: 0,
            reference,
            params: None,
            frame: TactileFrame::new(vec![0.0; N_TAXELS], vec![0.0; N_TAXELS], 0.0),
            contacts: Vec::new(),
            offsets: vec![0.0; N_TAXELS],
            drift: vec![0.0; N_TAXELS],
            noise_rng: ChaCha8Rng::seed_from_u64(0),
            initial_index: 0,
        })
    }

    pub fn observation_dim(&self) -> usize {
        self.task.observation.dim()
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.task.control_dt()
    }

    /// Starts an episode: randomized physics, a uniformly drawn initial state
    /// with the grip preload, sensor offsets from no-contact frames, and a
    /// gravity-free settle.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = rng_for(seed, Subsystem::EnvReset, 0);
        let mut world = self.nominal.clone();
        let params = self.randomization.sample(&world.hand, &mut rng);
        params.apply(&mut world);
        self.world = world;
        self.params = Some(params);

        self.initial_index = rng.random_range(0..self.states.len());
        self.state = self.states[self.initial_index].to_sim_state();
        let lower = self.world.hand.lower_limits();
        let upper = self.world.hand.upper_limits();
        self.q_target = std::array::from_fn(|i| (self.state.q[i] + self.task.preload[i % 2]).clamp(lower[i], upper[i]));

        let mut params = self.task.reference.clone();
        if self.task.kind == ReferenceKind::Line && self.task.random_line_direction {
            params.line_angle = rng.random_range(0.0..std::f64::consts::TAU);
        }
        self.reference = ReferenceTrajectory::new(self.task.kind, params, Anchor::nominal(self.world.stick.length));

        self.noise_rng = rng_for(seed, Subsystem::SensorNoise, 0);
        let drift_max = self.task.drift_max;
        self.drift = (0..N_TAXELS).map(|_| if drift_max > 0.0 { rng.random_range(0.0..drift_max) } else { 0.0 }).collect();
        let sensor = &self.task.sensor;
        let frames: Vec<Vec<f64>> = (0..self.task.offset_frames)
            .map(|_| synthesize_raw(&Vec::new(), &self.world.layout, sensor.gain, &sensor.crosstalk, sensor.noise_std, Some(&self.drift), &mut self.noise_rng))
            .collect();
        self.offsets = calibrate_offsets(&frames)?;

        let settle = (self.task.settle_time / self.task.physics_dt).round() as usize;
        self.contacts.clear();
        for _ in 0..settle {
            self.contacts = self.world.step(&mut self.state, &self.q_target, self.task.physics_dt, StepOptions { gravity: false })?;
        }
        self.state.t = 0.0;
        self.steps = 0;
        self.read_sensors();
        Ok(self.observe())
    }

    fn read_sensors(&mut self) {
        let s = &self.task.sensor;
        let raw = synthesize_raw(&self.contacts, &self.world.layout, s.gain, &s.crosstalk, s.noise_std, Some(&self.drift), &mut self.noise_rng);
        self.frame = TactileFrame::new(raw, self.offsets.clone(), s.threshold);
        binarize(&mut self.frame);
    }

    fn observe(&self) -> Vec<f64> {
        let u = self.reference.sample(self.time()).u;
        build_observation(self.task.observation, &self.world.hand, &self.state, &self.frame, &self.world.layout, &u, self.task.contact_scale)
    }

    pub fn stick_pose(&self) -> StickPose {
        let (p1, p2) = self.state.stick_endpoints(self.world.stick.length);
        StickPose { p1, p2, u: self.state.stick_axis() }
    }

    /// Applies `action` (six joint displacements in units of `action_scale`)
    /// for one policy step.
    pub fn step(&mut self, action: &[f64]) -> Result<StepOutcome> {
        if action.len() != N_ACTUATED {
            return Err(Error::ShapeMismatch { expected: N_ACTUATED, got: action.len() });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::Malformed("non-finite action".into()));
        }
        let lower = self.world.hand.lower_limits();
        let upper = self.world.hand.upper_limits();
        self.q_target = apply_action(&self.q_target, &self.state.q, action, &self.task, &lower, &upper);
        for _ in 0..self.task.substeps {
            self.contacts = self.world.step(&mut self.state, &self.q_target, self.task.physics_dt, StepOptions::default())?;
        }
        self.steps += 1;
        self.read_sensors();

        let t = self.time();
        let reference = self.reference.sample(t);
        let actual = self.stick_pose();
        let total_force = total_contact_force(&self.contacts);
        let reward = reward_from_terms(&self.weights, &actual, &reference, total_force);
        let dropped = terminate(self.state.stick_position.z, self.randomization.drop_height);
        let truncated = !dropped && self.steps >= self.randomization.episode_length;
        let info = StepInfo {
            t,
            reference,
            actual,
            p_err_lower: (reference.p2 - actual.p2).norm(),
            p_err_upper: (reference.p1 - actual.p1).norm(),
            q_err_deg: axis_angle_deg(&reference.u, &actual.u),
            total_force,
            q: self.state.q,
            q_target: self.q_target,
            contact_centers: scaled_contact_centers(&self.frame, &self.world.layout, 1.0),
            dropped,
        };
        Ok(StepOutcome { observation: self.observe(), reward, terminated: dropped, truncated, info })
    }
}

impl crate::learning::Environment for HandEnv {
    fn observation_dim(&self) -> usize {
        self.task.observation.dim()
    }

    fn action_dim(&self) -> usize {
        N_ACTUATED
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        HandEnv::reset(self, seed)
    }

    fn step(&mut self, action: &[f64]) -> Result<crate::learning::Transition> {
        let o = HandEnv::step(self, action)?;
        Ok(crate::learning::Transition {
            observation: o.observation,
            reward: o.reward,
            terminated: o.terminated,
            truncated: o.truncated,
            errors: Some((o.info.p_err_lower, o.info.q_err_deg)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_action_keeps_targets() {
        let cfg = TaskConfig::default();
        let prev = [0.5; N_ACTUATED];
        let t = apply_action(&prev, &prev, &[0.0; N_ACTUATED], &cfg, &[-1.0; N_ACTUATED], &[1.0; N_ACTUATED]);
        assert_eq!(t, prev);
    }

    #[test]
    fn displacement_is_clipped_and_limited() {
        let cfg = TaskConfig::default();
        let prev = [0.5, 0.5, 0.98, 0.5, 0.5, 0.5];
        let t = apply_action(&prev, &prev, &[100.0, -100.0, 1.0, 0.3, 0.0, 0.0], &cfg, &[-1.0; N_ACTUATED], &[1.0; N_ACTUATED]);
        assert!((t[0] - 0.55).abs() < 1e-15);
        assert!((t[1] - 0.45).abs() < 1e-15);
        assert_eq!(t[2], 1.0);
        assert!((t[3] - 0.515).abs() < 1e-15);
    }

    #[test]
    fn target_lead_is_bounded() {
        let cfg = TaskConfig::default();
        let measured = [0.0; N_ACTUATED];
        let mut target = measured;
        for _ in 0..10 {
            target = apply_action(&target, &measured, &[1.0; N_ACTUATED], &cfg, &[-2.0; N_ACTUATED], &[2.0; N_ACTUATED]);
        }
        assert!(target.iter().all(|&t| (t - cfg.max_lead).abs() < 1e-12));
    }
}
