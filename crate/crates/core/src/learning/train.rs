//! Training loop: collect, estimate advantages, update, log.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gae::{gae, normalize_advantages};
use super::policy::ActorCritic;
use super::ppo::{ppo_update, Batch, Optimizers, PpoConfig, UpdateStats};
use super::rollout::{collect_parallel, EpisodeStats, Environment, Segment, Worker};
use crate::error::{Error, Result};
use crate::seed::{rng_for, Subsystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lambda: f64,
    #[serde(flatten)]
    pub ppo: PpoConfig,
    pub n_envs: usize,
    pub steps_per_env: usize,
    pub total_steps: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub init_log_std: f64,
    pub normalize_observations: bool,
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            ppo: PpoConfig::default(),
            n_envs: 8,
            steps_per_env: 2048,
            total_steps: 5_000_000,
            seed: 0,
            hidden: vec![64, 64],
            init_log_std: 0.3f64.ln(),
            normalize_observations: true,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must be in [0, 1]");
        }
        if !(self.ppo.clip > 0.0) {
            return bad("clip must be positive");
        }
        if !(self.ppo.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.n_envs == 0 || self.steps_per_env == 0 || self.ppo.minibatch_size == 0 {
            return bad("n_envs, steps_per_env and minibatch_size must be positive");
        }
        Ok(())
    }

    pub fn steps_per_iteration(&self) -> usize {
        self.n_envs * self.steps_per_env
    }

    pub fn iterations(&self) -> usize {
        self.total_steps.div_ceil(self.steps_per_iteration()).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub iteration: usize,
    pub env_steps: usize,
    /// Means over episodes finished during the iteration (NaN if none).
    pub mean_return: f64,
    pub mean_p_err: f64,
    pub mean_q_err: f64,
    pub episodes: usize,
    pub discarded: usize,
    pub update: UpdateStats,
}

pub const CURVE_HEADER: [&str; 11] = [
    "iteration",
    "env_steps",
    "mean_return",
    "mean_p_err",
    "mean_q_err",
    "episodes",
    "discarded",
    "policy_loss",
    "value_loss",
    "approx_kl",
    "clip_fraction",
];

pub fn write_curve<W: Write>(writer: W, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CURVE_HEADER)?;
    for c in curve {
        w.write_record([
            c.iteration.to_string(),
            c.env_steps.to_string(),
            c.mean_return.to_string(),
            c.mean_p_err.to_string(),
            c.mean_q_err.to_string(),
            c.episodes.to_string(),
            c.discarded.to_string(),
            c.update.policy_loss.to_string(),
            c.update.value_loss.to_string(),
            c.update.approx_kl.to_string(),
            c.update.clip_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_curve(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    write_curve(std::fs::File::create(path)?, curve)
}

fn mean_of(eps: &[EpisodeStats], f: impl Fn(&EpisodeStats) -> f64) -> f64 {
    let vals: Vec<f64> = eps.iter().map(f).filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        f64::NAN
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Builds the normalized-advantage batch from worker segments (in order).
pub fn build_batch(model: &ActorCritic, segments: &[Segment], gamma: f64, lambda: f64) -> Batch {
    let n: usize = segments.iter().map(|s| s.obs.len()).sum();
    let mut obs = DMatrix::zeros(model.obs_dim(), n);
    let mut actions = DMatrix::zeros(model.action_dim(), n);
    let mut logp = Vec::with_capacity(n);
    let mut advantages = Vec::with_capacity(n);
    let mut returns = Vec::with_capacity(n);
    let mut col = 0;
    for seg in segments {
        let (adv, ret) = gae(&seg.rewards, &seg.values, &seg.dones, seg.last_value, gamma, lambda);
        for t in 0..seg.obs.len() {
            obs.set_column(col, &DVector::from_vec(model.normalizer.normalize(&seg.obs[t])));
            actions.set_column(col, &DVector::from_column_slice(&seg.actions[t]));
            col += 1;
        }
        logp.extend_from_slice(&seg.logp);
        advantages.extend(adv);
        returns.extend(ret);
    }
    normalize_advantages(&mut advantages);
    Batch { obs, actions, logp_old: logp, advantages, returns }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ActorCritic,
    pub curve: Vec<CurvePoint>,
}

/// PPO training. `make_env(i)` builds the environment for worker `i`;
/// `on_iteration` sees every curve point with the current model (for logging
/// and checkpoints) and can abort by returning an error.
pub fn train<E, F, C>(mut make_env: F, cfg: &TrainConfig, mut on_iteration: C) -> Result<TrainOutcome>
where
    E: Environment,
    F: FnMut(u32) -> Result<E>,
    C: FnMut(&CurvePoint, &ActorCritic) -> Result<()>,
{
    cfg.validate()?;
    let mut workers = Vec::with_capacity(cfg.n_envs);
    for i in 0..cfg.n_envs as u32 {
        workers.push(Worker::new(make_env(i)?, i, cfg.seed));
    }
    let obs_dim = workers[0].env.observation_dim();
    let act_dim = workers[0].env.action_dim();
    let mut model = ActorCritic::new(obs_dim, act_dim, &cfg.hidden, cfg.init_log_std, cfg.normalize_observations, &mut rng_for(cfg.seed, Subsystem::PolicyInit, 0));
    let mut opt = Optimizers::new(&model, cfg.ppo.learning_rate);
    let mut mb_rng = rng_for(cfg.seed, Subsystem::Minibatch, 0);
    let mut curve = Vec::new();
    let mut env_steps = 0;

    // a first pass of observations so the normalizer starts from data
    if cfg.normalize_observations {
        let mut first = Vec::new();
        for w in &mut workers {
            first.push(w.env.reset(cfg.seed)?);
        }
        model.normalizer.update(&first);
    }

    for iteration in 0..cfg.iterations() {
        let segments = collect_parallel(&mut workers, &model, cfg.steps_per_env, cfg.gamma, cfg.threads)?;
        env_steps += cfg.steps_per_iteration();
        let batch = build_batch(&model, &segments, cfg.gamma, cfg.lambda);
        let update = match ppo_update(&mut model, &mut opt, &batch, &cfg.ppo, &mut mb_rng) {
            Ok(u) => u,
            Err(Error::NonFiniteLoss) => UpdateStats { aborted: true, ..UpdateStats::default() },
            Err(e) => return Err(e),
        };
        for seg in &segments {
            model.normalizer.update(&seg.obs);
        }
        let episodes: Vec<EpisodeStats> = segments.iter().flat_map(|s| s.episodes.iter().copied()).collect();
        let point = CurvePoint {
            iteration,
            env_steps,
            mean_return: mean_of(&episodes, |e| e.ret),
            mean_p_err: mean_of(&episodes, |e| e.mean_p_err),
            mean_q_err: mean_of(&episodes, |e| e.mean_q_err),
            episodes: episodes.len(),
            discarded: segments.iter().map(|s| s.discarded).sum(),
            update,
        };
        log::info!(
            "iter {iteration} steps {env_steps} return {:.3} p_err {:.4} q_err {:.3} kl {:.4}",
            point.mean_return,
            point.mean_p_err,
            point.mean_q_err,
            update.approx_kl
        );
        on_iteration(&point, &model)?;
        curve.push(point);
    }
    Ok(TrainOutcome { model, curve })
}
